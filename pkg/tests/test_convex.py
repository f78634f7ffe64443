"""Convex potentials: conjugates (closed form vs numerical search),
Bregman divergences, convexity checks, gradient ranges."""

import math

import numpy as np
import pytest

from srmarket.convex import (
    ConvexFn,
    DivergentConjugate,
    binary_lmsr_cost,
    binary_negentropy,
    bregman,
    check_convexity,
    conjugate,
    from_callables,
    gradient_range,
    hull_margin,
    interval_negentropy,
    log_partition,
    quadratic,
    simplex_negentropy,
)


class TestConjugate:
    def test_binary_negentropy_at_zero_is_log2(self):
        v, arg = conjugate(binary_negentropy(), 0.0)
        assert v == pytest.approx(math.log(2.0), abs=1e-12)
        assert arg[0] == pytest.approx(0.5, abs=1e-12)

    def test_quadratic_closed_form(self):
        v, arg = conjugate(quadratic(1), 2.0)
        assert v == pytest.approx(1.0, abs=1e-12)
        assert arg[0] == pytest.approx(1.0, abs=1e-12)

    def test_numeric_matches_closed_form_binary(self):
        g = binary_negentropy()
        numeric = ConvexFn(dim=1, value_fn=g.value_fn, grad_fn=g.grad_fn,
                           lo=g.lo, hi=g.hi, name="numeric")
        for q in (-2.0, -1.0, 0.0, 1.0, 2.0):
            v_num, _ = conjugate(numeric, q)
            v_cf, _ = conjugate(g, q)
            assert v_num == pytest.approx(v_cf, abs=1e-8)

    def test_numeric_matches_closed_form_lmsr(self):
        c = binary_lmsr_cost()
        numeric = ConvexFn(dim=1, value_fn=c.value_fn, grad_fn=c.grad_fn,
                           lo=c.lo, hi=c.hi, name="numeric-lmsr")
        g = binary_negentropy()
        for p in (0.15, 0.4, 0.5, 0.75, 0.9):
            v_num, _ = conjugate(numeric, p)
            assert v_num == pytest.approx(g.value([p]), abs=1e-8)

    def test_numeric_coercive_unbounded_domain(self):
        g = quadratic(1)
        numeric = ConvexFn(dim=1, value_fn=g.value_fn, grad_fn=g.grad_fn,
                           lo=g.lo, hi=g.hi, name="numeric-quad")
        v, arg = conjugate(numeric, 3.0)
        assert v == pytest.approx(9.0 / 4.0, abs=1e-8)
        assert arg[0] == pytest.approx(1.5, abs=1e-6)

    def test_divergent_supremum_rejected(self):
        lin = from_callables(1, lambda x: float(x[0]),
                             lambda x: np.array([1.0]))
        with pytest.raises(DivergentConjugate):
            conjugate(lin, 5.0)

    def test_interval_negentropy_conjugate(self):
        g = interval_negentropy(0.0, 3.0)
        # independent oracle: dense grid maximization of q x - G(x)
        for q in (-1.0, 0.0, 0.7):
            xs = np.linspace(1e-6, 3.0 - 1e-6, 300001)
            vals = q * xs - np.array([g.value([x]) for x in xs])
            v, arg = conjugate(g, q)
            assert v == pytest.approx(float(np.max(vals)), abs=1e-9)

    def test_fenchel_young(self):
        rng = np.random.default_rng(0)
        g = binary_negentropy()
        for _ in range(200):
            x = rng.uniform(0.01, 0.99)
            q = rng.normal(scale=3.0)
            vg = g.value([x])
            vc, _ = conjugate(g, q)
            assert vg + vc >= q * x - 1e-8
        # equality when q is the gradient at x
        for x in (0.2, 0.5, 0.9):
            q = g.grad([x])[0]
            vc, _ = conjugate(g, q)
            assert g.value([x]) + vc == pytest.approx(q * x, abs=1e-10)

    def test_double_conjugate_recovers_value(self):
        g = binary_negentropy()
        c = binary_lmsr_cost()
        for x in np.linspace(0.1, 0.9, 9):
            # G**(x) = sup_q q x - C(q), maximized at q = logit(x)
            q = math.log(x / (1 - x))
            assert q * x - c.value([q]) == pytest.approx(g.value([x]),
                                                         abs=1e-6)


class TestBregman:
    def test_quadratic_is_squared_distance(self):
        assert bregman(quadratic(1), 3.0, 1.0) == pytest.approx(4.0)

    def test_zero_at_equal_arguments(self):
        for x in (0.1, 0.5, 0.83):
            assert bregman(binary_negentropy(), x, x) == 0.0

    def test_negentropy_matches_direct_formula(self):
        g = binary_negentropy()
        y, x = 0.5, 0.25
        direct = (y * math.log(y / x) +
                  (1 - y) * math.log((1 - y) / (1 - x)))
        assert bregman(g, y, x) == pytest.approx(direct, abs=1e-12)
        assert bregman(g, y, x) > 0

    def test_nonnegativity_random(self):
        rng = np.random.default_rng(1)
        g = binary_negentropy()
        for _ in range(200):
            y, x = rng.uniform(0.01, 0.99, size=2)
            assert bregman(g, y, x) >= -1e-12

    def test_domain_enforced(self):
        with pytest.raises(ValueError):
            bregman(binary_negentropy(), 1.5, 0.5)


class TestConvexityCheck:
    def test_quadratic_passes(self):
        assert check_convexity(quadratic(1)).ok

    def test_concave_fails_with_witness(self):
        bad = from_callables(1, lambda x: -float(x[0]) ** 2,
                             lambda x: -2.0 * x)
        rep = check_convexity(bad)
        assert rep.verdict == "fails"
        assert "x" in rep.witness and "z" in rep.witness

    def test_log_partition_gradients_in_simplex(self):
        c = log_partition(np.array([[0.0], [1.0]]))
        rep = check_convexity(c, box=([-4.0], [4.0]))
        assert rep.ok
        for q in np.linspace(-5, 5, 21):
            g = c.grad([q])[0]
            assert 0.0 < g < 1.0


class TestGradientRange:
    def test_binary_lmsr_inside_unit_interval(self):
        c = binary_lmsr_cost()
        summary = gradient_range(c, [np.array([q]) for q in
                                     np.linspace(-6, 6, 25)],
                                 np.array([[0.0], [1.0]]))
        assert summary.all_inside
        assert summary.min_margin > 0

    def test_quadratic_escapes(self):
        g = quadratic(1)
        summary = gradient_range(g, [np.array([5.0])],
                                 np.array([[0.0], [1.0]]))
        assert not summary.all_inside
        assert summary.outside_witness is not None

    def test_simplex_log_partition_strictly_inside(self):
        phi = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        c = log_partition(phi)
        qs = [np.array([a, b]) for a in (-2.0, 0.0, 2.0)
              for b in (-1.0, 1.0)]
        summary = gradient_range(c, qs, phi)
        assert summary.all_inside
        # gradients are softmax mixtures: check strict inequalities directly
        for pt in summary.points:
            assert pt[0] > 0 and pt[1] > 0 and pt[0] + pt[1] < 1

    def test_hull_margin_interval(self):
        assert hull_margin(np.array([0.0, 1.0]), 0.25) == pytest.approx(0.25)
        assert hull_margin(np.array([0.0, 1.0]), 1.25) == pytest.approx(-0.25)


class TestBuiltins:
    def test_simplex_negentropy_grad_and_conjugate(self):
        g = simplex_negentropy(2)
        x = np.array([0.2, 0.3])
        v, arg = conjugate(g, g.grad(x))
        assert np.allclose(arg, x, atol=1e-10)
        # Fenchel-Young equality at the gradient
        q = g.grad(x)
        assert g.value(x) + v == pytest.approx(float(np.dot(q, x)), abs=1e-10)

    def test_binary_lmsr_value_stable(self):
        c = binary_lmsr_cost()
        assert c.value([0.0]) == pytest.approx(math.log(2.0), abs=1e-15)
        assert c.value([100.0]) == pytest.approx(100.0, abs=1e-12)
        assert c.value([-100.0]) == pytest.approx(0.0, abs=1e-12)

    def test_value_closure_at_boundary(self):
        g = binary_negentropy()
        assert g.value_closure([0.0]) == 0.0
        assert g.value_closure([1.0]) == 0.0

    @pytest.mark.parametrize("fn,points", [
        (quadratic(1), [[-2.0], [0.3], [1.7]]),
        (binary_negentropy(), [[0.2], [0.5], [0.9]]),
        (interval_negentropy(0.0, 3.0), [[0.4], [1.5], [2.6]]),
        (binary_lmsr_cost(), [[-3.0], [0.0], [2.0]]),
    ])
    def test_gradients_match_central_differences(self, fn, points):
        h = 1e-5
        for x in points:
            x = np.asarray(x)
            for i in range(fn.dim):
                e = np.zeros(fn.dim)
                e[i] = h
                fd = (fn.value(x + e) - fn.value(x - e)) / (2 * h)
                assert fn.grad(x)[i] == pytest.approx(fd, abs=1e-5)

    def test_subgradient_inequality_sampled(self):
        rng = np.random.default_rng(0)
        for fn in (quadratic(1), binary_negentropy(),
                   interval_negentropy(0.0, 3.0)):
            lo, hi = fn.bounded_box(fallback=3.0)
            for _ in range(100):
                x, z = lo + (hi - lo) * (0.01 + 0.98 * rng.uniform(size=2))
                gap = fn.value([z]) - fn.value([x]) - \
                    fn.grad([x])[0] * (z - x)
                assert gap >= -1e-9
