"""The scoring-rule families: finite payoff matrices (mode), expectations,
quantiles, expectiles, and ratios of expectations.

Every rule exposes the score, the full payoff contract of a report, the
statistic it elicits, and an independent search-based best response.  The
two report channels stay separate on purpose: ``property_value`` evaluates
the statistic directly, ``best_response`` maximizes expected score, and
their agreement is itself a checked property.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contracts import (
    IDENTITY,
    INF,
    REAL_LINE,
    Belief,
    Contract,
    OutcomeSpace,
    Piece,
    Transform,
    combine,
    expected_payoff,
    finite_contract,
    piecewise_contract,
)
from .convex import ConvexFn


class InvalidReport(ValueError):
    """Report outside the rule's report space."""


# ---------------------------------------------------------------------------
# report spaces


@dataclass(frozen=True)
class FiniteReports:
    labels: tuple

    dim = 0

    def contains(self, r) -> bool:
        return r in self.labels

    def grid(self, num: int | None = None) -> list:
        return list(self.labels)


@dataclass(frozen=True)
class BoxReports:
    """Open box in R^k; reports validated strictly inside."""

    lo: tuple
    hi: tuple

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, r) -> bool:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if r.shape != (self.dim,):
            return False
        return bool(np.all(r > np.asarray(self.lo)) and
                    np.all(r < np.asarray(self.hi)))

    def grid(self, num: int = 51, inset: float = 0.02) -> list:
        axes = []
        for a, b in zip(self.lo, self.hi):
            pad = inset * (b - a)
            axes.append(np.linspace(a + pad, b - pad, num))
        if self.dim == 1:
            return [float(v) for v in axes[0]]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [np.array(v) for v in zip(*[m.ravel() for m in mesh])]


@dataclass(frozen=True)
class RealReports:
    dim = 1

    def contains(self, r) -> bool:
        try:
            return math.isfinite(float(r))
        except (TypeError, ValueError):
            return False

    def grid(self, num: int = 51, window: tuple = (-4.0, 4.0)) -> list:
        return [float(v) for v in np.linspace(window[0], window[1], num)]


# ---------------------------------------------------------------------------
# base rule


class ScoringRule:
    family = "abstract"

    outcome_space: OutcomeSpace
    report_space: object

    # -- report plumbing ----------------------------------------------------

    def validate_report(self, r) -> None:
        if not self.report_space.contains(r):
            raise InvalidReport(f"report {r!r} outside the report space")

    def validate_trade(self, r_old, r_new) -> None:
        self.validate_report(r_new)

    def report_grid(self, num: int = 51, window: tuple = (-4.0, 4.0)) -> list:
        if isinstance(self.report_space, RealReports):
            return self.report_space.grid(num, window)
        if isinstance(self.report_space, BoxReports):
            return self.report_space.grid(num)
        return self.report_space.grid()

    # -- scoring ------------------------------------------------------------

    def score(self, r, y) -> float:
        self.validate_report(r)
        return self.score_contract(r)(y)

    def score_contract(self, r) -> Contract:
        raise NotImplementedError

    def trade_contract(self, r_old, r_new) -> Contract:
        """The contract handed out for moving the state r_old -> r_new."""
        return combine([self.score_contract(r_new),
                        self.score_contract(r_old)], [1.0, -1.0])

    def expected_score(self, r, p: Belief) -> float:
        return expected_payoff(self.score_contract(r), p)

    # -- elicitation --------------------------------------------------------

    def property_value(self, p: Belief):
        raise NotImplementedError

    def best_response(self, p: Belief, grid: Sequence | None = None,
                      xtol: float = 1e-10):
        """Maximizer of expected score found by search, independent of
        property_value.  Continuous spaces refine the grid argmax by
        golden-section (the expected score is unimodal for every family)."""
        if grid is None:
            grid = self._default_search_grid(p)
        vals = [self.expected_score(r, p) for r in grid]
        i = int(np.argmax(vals))
        if isinstance(self.report_space, FiniteReports):
            best = max(vals)
            ties = [g for g, v in zip(grid, vals) if best - v <= 1e-12]
            return min(ties)
        if getattr(self.report_space, "dim", 1) == 1 and np.isscalar(grid[0]):
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, len(grid) - 1)]
            return _golden_max(lambda r: self.expected_score(r, p), lo, hi, xtol)
        return _coordinate_golden_max(
            lambda r: self.expected_score(r, p), np.asarray(grid[i], dtype=float),
            self.report_space, xtol)

    def _default_search_grid(self, p: Belief) -> list:
        if isinstance(self.report_space, RealReports):
            a, b = p.support()
            pad = 1.0 + 0.1 * (b - a)
            return self.report_space.grid(201, (a - pad, b + pad))
        if isinstance(self.report_space, BoxReports):
            return self.report_space.grid(41)
        return self.report_space.grid()

    # -- family hooks used by the axiom checkers -----------------------------

    def loss_bound(self, r0) -> float | None:
        """Closed-form worst-case-loss bound from r0 when the family admits
        one; None means only grid evidence is available."""
        return None

    def wn_candidate(self, r1, r1p, r2):
        """Analytic weak-neutralization candidate, when the family has one."""
        return None

    def tn_candidate(self, r1, r1p, r2):
        """Analytic trade-neutralization candidate, when available."""
        return None

    def pn_candidate(self, trades, r):
        """Analytic portfolio-neutralization candidate, when available."""
        return None


def _golden_max(f, lo: float, hi: float, xtol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _coordinate_golden_max(f, x0: np.ndarray, box: BoxReports,
                           xtol: float, cycles: int = 5) -> np.ndarray:
    x = x0.astype(float).copy()
    lo = np.asarray(box.lo, dtype=float)
    hi = np.asarray(box.hi, dtype=float)
    pad = 1e-9 * (hi - lo)
    for _ in range(cycles):
        for i in range(len(x)):
            def slice_f(v, i=i):
                z = x.copy()
                z[i] = v
                return f(z)
            x[i] = _golden_max(slice_f, lo[i] + pad[i], hi[i] - pad[i], xtol)
    return x


# ---------------------------------------------------------------------------
# finite payoff matrices


class FiniteRule(ScoringRule):
    """Explicit payoff matrix S[r, y] over finite reports x finite outcomes.

    Elicits the finite property r* = argmax_r E_p S(r, Y); ties return the
    full argmax set and downstream consumers take the smallest label.
    """

    family = "finite"

    def __init__(self, matrix, outcome_space: OutcomeSpace,
                 report_labels: Sequence | None = None):
        self.matrix = np.asarray(matrix, dtype=float)
        self.outcome_space = outcome_space
        if self.matrix.shape[1] != outcome_space.n:
            raise ValueError("matrix columns must match the outcome count")
        labels = tuple(report_labels) if report_labels is not None \
            else tuple(range(1, self.matrix.shape[0] + 1))
        if len(labels) != self.matrix.shape[0]:
            raise ValueError("one report label per matrix row")
        self.report_space = FiniteReports(labels)

    @classmethod
    def mode(cls, labels: Sequence) -> "ModeRule":
        return ModeRule(labels)

    @classmethod
    def weighted_mode(cls, labels: Sequence, weights: Sequence) -> "FiniteRule":
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        space = OutcomeSpace.finite(labels)
        return cls(np.diag(w), space, report_labels=labels)

    def _row(self, r) -> int:
        self.validate_report(r)
        return self.report_space.labels.index(r)

    def score(self, r, y) -> float:
        return float(self.matrix[self._row(r), self.outcome_space.index(y)])

    def score_contract(self, r) -> Contract:
        return finite_contract(self.outcome_space, self.matrix[self._row(r)])

    def property_value(self, p: Belief):
        expected = self.matrix @ p.pmf
        best = float(np.max(expected))
        return tuple(lbl for lbl, v in zip(self.report_space.labels, expected)
                     if best - v <= 1e-12)

    def loss_bound(self, r0) -> float:
        # finitely many contracts: the loss is one of them, hence bounded
        base = self.matrix[self._row(r0)]
        return float(np.max(self.matrix - base))


class ModeRule(FiniteRule):
    """$1 iff you guess correctly; elicits the mode of the distribution."""

    def __init__(self, labels: Sequence):
        if isinstance(labels, int):
            labels = range(1, labels + 1)
        space = OutcomeSpace.finite(labels)
        super().__init__(np.eye(space.n), space, report_labels=space.labels)

    def property_value(self, p: Belief):
        # direct argmax of the pmf, independent of the score matrix
        best = float(np.max(p.pmf))
        return tuple(lbl for lbl, v in zip(self.outcome_space.labels, p.pmf)
                     if best - v <= 1e-12)


# ---------------------------------------------------------------------------
# expectation markets


class ExpectationRule(ScoringRule):
    """S(r, y) = G(r) + dG_r . (phi(y) - r) for strictly convex G.

    Elicits the expected security payoff E_p phi(Y).  ``phi`` is a payoff
    table over a finite outcome space; with no table the outcome space is
    the real line and phi is the identity.
    """

    family = "expectation"

    def __init__(self, potential: ConvexFn, phi=None,
                 outcome_space: OutcomeSpace | None = None,
                 report_space=None):
        self.potential = potential
        if phi is None:
            self.outcome_space = REAL_LINE
            self.phi = None
            if potential.dim != 1:
                raise ValueError("identity securities need a scalar potential")
            self.report_space = report_space or RealReports()
        else:
            self.phi = np.asarray(phi, dtype=float)
            if self.phi.ndim == 1:
                self.phi = self.phi[:, None]
            if outcome_space is None:
                outcome_space = OutcomeSpace.finite(range(self.phi.shape[0]))
            if self.phi.shape[0] != outcome_space.n:
                raise ValueError("phi rows must match the outcome count")
            if self.phi.shape[1] != potential.dim:
                raise ValueError("phi columns must match the potential dimension")
            self.outcome_space = outcome_space
            if report_space is None:
                lo = tuple(float(v) for v in np.min(self.phi, axis=0))
                hi = tuple(float(v) for v in np.max(self.phi, axis=0))
                report_space = BoxReports(lo, hi)
            self.report_space = report_space

    @property
    def k(self) -> int:
        return self.potential.dim

    def _r(self, r) -> np.ndarray:
        self.validate_report(r)
        return np.atleast_1d(np.asarray(r, dtype=float))

    def score(self, r, y) -> float:
        rv = self._r(r)
        g = self.potential.value(rv)
        dg = self.potential.grad(rv)
        if self.phi is None:
            ph = np.array([float(y)])
        else:
            ph = self.phi[self.outcome_space.index(y)]
        return g + float(np.dot(dg, ph - rv))

    def score_contract(self, r) -> Contract:
        rv = self._r(r)
        g = self.potential.value(rv)
        dg = self.potential.grad(rv)
        base = g - float(np.dot(dg, rv))
        if self.phi is None:
            return piecewise_contract(
                [Piece(-INF, INF, (base, float(dg[0]), 0.0))])
        values = base + self.phi @ dg
        return finite_contract(self.outcome_space, values)

    def property_value(self, p: Belief):
        if self.phi is None:
            return p.mean()
        out = p.pmf @ self.phi
        return float(out[0]) if self.k == 1 else out

    def loss_bound(self, r0) -> float | None:
        if self.phi is None or not self.potential.bounded:
            return None
        # S(r, y) <= G(phi(y)) by the subgradient inequality
        top = max(self.potential.value_closure(row) for row in self.phi)
        base = self.score_contract(r0)
        return top - float(np.min(base.values))

    def divergence_probe(self, r0, v: float = 1.0, count: int = 12) -> list:
        """Losses of a fixed trade r0 -> r0 + v on outcomes marching to
        infinity; witnesses unbounded worst-case loss on the real line."""
        if self.phi is not None:
            raise ValueError("the divergence probe needs an unbounded domain")
        r0 = float(r0)
        d = self.trade_contract(r0, r0 + v)
        return [[r0 + 4.0 ** i, d(r0 + 4.0 ** i)] for i in range(count)]

    # analytic neutralization via share matching -----------------------------

    def share(self, r) -> np.ndarray:
        return self.potential.grad(self._r(r))

    def invert_share(self, q, tol: float = 1e-12):
        """Report with dG(report) = q, or None when q escapes the gradient
        range.  Componentwise monotone bisection."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if isinstance(self.report_space, RealReports):
            lo, hi = np.array([-1.0]), np.array([1.0])
            for _ in range(200):
                if self.potential.grad(lo)[0] <= q[0]:
                    break
                lo *= 2.0
            for _ in range(200):
                if self.potential.grad(hi)[0] >= q[0]:
                    break
                hi *= 2.0
        else:
            span = np.asarray(self.report_space.hi) - np.asarray(self.report_space.lo)
            lo = np.asarray(self.report_space.lo) + 1e-13 * span
            hi = np.asarray(self.report_space.hi) - 1e-13 * span
        x = 0.5 * (lo + hi)
        for _ in range(8):
            for i in range(self.k):
                a, b = lo[i], hi[i]
                # bisect to adjacent floats; the gradient may be steep
                for _ in range(110):
                    m = 0.5 * (a + b)
                    if m <= a or m >= b:
                        break
                    x[i] = m
                    if self.potential.grad(x)[i] < q[i]:
                        a = m
                    else:
                        b = m
                x[i] = 0.5 * (a + b)
            if float(np.max(np.abs(self.potential.grad(x) - q))) <= 1e-11:
                break
        if float(np.max(np.abs(self.potential.grad(x) - q))) > 1e-7:
            return None
        r = x if self.k > 1 else float(x[0])
        return r if self.report_space.contains(r) else None

    def tn_candidate(self, r1, r1p, r2):
        delta = self.share(r1p) - self.share(r1)
        return self.invert_share(self.share(r2) - delta)

    def wn_candidate(self, r1, r1p, r2):
        return self.tn_candidate(r1, r1p, r2)

    def pn_candidate(self, trades, r):
        total = np.zeros(self.k)
        for ra, rb in trades:
            total = total + self.share(rb) - self.share(ra)
        return self.invert_share(self.share(r) - total)


# ---------------------------------------------------------------------------
# quantile markets


class QuantileRule(ScoringRule):
    """S(r, y) = (alpha - 1{r >= y}) (g(r) - g(y)) for strictly increasing g.

    Elicits the alpha-quantile; with alpha = 1/2 and g the identity this is
    the negative absolute loss -|r - y| / 2 ... times 2 on the raw form.
    Bounded transforms (sigmoid) bound every score in
    (-max(alpha, 1-alpha) * range(g), 0].
    """

    family = "quantile"

    def __init__(self, alpha: float, transform: Transform = IDENTITY):
        if not 0.0 < alpha < 1.0:
            raise ValueError("quantile level must lie in (0, 1)")
        self.alpha = float(alpha)
        self.transform = transform
        self.outcome_space = REAL_LINE
        self.report_space = RealReports()

    def score(self, r, y) -> float:
        self.validate_report(r)
        g = self.transform
        ind = 1.0 if r >= y else 0.0
        return (self.alpha - ind) * (g(r) - g(y))

    def score_contract(self, r) -> Contract:
        self.validate_report(r)
        a = self.alpha
        gr = self.transform(r)
        below = Piece(-INF, float(r), ((a - 1.0) * gr, 1.0 - a, 0.0))
        above = Piece(float(r), INF, (a * gr, -a, 0.0))
        return piecewise_contract([below, above], self.transform)

    def property_value(self, p: Belief) -> float:
        return p.quantile(self.alpha)

    def loss_bound(self, r0) -> float | None:
        t_lo, t_hi = self.transform.lo_limit(), self.transform.hi_limit()
        if not (math.isfinite(t_lo) and math.isfinite(t_hi)):
            return None
        return max(self.alpha, 1.0 - self.alpha) * (t_hi - t_lo)

    def trade_min(self, r, rp) -> float:
        """Closed-form minimum payoff of the trade r -> rp.

        Upward trades bottom out at (alpha - 1)(g(rp) - g(r)) on any outcome
        below r; downward trades at alpha (g(rp) - g(r)) on outcomes above r.
        """
        g = self.transform
        if rp > r:
            return (self.alpha - 1.0) * (g(rp) - g(r))
        if rp < r:
            return self.alpha * (g(rp) - g(r))
        return 0.0


# ---------------------------------------------------------------------------
# expectile markets


class ExpectileRule(ScoringRule):
    """S(r, y) = -|1{y <= r} - tau| D_g(y, r) for strictly convex g.

    The representable path takes g as a quadratic (coefficients c0+c1 y+c2 y^2,
    c2 > 0), whose Bregman kernel is c2 (y - r)^2 and keeps contracts
    piecewise quadratic.  Arbitrary differentiable strictly convex g is
    accepted as a callable pair for pointwise scoring and property
    evaluation, without contract support.
    """

    family = "expectile"

    def __init__(self, tau: float, g_coeffs: tuple = (0.0, 0.0, 1.0),
                 g=None, gprime=None):
        if not 0.0 < tau < 1.0:
            raise ValueError("expectile level must lie in (0, 1)")
        self.tau = float(tau)
        if g is not None or gprime is not None:
            if g is None or gprime is None:
                raise ValueError("supply both g and gprime")
            self.g, self.gprime = g, gprime
            self.g_coeffs = None
        else:
            c0, c1, c2 = (float(v) for v in g_coeffs)
            if c2 <= 0:
                raise ValueError("quadratic transform needs positive curvature")
            self.g_coeffs = (c0, c1, c2)
            self.g = lambda y: c0 + c1 * y + c2 * y * y
            self.gprime = lambda y: c1 + 2.0 * c2 * y
        self.outcome_space = REAL_LINE
        self.report_space = RealReports()

    def _weight(self, r, y) -> float:
        return abs((1.0 if y <= r else 0.0) - self.tau)

    def bregman(self, y: float, r: float) -> float:
        return self.g(y) - self.g(r) - self.gprime(r) * (y - r)

    def score(self, r, y) -> float:
        self.validate_report(r)
        return -self._weight(r, y) * self.bregman(y, r)

    def score_contract(self, r) -> Contract:
        self.validate_report(r)
        if self.g_coeffs is None:
            raise InvalidReport(
                "contracts need the quadratic transform; supply g_coeffs")
        a = self.g_coeffs[2]
        r = float(r)

        def piece(w, lo, hi):
            # -w * a * (y - r)^2
            return Piece(lo, hi, (-w * a * r * r, 2.0 * w * a * r, -w * a))

        return piecewise_contract(
            [piece(1.0 - self.tau, -INF, r), piece(self.tau, r, INF)])

    def identification_gap(self, x: float, p: Belief) -> float:
        """E_p |1{x >= Y} - tau| (x - Y); the expectile is its unique root."""
        t = self.tau
        below = Piece(-INF, float(x), ((1 - t) * x, -(1 - t), 0.0))
        above = Piece(float(x), INF, (t * x, -t, 0.0))
        return expected_payoff(piecewise_contract([below, above]), p)

    def property_value(self, p: Belief, tol: float = 1e-10) -> float:
        # the gap is strictly increasing in x, so bisection is globally safe
        a, b = p.support()
        a, b = a - 1.0, b + 1.0
        for _ in range(200):
            m = 0.5 * (a + b)
            if self.identification_gap(m, p) < 0.0:
                a = m
            else:
                b = m
            if b - a <= tol:
                break
        return 0.5 * (a + b)

    def wn_candidate(self, r1, r1p, r2):
        """Match tail slopes: g'(r2') - g'(r2) = g'(r1) - g'(r1p)."""
        if self.g_coeffs is not None:
            return float(r2) + (float(r1) - float(r1p))
        target = self.gprime(r2) + self.gprime(r1) - self.gprime(r1p)
        lo, hi = -1.0, 1.0
        for _ in range(200):
            if self.gprime(lo) <= target:
                break
            lo *= 2.0
        for _ in range(200):
            if self.gprime(hi) >= target:
                break
            hi *= 2.0
        for _ in range(200):
            m = 0.5 * (lo + hi)
            if self.gprime(m) < target:
                lo = m
            else:
                hi = m
        return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# ratio-of-expectations markets


class RatioRule(ScoringRule):
    """S(r, y) = b(y) G(r) + dG_r . (phi(y) - r b(y)) over a finite space.

    Elicits E_p phi / E_p b; the denominator security b stays strictly
    positive.  G must be differentiable and strictly convex with gradient
    range covering R^k for the share-matching candidates to exist.
    """

    family = "ratio"

    def __init__(self, potential: ConvexFn, phi, b,
                 outcome_space: OutcomeSpace | None = None,
                 report_space=None):
        self.potential = potential
        self.phi = np.asarray(phi, dtype=float)
        if self.phi.ndim == 1:
            self.phi = self.phi[:, None]
        self.b = np.asarray(b, dtype=float)
        if np.min(self.b) <= 0:
            raise ValueError("denominator payoffs must be strictly positive")
        if outcome_space is None:
            outcome_space = OutcomeSpace.finite(range(self.phi.shape[0]))
        if self.phi.shape[0] != outcome_space.n or self.b.shape != (outcome_space.n,):
            raise ValueError("payoff tables must match the outcome count")
        if self.phi.shape[1] != potential.dim:
            raise ValueError("phi columns must match the potential dimension")
        centered = self.phi - np.mean(self.phi, axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9) != self.phi.shape[1]:
            raise ValueError("securities must be affinely independent")
        self.outcome_space = outcome_space
        if report_space is None:
            # the elicited ratio lives in the convex hull of phi(y)/b(y)
            ratios = self.phi / self.b[:, None]
            report_space = BoxReports(
                tuple(float(v) for v in np.min(ratios, axis=0)),
                tuple(float(v) for v in np.max(ratios, axis=0)))
        self.report_space = report_space

    @property
    def k(self) -> int:
        return self.potential.dim

    def _r(self, r) -> np.ndarray:
        self.validate_report(r)
        return np.atleast_1d(np.asarray(r, dtype=float))

    def score(self, r, y) -> float:
        rv = self._r(r)
        i = self.outcome_space.index(y)
        dg = self.potential.grad(rv)
        return self.b[i] * self.potential.value(rv) + float(
            np.dot(dg, self.phi[i] - rv * self.b[i]))

    def score_contract(self, r) -> Contract:
        rv = self._r(r)
        g = self.potential.value(rv)
        dg = self.potential.grad(rv)
        values = self.b * (g - float(np.dot(dg, rv))) + self.phi @ dg
        return finite_contract(self.outcome_space, values)

    def property_value(self, p: Belief):
        num = p.pmf @ self.phi
        den = float(p.pmf @ self.b)
        out = num / den
        return float(out[0]) if self.k == 1 else out

    def loss_bound(self, r0) -> float | None:
        # S(r, y) = b(y) [G(r) + dG_r . (phi(y)/b(y) - r)] <= b(y) G(phi(y)/b(y))
        try:
            top = max(float(bb) * self.potential.value_closure(row / bb)
                      for row, bb in zip(self.phi, self.b))
        except (ValueError, ZeroDivisionError, OverflowError):
            return None
        base = self.score_contract(r0)
        return top - float(np.min(base.values))

    def share(self, r) -> np.ndarray:
        return self.potential.grad(self._r(r))

    def invert_share(self, q):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if self.k != 1:
            raise ValueError("share inversion implemented for scalar reports")
        dlo, dhi = float(self.potential.lo[0]), float(self.potential.hi[0])
        if math.isfinite(dlo) and math.isfinite(dhi):
            pad = 1e-13 * (dhi - dlo)
            lo, hi = dlo + pad, dhi - pad
        else:
            lo, hi = -1.0, 1.0
            for _ in range(400):
                if self.potential.grad([lo])[0] <= q[0]:
                    break
                lo *= 2.0
            for _ in range(400):
                if self.potential.grad([hi])[0] >= q[0]:
                    break
                hi *= 2.0
        if self.potential.grad([lo])[0] > q[0] or self.potential.grad([hi])[0] < q[0]:
            return None
        for _ in range(300):
            m = 0.5 * (lo + hi)
            if self.potential.grad([m])[0] < q[0]:
                lo = m
            else:
                hi = m
        out = 0.5 * (lo + hi)
        return out if self.report_space.contains(out) else None

    def wn_candidate(self, r1, r1p, r2):
        delta = self.share(r1p) - self.share(r1)
        return self.invert_share(self.share(r2) - delta)

    def first_order_gap(self, p: Belief, r, step: float = 1e-5) -> float:
        """Max |central difference| of the expected score at r; the elicited
        report is a stationary point."""
        rv = np.atleast_1d(np.asarray(r, dtype=float))
        worst = 0.0
        for i in range(self.k):
            hi, lo = rv.copy(), rv.copy()
            hi[i] += step
            lo[i] -= step
            hi_r = hi if self.k > 1 else float(hi[0])
            lo_r = lo if self.k > 1 else float(lo[0])
            d = (self.expected_score(hi_r, p) - self.expected_score(lo_r, p)) / (2 * step)
            worst = max(worst, abs(d))
        return worst
