"""Outcome spaces, payoff contracts, and beliefs.

Payoffs over a finite outcome space are plain vectors.  Payoffs over the
real line are piecewise polynomials of degree <= 2 in a strictly
increasing coordinate t = transform(y).  Restricting to this class keeps
payoff bounds and expectations against piecewise-linear CDFs exact: every
piece is analyzed at its endpoints and vertex, and every integral has a
closed form.

Tolerance policy: structural identities (telescoping, projection) are
held to STRUCT_TOL; anything derived from iterative optimization is held
to OPT_TOL.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

STRUCT_TOL = 1e-12
OPT_TOL = 1e-8

INF = math.inf


class OutcomeMismatch(ValueError):
    """Operands live over different outcome spaces."""


class InvalidOutcome(ValueError):
    """Outcome not a member of the outcome space."""


# ---------------------------------------------------------------------------
# outcome spaces


@dataclass(frozen=True)
class OutcomeSpace:
    """Finite label set, or the real line when ``labels`` is None."""

    labels: tuple | None

    @staticmethod
    def finite(labels: Iterable) -> "OutcomeSpace":
        labels = tuple(labels)
        if len(labels) < 2:
            raise ValueError("finite outcome space needs at least 2 outcomes")
        if len(set(labels)) != len(labels):
            raise ValueError("outcome labels must be distinct")
        return OutcomeSpace(labels)

    @staticmethod
    def real_line() -> "OutcomeSpace":
        return REAL_LINE

    @property
    def is_finite(self) -> bool:
        return self.labels is not None

    @property
    def n(self) -> int:
        if self.labels is None:
            raise ValueError("real-line outcome space has no cardinality")
        return len(self.labels)

    def index(self, y) -> int:
        try:
            return self.labels.index(y)
        except (ValueError, AttributeError):
            raise InvalidOutcome(f"outcome {y!r} not in {self.labels!r}")

    def contains(self, y) -> bool:
        if self.labels is None:
            return isinstance(y, (int, float)) and math.isfinite(y)
        return y in self.labels


REAL_LINE = OutcomeSpace(None)


# ---------------------------------------------------------------------------
# strictly increasing coordinate transforms


def sigmoid(y: float) -> float:
    if y >= 0:
        return 1.0 / (1.0 + math.exp(-y))
    e = math.exp(y)
    return e / (1.0 + e)


def softplus(y: float) -> float:
    if y > 30.0:
        return y + math.log1p(math.exp(-y))
    return math.log1p(math.exp(y))


def logit(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("logit needs p in (0, 1)")
    return math.log(p) - math.log1p(-p)


class Transform:
    """Identity coordinate t(y) = y.  Base class for monotone transforms."""

    name = "identity"

    def __call__(self, y: float) -> float:
        return float(y)

    def lo_limit(self) -> float:
        return -INF

    def hi_limit(self) -> float:
        return INF

    def inverse(self, t: float) -> float:
        return float(t)

    def kinks(self) -> tuple:
        """Interior points where the antiderivatives change formula."""
        return ()

    def power_integral(self, k: int, a: float, b: float) -> float:
        """Integral of t(y)**k dy over finite [a, b] free of kinks."""
        if k == 0:
            return b - a
        if k == 1:
            return (b * b - a * a) / 2.0
        if k == 2:
            return (b ** 3 - a ** 3) / 3.0
        raise ValueError("degree above 2 unsupported")

    def key(self) -> tuple:
        return (self.name,)

    def __repr__(self) -> str:
        return f"Transform({self.name})"


IDENTITY = Transform()


class SigmoidTransform(Transform):
    """t(y) = 1 / (1 + exp(-y)), bounded in (0, 1)."""

    name = "sigmoid"

    def __call__(self, y: float) -> float:
        return sigmoid(y)

    def lo_limit(self) -> float:
        return 0.0

    def hi_limit(self) -> float:
        return 1.0

    def inverse(self, t: float) -> float:
        return logit(t)

    def power_integral(self, k: int, a: float, b: float) -> float:
        if k == 0:
            return b - a
        if k == 1:
            return softplus(b) - softplus(a)
        if k == 2:
            # d/dy [softplus(y) - sigmoid(y)] = s - s(1 - s) = s^2
            return (softplus(b) - sigmoid(b)) - (softplus(a) - sigmoid(a))
        raise ValueError("degree above 2 unsupported")


SIGMOID = SigmoidTransform()


class PiecewiseLinearTransform(Transform):
    """User-supplied strictly increasing piecewise-linear map.

    Extends beyond the first/last knot with the end-segment slopes.
    """

    name = "pwlinear"

    def __init__(self, xs: Sequence[float], ts: Sequence[float]):
        xs = [float(x) for x in xs]
        ts = [float(t) for t in ts]
        if len(xs) != len(ts) or len(xs) < 2:
            raise ValueError("need matching knot arrays of length >= 2")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("knot locations must be strictly increasing")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("knot values must be strictly increasing")
        self.xs = xs
        self.ts = ts

    def _segment(self, y: float) -> tuple[float, float]:
        # slope/intercept of the active linear segment
        i = bisect_right(self.xs, y) - 1
        i = max(0, min(i, len(self.xs) - 2))
        m = (self.ts[i + 1] - self.ts[i]) / (self.xs[i + 1] - self.xs[i])
        return m, self.ts[i] - m * self.xs[i]

    def __call__(self, y: float) -> float:
        m, b = self._segment(y)
        return m * float(y) + b

    def inverse(self, t: float) -> float:
        i = bisect_right(self.ts, t) - 1
        i = max(0, min(i, len(self.ts) - 2))
        m = (self.ts[i + 1] - self.ts[i]) / (self.xs[i + 1] - self.xs[i])
        return self.xs[i] + (t - self.ts[i]) / m

    def kinks(self) -> tuple:
        return tuple(self.xs[1:-1])

    def power_integral(self, k: int, a: float, b: float) -> float:
        m, c = self._segment(0.5 * (a + b))
        if k == 0:
            return b - a
        ta, tb = m * a + c, m * b + c
        if k == 1:
            return (tb * tb - ta * ta) / (2.0 * m)
        if k == 2:
            return (tb ** 3 - ta ** 3) / (3.0 * m)
        raise ValueError("degree above 2 unsupported")

    def key(self) -> tuple:
        return (self.name, tuple(self.xs), tuple(self.ts))


# ---------------------------------------------------------------------------
# contracts


@dataclass(frozen=True)
class Piece:
    """Polynomial payoff c0 + c1*t + c2*t^2 on the outcome interval [lo, hi)."""

    lo: float
    hi: float
    coeffs: tuple[float, float, float]

    def poly(self, t: float) -> float:
        c0, c1, c2 = self.coeffs
        return c0 + t * (c1 + t * c2)


@dataclass(frozen=True, eq=False)
class Contract:
    """Outcome-contingent payoff: a vector, or pieces in a monotone coordinate."""

    space: OutcomeSpace
    values: np.ndarray | None = None
    pieces: tuple[Piece, ...] | None = None
    transform: Transform | None = None

    def __call__(self, y) -> float:
        if self.values is not None:
            return float(self.values[self.space.index(y)])
        i = bisect_right([p.lo for p in self.pieces], y) - 1
        i = max(i, 0)
        return self.pieces[i].poly(self.transform(y))

    @property
    def is_finite(self) -> bool:
        return self.values is not None

    def breakpoints(self) -> list[float]:
        """Finite piece boundaries (empty for finite-space contracts)."""
        if self.values is not None:
            return []
        return [p.hi for p in self.pieces if math.isfinite(p.hi)]

    def to_dict(self) -> dict:
        if self.values is not None:
            return {"kind": "finite", "labels": list(self.space.labels),
                    "payoffs": [float(v) for v in self.values]}
        return {
            "kind": "piecewise",
            "transform": list(self.transform.key()),
            "pieces": [{"lo": p.lo, "hi": p.hi, "coeffs": list(p.coeffs)}
                       for p in self.pieces],
        }


def finite_contract(space: OutcomeSpace, values) -> Contract:
    if not space.is_finite:
        raise OutcomeMismatch("vector payoffs need a finite outcome space")
    arr = np.asarray(values, dtype=float)
    if arr.shape != (space.n,):
        raise ValueError(f"expected {space.n} payoffs, got {arr.shape}")
    arr.flags.writeable = False
    return Contract(space=space, values=arr)


def ones_contract(space: OutcomeSpace) -> Contract:
    """The all-cash contract paying 1 in every outcome."""
    if space.is_finite:
        return finite_contract(space, np.ones(space.n))
    return piecewise_contract([Piece(-INF, INF, (1.0, 0.0, 0.0))])


def piecewise_contract(pieces: Iterable[Piece],
                       transform: Transform = IDENTITY) -> Contract:
    pieces = tuple(sorted(pieces, key=lambda p: p.lo))
    if not pieces:
        raise ValueError("need at least one piece")
    if pieces[0].lo != -INF or pieces[-1].hi != INF:
        raise ValueError("pieces must tile the whole real line")
    for a, b in zip(pieces, pieces[1:]):
        if a.hi != b.lo:
            raise ValueError("pieces must be contiguous without gaps/overlaps")
    for p in pieces:
        if not p.lo < p.hi:
            raise ValueError("empty piece interval")
        if len(p.coeffs) != 3:
            raise ValueError("pieces carry exactly 3 polynomial coefficients")
    return Contract(space=REAL_LINE, pieces=pieces, transform=transform)


def constant_contract(space: OutcomeSpace, c: float) -> Contract:
    if space.is_finite:
        return finite_contract(space, np.full(space.n, float(c)))
    return piecewise_contract([Piece(-INF, INF, (float(c), 0.0, 0.0))])


def _poly_extremes(coeffs, ta: float, tb: float) -> tuple[float, float]:
    """Exact inf/sup of a quadratic over the t-interval (ta, tb)."""
    c0, c1, c2 = coeffs
    lo_vals, hi_vals = [], []

    def at(t: float) -> float:
        return c0 + t * (c1 + t * c2)

    for t, toward_plus in ((ta, False), (tb, True)):
        if math.isinf(t):
            if c2 != 0.0:
                lim = INF if c2 > 0 else -INF
            elif c1 != 0.0:
                sign = c1 if toward_plus else -c1
                lim = INF if sign > 0 else -INF
            else:
                lim = c0
            lo_vals.append(lim)
            hi_vals.append(lim)
        else:
            v = at(t)
            lo_vals.append(v)
            hi_vals.append(v)
    if c2 != 0.0:
        tv = -c1 / (2.0 * c2)
        if ta < tv < tb:
            v = at(tv)
            lo_vals.append(v)
            hi_vals.append(v)
    return min(lo_vals), max(hi_vals)


def contract_bounds(d: Contract) -> tuple[float, float]:
    """Exact (inf, sup) of the payoff; unbounded pieces yield +-inf."""
    if d.values is not None:
        return float(np.min(d.values)), float(np.max(d.values))
    lo, hi = INF, -INF
    T = d.transform
    for p in d.pieces:
        ta = T(p.lo) if math.isfinite(p.lo) else T.lo_limit()
        tb = T(p.hi) if math.isfinite(p.hi) else T.hi_limit()
        plo, phi = _poly_extremes(p.coeffs, ta, tb)
        lo = min(lo, plo)
        hi = max(hi, phi)
    return lo, hi


def combine(contracts: Sequence[Contract], weights: Sequence[float]) -> Contract:
    """Pointwise weighted sum; piece lists merge on the union of breakpoints."""
    if len(contracts) != len(weights) or not contracts:
        raise ValueError("need matching nonempty contract/weight lists")
    first = contracts[0]
    if first.values is not None:
        if any(c.values is None or c.space.labels != first.space.labels
               for c in contracts):
            raise OutcomeMismatch("contracts live over different outcome spaces")
        total = np.zeros(first.space.n)
        for c, w in zip(contracts, weights):
            total = total + float(w) * c.values
        return finite_contract(first.space, total)

    key = first.transform.key()
    if any(c.pieces is None or c.transform.key() != key for c in contracts):
        raise OutcomeMismatch("contracts use different outcome coordinates")
    cuts = sorted({b for c in contracts for b in c.breakpoints()})
    edges = [-INF] + cuts + [INF]
    pieces = []
    for lo, hi in zip(edges, edges[1:]):
        if math.isinf(lo):
            probe = hi - 1.0 if math.isfinite(hi) else 0.0
        elif math.isinf(hi):
            probe = lo + 1.0
        else:
            probe = 0.5 * (lo + hi)
        acc = [0.0, 0.0, 0.0]
        mag = [0.0, 0.0, 0.0]
        for c, w in zip(contracts, weights):
            i = bisect_right([p.lo for p in c.pieces], probe) - 1
            i = max(i, 0)
            for j in range(3):
                term = float(w) * c.pieces[i].coeffs[j]
                acc[j] += term
                mag[j] = max(mag[j], abs(term))
        # snap cancellation residue: sums below 1e-12 of the largest term
        # are float noise from exact algebraic cancellations
        for j in range(3):
            if acc[j] != 0.0 and abs(acc[j]) <= STRUCT_TOL * mag[j]:
                acc[j] = 0.0
        pieces.append(Piece(lo, hi, tuple(acc)))
    # compact runs of identical polynomials
    merged = [pieces[0]]
    for p in pieces[1:]:
        if p.coeffs == merged[-1].coeffs:
            merged[-1] = Piece(merged[-1].lo, p.hi, p.coeffs)
        else:
            merged.append(p)
    return piecewise_contract(merged, first.transform)


def negate(d: Contract) -> Contract:
    return combine([d], [-1.0])


def project_cashless(d: Contract) -> tuple[Contract, float]:
    """Split d = d0 + cash * ones with d0 orthogonal to the all-ones contract."""
    if d.values is None:
        raise OutcomeMismatch("cashless projection is defined on finite spaces")
    cash = float(np.mean(d.values))
    d0 = finite_contract(d.space, d.values - cash)
    return d0, cash


def contract_is_constant(d: Contract, tol: float = 1e-9) -> tuple[bool, float]:
    """Whether the payoff is constant within tol; returns (flag, level)."""
    if d.values is not None:
        lvl = float(np.mean(d.values))
        return bool(np.max(np.abs(d.values - lvl)) <= tol), lvl
    lvl = d.pieces[0].coeffs[0]
    for p in d.pieces:
        c0, c1, c2 = p.coeffs
        # transform values are bounded by the t-limits on each side
        T = d.transform
        ta = T(p.lo) if math.isfinite(p.lo) else T.lo_limit()
        tb = T(p.hi) if math.isfinite(p.hi) else T.hi_limit()
        plo, phi = _poly_extremes(p.coeffs, ta, tb)
        if not (abs(plo - lvl) <= tol and abs(phi - lvl) <= tol):
            return False, lvl
    return True, lvl


def contract_argmin(d: Contract) -> tuple[object, float, bool]:
    """An outcome (nearly) attaining the infimum: (y, value, attained).

    For unbounded-below contracts returns a deep probe outcome with
    attained=False.
    """
    if d.values is not None:
        i = int(np.argmin(d.values))
        return d.space.labels[i], float(d.values[i]), True
    lo, _ = contract_bounds(d)
    if lo == -INF:
        # walk a probe outward until the payoff is very negative
        y = -1.0
        for _ in range(60):
            if d(y) < -1e12 or d(-y) < -1e12:
                break
            y *= 4.0
        probe = y if d(y) <= d(-y) else -y
        return probe, d(probe), False
    T = d.transform
    best = (None, INF)
    for p in d.pieces:
        cands = []
        if math.isfinite(p.lo):
            cands.append(p.lo)
        if math.isfinite(p.hi):
            cands.append(p.hi)
        if math.isfinite(p.lo) and math.isfinite(p.hi):
            cands.append(0.5 * (p.lo + p.hi))
        if not math.isfinite(p.lo):
            cands.append((p.hi if math.isfinite(p.hi) else 0.0) - 50.0)
        if not math.isfinite(p.hi):
            cands.append((p.lo if math.isfinite(p.lo) else 0.0) + 50.0)
        c0, c1, c2 = p.coeffs
        if c2 != 0.0:
            tv = -c1 / (2.0 * c2)
            ta = T(p.lo) if math.isfinite(p.lo) else T.lo_limit()
            tb = T(p.hi) if math.isfinite(p.hi) else T.hi_limit()
            if ta < tv < tb:
                cands.append(T.inverse(tv))
        for y in cands:
            v = p.poly(T(y))
            if v < best[1]:
                best = (y, v)
    attained = abs(best[1] - lo) <= max(1e-12, 1e-9 * (1.0 + abs(lo)))
    return best[0], best[1], attained


def contracts_allclose(a: Contract, b: Contract, tol: float = STRUCT_TOL) -> bool:
    """Structural equality of payoffs within tol."""
    diff = combine([a, b], [1.0, -1.0])
    flat, lvl = contract_is_constant(diff, tol)
    return flat and abs(lvl) <= tol


# ---------------------------------------------------------------------------
# beliefs


@dataclass(frozen=True, eq=False)
class Belief:
    """Finite pmf, or a continuous piecewise-linear CDF on the real line."""

    space: OutcomeSpace
    pmf: np.ndarray | None = None
    xs: np.ndarray | None = None
    fs: np.ndarray | None = None

    @property
    def is_finite(self) -> bool:
        return self.pmf is not None

    def cdf(self, y: float) -> float:
        x, f = self.xs, self.fs
        if y <= x[0]:
            return 0.0
        if y >= x[-1]:
            return 1.0
        return float(np.interp(y, x, f))

    def quantile(self, alpha: float) -> float:
        """The unique x with CDF(x) = alpha (CDF strictly increasing on support)."""
        if not 0.0 < alpha < 1.0:
            raise ValueError("quantile level must lie in (0, 1)")
        return float(np.interp(alpha, self.fs, self.xs))

    def support(self) -> tuple[float, float]:
        return float(self.xs[0]), float(self.xs[-1])

    def mean(self) -> float:
        d = piecewise_contract([Piece(-INF, INF, (0.0, 1.0, 0.0))])
        return expected_payoff(d, self)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.uniform(0.0, 1.0, size)
        return np.interp(u, self.fs, self.xs)

    def to_dict(self) -> dict:
        if self.pmf is not None:
            return {"pmf": [float(p) for p in self.pmf]}
        return {"cdf": {"x": [float(v) for v in self.xs],
                        "F": [float(v) for v in self.fs]}}


def finite_belief(space: OutcomeSpace, pmf) -> Belief:
    if not space.is_finite:
        raise OutcomeMismatch("pmf beliefs need finite outcome spaces")
    arr = np.asarray(pmf, dtype=float)
    if arr.shape != (space.n,):
        raise ValueError(f"expected {space.n} probabilities")
    if np.any(arr < -STRUCT_TOL):
        raise ValueError("probabilities must be nonnegative")
    if abs(float(np.sum(arr)) - 1.0) > 1e-12:
        raise ValueError("probabilities must sum to 1 within 1e-12")
    arr = np.clip(arr, 0.0, None)
    arr.flags.writeable = False
    return Belief(space=space, pmf=arr)


def cdf_belief(xs, fs) -> Belief:
    """Continuous piecewise-linear CDF: starts at 0, ends at 1, strictly
    increasing on its support (hence no point masses)."""
    x = np.asarray(xs, dtype=float)
    f = np.asarray(fs, dtype=float)
    if x.ndim != 1 or x.shape != f.shape or len(x) < 2:
        raise ValueError("need matching breakpoint arrays of length >= 2")
    if np.any(np.diff(x) <= 0):
        raise ValueError("CDF breakpoints must be strictly increasing")
    if abs(f[0]) > STRUCT_TOL or abs(f[-1] - 1.0) > STRUCT_TOL:
        raise ValueError("CDF must start at 0 and end at 1")
    if np.any(np.diff(f) <= 0):
        raise ValueError("CDF must be strictly increasing on its support")
    x.flags.writeable = False
    f.flags.writeable = False
    return Belief(space=REAL_LINE, xs=x, fs=f)


def uniform_belief(a: float, b: float) -> Belief:
    return cdf_belief([a, b], [0.0, 1.0])


def expected_payoff(d: Contract, p: Belief) -> float:
    """E_p d(Y), exact for the supported representations."""
    if d.values is not None:
        if p.pmf is None or p.space.labels != d.space.labels:
            raise OutcomeMismatch("belief kind must match the outcome space")
        return float(np.dot(d.values, p.pmf))
    if p.pmf is not None:
        raise OutcomeMismatch("belief kind must match the outcome space")
    T = d.transform
    lo, hi = p.support()
    cuts = set(float(x) for x in p.xs)
    cuts.update(b for b in d.breakpoints() if lo < b < hi)
    cuts.update(k for k in T.kinks() if lo < k < hi)
    edges = sorted(cuts)
    total = []
    los = [pc.lo for pc in d.pieces]
    for a, b in zip(edges, edges[1:]):
        fa, fb = p.cdf(a), p.cdf(b)
        dens = (fb - fa) / (b - a)
        if dens == 0.0:
            continue
        i = max(bisect_right(los, 0.5 * (a + b)) - 1, 0)
        c0, c1, c2 = d.pieces[i].coeffs
        cell = 0.0
        if c0 != 0.0:
            cell += c0 * T.power_integral(0, a, b)
        if c1 != 0.0:
            cell += c1 * T.power_integral(1, a, b)
        if c2 != 0.0:
            cell += c2 * T.power_integral(2, a, b)
        total.append(dens * cell)
    return float(math.fsum(total))
