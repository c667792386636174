"""Rate-curve transform calculus on geometric grids.

A complexity curve maps a localization radius ``delta`` to a nonnegative
rate ``psi(delta)``.  Excess-risk bounds are driven by two derived
objects: the ratio envelope ``flat(psi, delta) = sup_{s >= delta}
psi(s)/s`` and its generalized inverse ``sharp(psi, eps) = inf{delta :
flat(psi, delta) <= eps}``, together with their discretizations on the
geometric grid ``delta_j = q**(-j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

ARBITRARY = "arbitrary"
CONCAVE = "concave"
STRICTLY_CONCAVE = "strictly_concave"

_SHAPES = (ARBITRARY, CONCAVE, STRICTLY_CONCAVE)

# Relative tolerance for auditing declared curve shapes on a grid.
SHAPE_RTOL = 1e-9


class NonMonotoneCurve(ValueError):
    """Grid evaluations of a curve contradict its declared shape."""


class EmptyGrid(ValueError):
    """A geometric grid with no points was requested."""


class OffGrid(ValueError):
    """A delta that must lie on the grid does not."""


class NotContractive(RuntimeError):
    """Fixed-point iterates increased; the shape declaration is wrong."""


@dataclass(frozen=True)
class ComplexityCurve:
    """A nondecreasing rate curve ``delta -> psi(delta)`` with a shape tag.

    Parameters
    ----------
    evaluator : callable
        Maps ``delta > 0`` to ``psi(delta) >= 0``; must accept numpy
        arrays of deltas and evaluate elementwise.
    shape : str
        ``"arbitrary"``, ``"concave"`` (``psi(u)/u`` nonincreasing) or
        ``"strictly_concave"`` (``psi(u)/u**gamma`` nonincreasing).
    gamma : float, optional
        Exponent in (0, 1); required iff shape is ``"strictly_concave"``.
    cap : float or None
        Upper end of the curve's domain.  ``None`` means unbounded.
        Defaults to 1, the natural scale for excess-risk curves.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    shape: str = ARBITRARY
    gamma: Optional[float] = None
    cap: Optional[float] = 1.0

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {_SHAPES}")
        if self.shape == STRICTLY_CONCAVE:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ValueError("strictly_concave curves need gamma in (0, 1)")
        elif self.gamma is not None:
            raise ValueError("gamma is only meaningful for strictly_concave curves")
        if self.cap is not None and self.cap <= 0:
            raise ValueError("cap must be positive (or None for unbounded)")

    def __call__(self, delta):
        return self.evaluator(np.asarray(delta, dtype=float))

    @property
    def in_concave_family(self) -> bool:
        return self.shape in (CONCAVE, STRICTLY_CONCAVE)


@dataclass(frozen=True)
class GeometricGrid:
    """Evaluation points ``delta_j = q**(-j)`` for ``j_min <= j <= j_max``."""

    q: float = 2.0
    j_min: int = -1
    j_max: int = 40

    def __post_init__(self):
        if not self.q > 1.0:
            raise ValueError("grid ratio q must exceed 1")
        if self.j_min > self.j_max:
            raise EmptyGrid(f"j_min={self.j_min} > j_max={self.j_max}")

    @property
    def points(self) -> np.ndarray:
        """Grid points in decreasing order (j ascending)."""
        js = np.arange(self.j_min, self.j_max + 1, dtype=float)
        return self.q ** (-js)

    @classmethod
    def for_sample(cls, n: int, t: float, q: float = 2.0) -> "GeometricGrid":
        """Working grid for a sample of size ``n`` at confidence ``t``.

        Spans j = -1 up to ceil(log_q(n/t)) + 2, so both the unit point
        and the t/n floor are covered.
        """
        if n <= 0 or t <= 0:
            raise ValueError("need n > 0 and t > 0")
        j_top = math.ceil(math.log(n / t, q)) + 2
        return cls(q=q, j_min=-1, j_max=max(j_top, 0))

    def index_of(self, delta: float, rtol: float = 1e-9) -> int:
        """Position of ``delta`` in :attr:`points`, or :class:`OffGrid`."""
        j = round(-math.log(delta, self.q))
        if self.j_min <= j <= self.j_max:
            point = self.q ** float(-j)
            if abs(point - delta) <= rtol * point:
                return int(j - self.j_min)
        raise OffGrid(f"delta={delta!r} is not a grid point of {self}")


def table_curve(grid: GeometricGrid, values, shape: str = ARBITRARY,
                gamma: Optional[float] = None) -> ComplexityCurve:
    """Curve defined by per-grid-point values (exact lookup, no interpolation).

    Evaluating off the grid raises :class:`OffGrid`; use for curves that
    only ever feed grid-based transforms.
    """
    vals = np.asarray(values, dtype=float)
    pts = grid.points
    if vals.shape != pts.shape:
        raise ValueError(f"need {pts.size} values for this grid, got {vals.size}")

    def evaluator(delta):
        delta = np.atleast_1d(np.asarray(delta, dtype=float))
        out = np.empty_like(delta)
        for i, d in enumerate(delta):
            out[i] = vals[grid.index_of(float(d))]
        return out if out.size > 1 else out[0]

    return ComplexityCurve(evaluator, shape=shape, gamma=gamma, cap=float(pts[0]))


def check_shape(psi: ComplexityCurve, deltas) -> None:
    """Audit the declared shape of ``psi`` on the probe points ``deltas``.

    Raises :class:`NonMonotoneCurve` when monotonicity of the curve (or
    of its shape-defining ratio) fails beyond relative tolerance 1e-9.
    """
    d = np.sort(np.unique(np.asarray(deltas, dtype=float)))
    if d.size == 0:
        return
    if np.any(d <= 0):
        raise ValueError("probe deltas must be positive")
    v = np.atleast_1d(np.asarray(psi(d), dtype=float))
    if np.any(v < -SHAPE_RTOL):
        raise NonMonotoneCurve("curve takes negative values")
    slack = SHAPE_RTOL * np.maximum(np.abs(v[1:]), np.abs(v[:-1])) + 1e-300
    if np.any(v[1:] - v[:-1] < -slack):
        raise NonMonotoneCurve("curve is not nondecreasing on the probe grid")
    if psi.shape == CONCAVE:
        r = v / d
    elif psi.shape == STRICTLY_CONCAVE:
        r = v / d ** psi.gamma
    else:
        return
    slack = SHAPE_RTOL * np.maximum(np.abs(r[1:]), np.abs(r[:-1])) + 1e-300
    if np.any(r[1:] - r[:-1] > slack):
        kind = psi.shape.replace("_", "-")
        raise NonMonotoneCurve(f"ratio of declared {kind} curve is not nonincreasing")


_WIDE_GRID = GeometricGrid(q=2.0, j_min=-60, j_max=60)


def _probe_points(psi: ComplexityCurve, grid: Optional[GeometricGrid],
                  low: float, subdivide: int = 1) -> np.ndarray:
    """Descending evaluation points in [low, cap] for non-concave sups.

    The supplied grid's exact points are always included so grid-based
    and continuous transforms stay mutually consistent; ``subdivide``
    adds geometric midpoints between adjacent grid levels.
    """
    g = grid if grid is not None else _WIDE_GRID
    pts = [g.points]
    if subdivide > 1:
        j_lo = g.j_min * subdivide
        j_hi = g.j_max * subdivide
        # keep the fine lattice at uniform resolution over the whole
        # domain, not just the grid window, so the reported infimum is
        # never coarsened by a coverage gap below (or above) the window
        if low > 0 and low < g.q ** float(-g.j_max):
            j_hi = max(j_hi, math.ceil(-math.log(low, g.q) * subdivide))
        top_ = psi.cap
        if top_ is not None and top_ > g.q ** float(-g.j_min):
            j_lo = min(j_lo, math.floor(-math.log(top_, g.q) * subdivide))
        js = np.arange(j_lo, j_hi + 1, dtype=float)
        pts.append(g.q ** (-js / subdivide))
    pts = np.concatenate(pts)
    top = psi.cap if psi.cap is not None else np.inf
    pts = pts[(pts >= low) & (pts <= top)]
    extra = [low]
    if np.isfinite(top) and top >= low:
        extra.append(top)
    pts = np.unique(np.concatenate([pts, np.asarray(extra, dtype=float)]))
    return pts[::-1]


def flat(psi: ComplexityCurve, delta: float, grid: Optional[GeometricGrid] = None) -> float:
    """``sup_{s >= delta} psi(s)/s`` over the curve's domain.

    Concave-family curves evaluate exactly to ``psi(delta)/delta``; for
    arbitrary curves the sup runs over ``{delta} ∪ {grid points >= delta}``.
    """
    delta = float(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if psi.cap is not None and delta > psi.cap * (1 + 1e-12):
        raise ValueError(f"delta={delta} exceeds the curve's domain cap {psi.cap}")
    if psi.in_concave_family:
        top = psi.cap if psi.cap is not None else max(delta, 1.0) * 2 ** 10
        probe = np.geomspace(delta, max(top, delta), num=9)
        check_shape(psi, probe)
        return float(psi(delta) / delta)
    pts = _probe_points(psi, grid, low=delta)
    check_shape(psi, pts)
    vals = np.asarray(psi(pts), dtype=float)
    return float(np.max(vals / pts))


def sharp(psi: ComplexityCurve, epsilon: float, grid: Optional[GeometricGrid] = None,
          tol: float = 1e-12) -> float:
    """``inf{delta > 0 : flat(psi, delta) <= epsilon}``.

    Concave-family curves are inverted by bisection on the decreasing
    ratio ``psi(delta)/delta`` (accurate to ``tol``); arbitrary curves
    return the smallest qualifying point of a refined evaluation grid.
    When no delta in the domain qualifies, a finite cap is returned as
    the conservative answer and an unbounded domain yields ``inf``.
    """
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    if psi.in_concave_family:
        return _sharp_concave(psi, epsilon, tol)

    pts = _probe_points(psi, grid, low=2.0 ** -80, subdivide=16)
    check_shape(psi, pts)
    vals = np.asarray(psi(pts), dtype=float)
    envelope = np.maximum.accumulate(vals / pts)  # flat() along descending points
    qualifies = envelope <= epsilon
    if not qualifies.any():
        return float(psi.cap) if psi.cap is not None else math.inf
    k = int(np.flatnonzero(qualifies).max())
    if k == len(pts) - 1 and vals[-1] == 0.0:
        return 0.0  # identically-zero tail: the true infimum is 0
    return float(pts[k])


def _sharp_concave(psi: ComplexityCurve, epsilon: float, tol: float) -> float:
    """Bisection inverse of the decreasing ratio psi(delta)/delta."""

    def ratio(d):
        return float(psi(d)) / d

    top = psi.cap if psi.cap is not None else None
    hi = top if top is not None else 1.0
    # Hunt for a qualifying upper end.
    tries = 0
    while ratio(hi) > epsilon:
        if top is not None:
            return float(top)  # nothing in the capped domain qualifies
        hi *= 2.0
        tries += 1
        if tries > 1000:  # past ~2**1000: treat as never qualifying
            return math.inf
    lo = hi
    while ratio(lo) <= epsilon:
        lo /= 2.0
        if lo < 1e-300:
            return 0.0  # ratio stays below epsilon all the way down
    check_shape(psi, np.geomspace(lo, hi, num=9))
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if ratio(mid) <= epsilon:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    return float(hi)


def flat_q(psi: ComplexityCurve, grid: GeometricGrid,
           restrict_unit: bool = False) -> np.ndarray:
    """The discretized ratio envelope, tabulated on the grid.

    Entry ``i`` is ``max psi(delta_j)/delta_j`` over grid points
    ``delta_j >= points[i]`` (points in descending order).  With
    ``restrict_unit`` the sup runs over grid points in (0, 1] only.
    """
    pts = grid.points
    if restrict_unit:
        try:
            grid.index_of(1.0)
        except OffGrid:
            raise ValueError("restricted transform needs the unit point on the grid")
        pts = pts[pts <= 1.0 + 1e-12]
    if pts.size == 0:
        raise EmptyGrid("no grid points available for the transform")
    check_shape(psi, pts)
    vals = np.asarray(psi(pts), dtype=float)
    return np.maximum.accumulate(vals / pts)


def sharp_q(psi: ComplexityCurve, epsilon: float, grid: GeometricGrid,
            restrict_unit: bool = False) -> float:
    """Discretized sharp transform on a geometric grid.

    The discretized ratio envelope is a step function between grid
    points, so its qualifying region's infimum is itself a grid point:
    one step below the last level whose upper grid tail qualifies.  If
    no level qualifies the restricted variant returns 1 (the standing
    convention); the unrestricted variant returns ``inf``.
    """
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = grid.points
    if restrict_unit:
        envelope = flat_q(psi, grid, restrict_unit=True)
        pts = pts[pts <= 1.0 + 1e-12]
    else:
        envelope = flat_q(psi, grid)
    qualifies = envelope <= epsilon  # True-prefix: envelope is nondecreasing
    if not qualifies.any():
        return 1.0 if restrict_unit else math.inf
    k = int(np.flatnonzero(qualifies).max())
    if k + 1 < pts.size:
        return float(pts[k + 1])
    if float(np.asarray(psi(pts[-1]), dtype=float)) == 0.0:
        return 0.0
    return float(pts[-1] / grid.q)  # everything qualifies: one step below the window


def fixed_point(psi: ComplexityCurve, max_iter: int = 200, tol: float = 1e-12):
    """Solve ``psi(delta) = delta`` by the capped iteration from 1.

    Requires a strictly-concave curve, for which the solution in (0, 1]
    is unique and the iterates ``d_{k+1} = min(psi(d_k), 1)`` decrease
    to it.  Returns ``(delta_bar, iterates)`` with ``iterates[0] == 1``.
    """
    if psi.shape != STRICTLY_CONCAVE:
        raise ValueError("fixed_point needs a strictly_concave curve")
    check_shape(psi, np.geomspace(max(tol, 1e-8), 1.0, num=17))
    d = 1.0
    iterates = [d]
    for _ in range(max_iter):
        nxt = min(float(psi(d)), 1.0)
        if nxt > d + 1e-12 * max(1.0, d):
            raise NotContractive(
                "iterates increased; the curve is not of strictly concave type")
        iterates.append(nxt)
        if abs(nxt - d) <= tol:
            d = nxt
            break
        d = nxt
    return d, iterates


def geometric_tail_sum(psi: ComplexityCurve, delta: float, grid: GeometricGrid) -> float:
    """``sum psi(delta_j)/delta_j`` over grid points ``delta_j >= delta``.

    ``delta`` must itself be a grid point.  For strictly-concave curves
    the sum is controlled by ``psi(delta)/delta`` times the geometric
    constant ``1/(1 - q**-(1-gamma))``.
    """
    if psi.shape != STRICTLY_CONCAVE:
        raise ValueError("geometric_tail_sum needs a strictly_concave curve")
    idx = grid.index_of(float(delta))
    pts = grid.points[: idx + 1]
    check_shape(psi, pts)
    vals = np.asarray(psi(pts), dtype=float)
    return float(np.sum(vals / pts))


def tail_sum_constant(gamma: float, q: float) -> float:
    """The geometric constant ``1/(1 - q**-(1-gamma))`` of the tail-sum bound."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if not q > 1.0:
        raise ValueError("q must exceed 1")
    return 1.0 / (1.0 - q ** -(1.0 - gamma))
