"""Critical radii for excess risk: deviation bound tables and transforms.

Builds the base deviation bound U over a geometric grid from localized
expectation and diameter tables, its ratio table V and critical radius
delta_n, the oracle/empirical/inflated family (delta_bar, delta_hat,
delta_tilde), the concave-envelope refinement, and the geometric
refinement that replaces the diameter by the approximation radius of
the sigma-minimal set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from riskbound.transform import (
    ARBITRARY,
    CONCAVE,
    STRICTLY_CONCAVE,
    ComplexityCurve,
    GeometricGrid,
    flat_q,
    sharp,
    sharp_q,
    table_curve,
)
from riskbound.function_class import (
    OracleUnavailable,
    delta_minimal,
    diameter,
    draw_sample,
    empirical_metric2,
    evaluate,
    phi_hat,
    phi_n_table,
    r_check,
)


class GridMismatch(ValueError):
    """Tables passed to a bound formula live on different grids."""


class EnvelopeViolated(ValueError):
    """A declared envelope fails to dominate the raw table it covers."""


@dataclass(frozen=True)
class BoundConstants:
    """Numerical constants of the bound machinery.

    ``q`` is the grid ratio, ``t`` the confidence parameter.  ``K_bar``
    scales the oracle curve, ``K_hat``/``c_hat`` the empirical curve,
    ``K_tilde``/``c_tilde`` the inflated oracle curve, and ``K_check``
    the concave-envelope bound.  ``family_level`` is the localization
    level for the bar/hat/tilde transforms (default 1/(2q^3)).
    """

    q: float = 2.0
    t: float = 1.0
    K_bar: float = 2.0
    K_hat: float = 2.0
    K_tilde: float = 8.0
    c_hat: float = 1.5
    c_tilde: float = 3.0
    K_check: float = 4.0
    family_level: Optional[float] = None

    def __post_init__(self):
        if self.q <= 1:
            raise ValueError("need q > 1")
        if self.t <= 0:
            raise ValueError("need t > 0")
        if not 2.0 <= self.K_hat <= self.K_tilde:
            raise ValueError("need 2 <= K_hat <= K_tilde")
        if self.c_hat < 1 or self.c_tilde < 1:
            raise ValueError("need c_hat, c_tilde >= 1")
        if self.K_bar <= 0 or self.K_check <= 0:
            raise ValueError("need positive K_bar and K_check")
        if self.family_level is None:
            object.__setattr__(self, "family_level", 1.0 / (2.0 * self.q ** 3))
        elif not 0 < self.family_level < 1:
            raise ValueError("family_level must lie in (0, 1)")


@dataclass(frozen=True)
class FamilyRadii:
    """Critical radii of the oracle/empirical/inflated bound family."""

    delta_bar: float
    delta_hat: float
    delta_tilde: float
    u_bar: np.ndarray
    u_hat: np.ndarray
    u_tilde: np.ndarray


@dataclass(frozen=True)
class GeometricDiagnostics:
    """Grid tables behind the geometric refinement at one sigma."""

    sigma: float
    r_check: np.ndarray
    psi_check: np.ndarray
    psi_stderr: np.ndarray
    u_check: np.ndarray
    delta_check: float


@dataclass(frozen=True)
class BoundReport:
    """All bound tables and radii computed for one class and sample size."""

    grid: GeometricGrid
    phi: np.ndarray
    D: np.ndarray
    U: np.ndarray
    V: np.ndarray
    delta_n: float
    u_bar: Optional[np.ndarray] = None
    u_hat: Optional[np.ndarray] = None
    u_tilde: Optional[np.ndarray] = None
    delta_bar: Optional[float] = None
    delta_hat: Optional[float] = None
    delta_tilde: Optional[float] = None
    sigma: Optional[float] = None
    r_check: Optional[np.ndarray] = None
    psi_check: Optional[np.ndarray] = None
    u_check: Optional[np.ndarray] = None
    delta_check: Optional[float] = None

    def to_json_dict(self) -> dict:
        """Flat JSON-ready view (the CLI's serialization contract)."""
        as_list = lambda a: None if a is None else [float(x) for x in a]
        return {
            "grid": as_list(self.grid.points),
            "phi": as_list(self.phi),
            "D": as_list(self.D),
            "U": as_list(self.U),
            "delta_n": float(self.delta_n),
            "delta_bar": None if self.delta_bar is None else float(self.delta_bar),
            "delta_hat": None if self.delta_hat is None else float(self.delta_hat),
            "delta_tilde": None if self.delta_tilde is None else float(self.delta_tilde),
            "sigma": None if self.sigma is None else float(self.sigma),
            "r_check": as_list(self.r_check),
            "delta_check": None if self.delta_check is None else float(self.delta_check),
        }


def working_grid(n: int, consts: BoundConstants) -> GeometricGrid:
    """The geometric grid spanning the t/n floor up to above the unit cap."""
    return GeometricGrid.for_sample(n, consts.t, consts.q)


def _check_tables(grid: GeometricGrid, *tables):
    width = len(grid.points)
    out = []
    for table in tables:
        arr = np.asarray(table, dtype=float)
        if arr.shape != (width,):
            raise GridMismatch(
                f"table of length {arr.shape} does not match grid of {width} points")
        out.append(arr)
    return out


def u_n(grid: GeometricGrid, phi: np.ndarray, d: np.ndarray,
        consts: BoundConstants, n: int) -> np.ndarray:
    """Base deviation bound table on the grid.

    ``U(delta) = phi(delta) + sqrt(2 (t/n) (D^2(delta) + 2 phi(delta)))
    + t/(2n)`` evaluated at every grid point.
    """
    phi, d = _check_tables(grid, phi, d)
    tn = consts.t / n
    return phi + np.sqrt(2.0 * tn * (d ** 2 + 2.0 * phi)) + tn / 2.0


def v_n(grid: GeometricGrid, u_table: np.ndarray) -> np.ndarray:
    """Ratio table: running sup of U(delta_j)/delta_j over the right tail."""
    (u_table,) = _check_tables(grid, u_table)
    return flat_q(table_curve(grid, u_table, shape=ARBITRARY), grid)


def delta_n(grid: GeometricGrid, u_table: np.ndarray,
            consts: BoundConstants) -> float:
    """Critical radius: grid transform of the U table at level 1/(2q)."""
    (u_table,) = _check_tables(grid, u_table)
    curve = table_curve(grid, u_table, shape=ARBITRARY)
    return sharp_q(curve, 1.0 / (2.0 * consts.q), grid, restrict_unit=True)


def delta_family(grid: GeometricGrid, phi: Callable, d: Callable,
                 phi_hat_fn: Callable, d_hat_fn: Callable,
                 consts: BoundConstants, n: int) -> FamilyRadii:
    """Oracle, empirical and inflated critical radii.

    ``phi``/``d`` are oracle curves, ``phi_hat_fn``/``d_hat_fn`` their
    empirical versions; all four must be evaluable at scaled arguments
    (the empirical curve is read at c_hat * delta, the inflated one at
    c_tilde * delta).  Each bound table is transformed at the family
    level (default 1/(2q^3)), restricted to the unit interval.
    """
    tn = consts.t / n
    root = math.sqrt(tn)
    pts = grid.points
    u_bar = np.array([consts.K_bar * (phi(p) + d(p) * root + tn) for p in pts])
    u_hat = np.array([consts.K_hat * (phi_hat_fn(consts.c_hat * p)
                                      + d_hat_fn(consts.c_hat * p) * root + tn)
                      for p in pts])
    u_tilde = np.array([consts.K_tilde * (phi(consts.c_tilde * p)
                                          + d(consts.c_tilde * p) * root + tn)
                        for p in pts])
    radii = [sharp_q(table_curve(grid, u, shape=ARBITRARY), consts.family_level,
                     grid, restrict_unit=True)
             for u in (u_bar, u_hat, u_tilde)]
    return FamilyRadii(radii[0], radii[1], radii[2], u_bar, u_hat, u_tilde)


def empirical_curves(matrix, draws) -> tuple:
    """Empirical localized-sup and diameter curves from one dataset.

    Returns ``(phi_hat_fn, d_hat_fn)``: the symmetrized localized sup
    and the empirical diameter of the empirical delta-minimal set, both
    evaluable at any radius (as needed by `delta_family`).
    """
    signs = draws.signs if hasattr(draws, "signs") else draws
    metric2 = empirical_metric2(matrix)
    emp = matrix.empirical_risks
    excess = emp - emp.min()

    def phi_hat_fn(delta_value):
        return phi_hat(matrix, signs, delta_value)

    def d_hat_fn(delta_value):
        keep = np.flatnonzero(excess <= delta_value)
        return diameter(metric2, keep)

    return phi_hat_fn, d_hat_fn


def oracle_tables(fclass, oracle, grid: GeometricGrid, n: int,
                  replicates: int = 400, seed=0, scale: float = 1.0):
    """Oracle expectation and diameter tables on (scaled) grid points.

    Returns ``(phi_table, phi_stderr, d_table)`` at ``scale * delta_j``.
    The expectation table is estimated with shared replicate samples,
    so it is exactly nondecreasing across the grid.
    """
    if oracle.risks is None or oracle.metric2 is None:
        raise OracleUnavailable("oracle tables need true risks and metric")
    deltas = scale * grid.points
    means, stderrs = phi_n_table(fclass, oracle, deltas, n, replicates, seed)
    risks = np.asarray(oracle.risks, dtype=float)
    excess = risks - risks.min()
    d_table = np.array([diameter(oracle.metric2, np.flatnonzero(excess <= dv))
                        for dv in deltas])
    return means, stderrs, d_table


def u_check_concave(phi_env: ComplexityCurve, d_env: ComplexityCurve,
                    consts: BoundConstants, n: int,
                    grid: Optional[GeometricGrid] = None,
                    phi_table=None, d_table=None):
    """Concave-type bound curve and its continuous critical radius.

    ``phi_env`` must be strictly-concave-type and ``d_env`` of concave
    type; when raw grid tables are supplied the envelopes are audited
    for pointwise domination.  Returns ``(curve, delta_check)`` where
    the radius is the continuous transform of the curve at 1/q.
    """
    if phi_env.shape != STRICTLY_CONCAVE:
        raise ValueError("phi envelope must be of strictly concave type")
    if d_env.shape not in (CONCAVE, STRICTLY_CONCAVE):
        raise ValueError("diameter envelope must be of concave type")
    if phi_table is not None or d_table is not None:
        if grid is None:
            raise ValueError("envelope audit needs the grid of the raw tables")
        pts = grid.points
        inside = pts <= min(phi_env.cap, d_env.cap)
        if phi_table is not None:
            raw = np.asarray(phi_table, dtype=float)[inside]
            if np.any(phi_env(pts[inside]) < raw - 1e-9):
                raise EnvelopeViolated("phi envelope falls below the raw table")
        if d_table is not None:
            raw = np.asarray(d_table, dtype=float)[inside]
            if np.any(d_env(pts[inside]) < raw - 1e-9):
                raise EnvelopeViolated("diameter envelope falls below the raw table")
    tn = consts.t / n
    root = math.sqrt(tn)
    K = consts.K_check

    def evaluator(u):
        u = np.asarray(u, dtype=float)
        return K * (phi_env(u) + d_env(u) * root + tn)

    curve = ComplexityCurve(evaluator, shape=CONCAVE,
                            cap=min(phi_env.cap, d_env.cap))
    return curve, sharp(curve, 1.0 / consts.q)


def geometric_bound(fclass, oracle, sigma: float, consts: BoundConstants,
                    n: int, replicates: int = 400, seed=0,
                    grid: Optional[GeometricGrid] = None) -> GeometricDiagnostics:
    """Geometric refinement: critical radius driven by sigma-approximation.

    For each grid point, computes the approximation radius of the
    delta-minimal set by the sigma-minimal set, the expected sup of
    centered differences over pairs within that radius (Monte Carlo
    over fresh samples), the resulting bound table, and the grid
    transform of (bound + sigma) at 1/(2q).
    """
    if not 0.0 < sigma <= 1.0:
        raise ValueError("sigma must lie in (0, 1]")
    if oracle.risks is None or oracle.metric2 is None:
        raise OracleUnavailable("geometric bound needs true risks and metric")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    if grid is None:
        grid = working_grid(n, consts)
    pts = grid.points
    risks = np.asarray(oracle.risks, dtype=float)
    excess = risks - risks.min()
    metric2 = np.asarray(oracle.metric2, dtype=float)
    inner = np.flatnonzero(excess <= sigma)
    slack = oracle.epsilon_oracle
    r_table = np.zeros(len(pts))
    pair_rows, pair_cols = [], []
    for j, delta_value in enumerate(pts):
        outer = np.flatnonzero(excess <= delta_value)
        if delta_value > sigma:
            r_table[j] = r_check(oracle, sigma, delta_value)
        admissible = metric2[np.ix_(outer, inner)] <= (r_table[j] + slack) ** 2
        rows, cols = np.nonzero(admissible)
        pair_rows.append(outer[rows])
        pair_cols.append(inner[cols])
    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sups = np.zeros((replicates, len(pts)))
    for rep, child in enumerate(master.spawn(replicates)):
        sample = draw_sample(oracle, n, child)
        centered = evaluate(fclass, sample).empirical_risks - risks
        for j in range(len(pts)):
            gaps = np.abs(centered[pair_rows[j]] - centered[pair_cols[j]])
            sups[rep, j] = gaps.max() if len(gaps) else 0.0
    psi = sups.mean(axis=0)
    psi_se = sups.std(axis=0, ddof=1) / math.sqrt(replicates)
    tn = consts.t / n
    u_check = psi + np.sqrt(2.0 * tn * (r_table ** 2 + 2.0 * psi)) + tn / 2.0
    curve = table_curve(grid, u_check + sigma, shape=ARBITRARY)
    radius = sharp_q(curve, 1.0 / (2.0 * consts.q), grid, restrict_unit=True)
    return GeometricDiagnostics(sigma, r_table, psi, psi_se, u_check, radius)


def bound_report(grid: GeometricGrid, phi_table, d_table,
                 consts: BoundConstants, n: int,
                 family: Optional[FamilyRadii] = None,
                 geometric: Optional[GeometricDiagnostics] = None) -> BoundReport:
    """Assemble the full report from tables plus optional refinements."""
    phi_table, d_table = _check_tables(grid, phi_table, d_table)
    u_table = u_n(grid, phi_table, d_table, consts, n)
    extra = {}
    if family is not None:
        extra.update(u_bar=family.u_bar, u_hat=family.u_hat,
                     u_tilde=family.u_tilde, delta_bar=family.delta_bar,
                     delta_hat=family.delta_hat, delta_tilde=family.delta_tilde)
    if geometric is not None:
        extra.update(sigma=geometric.sigma, r_check=geometric.r_check,
                     psi_check=geometric.psi_check, u_check=geometric.u_check,
                     delta_check=geometric.delta_check)
    return BoundReport(grid=grid, phi=phi_table, D=d_table, U=u_table,
                       V=v_n(grid, u_table), delta_n=delta_n(grid, u_table, consts),
                       **extra)
