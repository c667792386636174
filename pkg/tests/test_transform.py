"""Transform calculus: frozen oracle values and algebraic properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskbound.transform import (
    ARBITRARY,
    CONCAVE,
    STRICTLY_CONCAVE,
    ComplexityCurve,
    EmptyGrid,
    GeometricGrid,
    NonMonotoneCurve,
    NotContractive,
    OffGrid,
    check_shape,
    fixed_point,
    flat,
    flat_q,
    geometric_tail_sum,
    sharp,
    sharp_q,
    table_curve,
    tail_sum_constant,
)


def power_curve(c, gamma, cap=None):
    return ComplexityCurve(lambda u, c=c, g=gamma: c * u ** g,
                           shape=STRICTLY_CONCAVE, gamma=gamma, cap=cap)


def const_curve(c, cap=None):
    return ComplexityCurve(lambda u, c=c: np.full_like(np.asarray(u, float), c),
                           shape=CONCAVE, cap=cap)


def step_curve(breaks, levels, cap):
    """Right-continuous nondecreasing step function on (0, cap]."""
    breaks = np.asarray(breaks, float)
    levels = np.asarray(levels, float)

    def evaluator(u):
        u = np.asarray(u, float)
        return levels[np.searchsorted(breaks, u, side="right")]

    return ComplexityCurve(evaluator, shape=ARBITRARY, cap=cap)


def random_step_curve(rng, cap=2.0):
    k = int(rng.integers(1, 8))
    breaks = np.sort(rng.uniform(cap * 2.0 ** -14, cap, size=k))
    levels = np.cumsum(rng.uniform(0.0, 0.6, size=k + 1))
    return step_curve(breaks, levels, cap)


# --- independent brute-force oracles -------------------------------------

def oracle_flat_q(psi, grid, delta):
    """sup of psi(d_j)/d_j over grid points d_j >= delta, by plain loop."""
    best = -math.inf
    for p in grid.points:
        if p >= delta:
            best = max(best, float(psi(p)) / p)
    return best


def oracle_sharp_q(psi, epsilon, grid):
    """Infimum of the qualifying region of the grid step envelope.

    The envelope is constant between adjacent grid points, so scan the
    levels from the top down and report one step below the last
    qualifying one.
    """
    pts = list(grid.points)  # descending
    answer = math.inf
    for i, p in enumerate(pts):
        if oracle_flat_q(psi, grid, p) <= epsilon:
            answer = pts[i + 1] if i + 1 < len(pts) else (
                0.0 if float(psi(pts[-1])) == 0.0 else pts[-1] / grid.q)
        else:
            break
    return answer


def oracle_sharp_step_exact(breaks, levels, eps, cap):
    """True inf{d : sup_{s in [d, cap]} psi(s)/s <= eps} for a step curve.

    Works piece by piece from the top down, carrying the sup of the
    ratio over everything already passed; exact, no evaluation grid.
    """
    edges = [0.0] + [float(b) for b in breaks] + [float(cap)]
    pieces = [(edges[i], edges[i + 1], float(levels[i])) for i in range(len(levels))]
    best = math.inf
    running = 0.0  # sup of psi(s)/s over s strictly above the current piece
    for lo, hi, lev in reversed(pieces):
        if running > eps:
            break
        if lev == 0.0:
            best = lo
        else:
            thresh = lev / eps  # self-ratio requires d >= thresh inside (lo, hi]
            if thresh <= lo:
                best = lo
            elif thresh <= hi:
                best = thresh
                break
            else:
                break
        running = max(running, lev / lo) if lo > 0 else running
    return best


# --- pinned examples ------------------------------------------------------

def test_flat_concave_exact():
    psi = power_curve(1.0, 0.5)
    assert flat(psi, 0.25) == pytest.approx(2.0, rel=1e-12)


def test_flat_constant():
    assert flat(const_curve(2.0), 0.5) == pytest.approx(4.0, rel=1e-12)


def test_flat_piecewise_scan():
    # psi = 0.05 on [0.1, 0.5), 0.1 on [0.5, 1]; sup of the ratio sits at delta
    psi = step_curve([0.5], [0.05, 0.1], cap=1.0)
    got = flat(psi, 0.1, grid=GeometricGrid(q=2.0, j_min=0, j_max=6))
    assert got == pytest.approx(0.5, rel=1e-12)


def test_sharp_power_and_constant():
    psi = power_curve(1.0, 0.5)
    assert sharp(psi, 0.5) == pytest.approx(4.0, rel=1e-10)
    assert sharp(const_curve(2.0), 4.0) == pytest.approx(0.5, rel=1e-12)


def test_sharp_capped_domain():
    # nothing in (0, cap] qualifies: the cap is the conservative answer
    assert sharp(power_curve(1.0, 0.5, cap=1.0), 0.5) == 1.0
    assert sharp(power_curve(1.0, 0.5, cap=4.0), 0.5) == pytest.approx(4.0, rel=1e-10)


def test_sharp_zero_curve():
    zero = ComplexityCurve(lambda u: np.zeros_like(np.asarray(u, float)),
                           shape=ARBITRARY, cap=None)
    assert sharp(zero, 0.123) == 0.0


def test_sharp_q_pinned_examples():
    grid = GeometricGrid(q=2.0, j_min=-1, j_max=10)
    one = const_curve(1.0)
    # frozen: the envelope of the unit constant qualifies down to 1, so the
    # reported infimum is one grid step below
    assert sharp_q(one, 1.0, grid) == pytest.approx(0.5, rel=1e-12)
    assert sharp_q(one, 0.5, grid) == pytest.approx(1.0, rel=1e-12)
    zero = ComplexityCurve(lambda u: np.zeros_like(np.asarray(u, float)),
                           shape=ARBITRARY, cap=None)
    assert sharp_q(zero, 0.3, grid) == 0.0


def test_sharp_q_matches_bruteforce_oracle():
    rng = np.random.default_rng(7)
    grid = GeometricGrid(q=2.0, j_min=-1, j_max=12)
    for _ in range(25):
        psi = random_step_curve(rng)
        for eps in (0.05, 0.3, 1.0, 4.0):
            got = sharp_q(psi, eps, grid)
            want = oracle_sharp_q(psi, eps, grid)
            if math.isinf(want):
                assert math.isinf(got)
            else:
                assert got == pytest.approx(want, rel=1e-12)


def test_sharp_q_restricted_unit():
    grid = GeometricGrid(q=2.0, j_min=-2, j_max=8)
    big = const_curve(50.0)  # never qualifies at eps=1: fall back to 1
    assert sharp_q(big, 1.0, grid, restrict_unit=True) == 1.0
    # the restricted variant needs the unit point on the grid
    with pytest.raises(ValueError):
        sharp_q(big, 1.0, GeometricGrid(q=2.0, j_min=1, j_max=5), restrict_unit=True)


def test_flat_q_is_running_sup():
    rng = np.random.default_rng(3)
    grid = GeometricGrid(q=2.0, j_min=0, j_max=9)
    psi = random_step_curve(rng, cap=1.0)
    env = flat_q(psi, grid)
    for i, p in enumerate(grid.points):
        assert env[i] == pytest.approx(oracle_flat_q(psi, grid, p), rel=1e-12)


def test_fixed_point_examples():
    d, iters = fixed_point(power_curve(0.5, 0.5))
    assert d == pytest.approx(0.25, abs=1e-9)
    assert iters[0] == 1.0
    assert all(b <= a + 1e-12 for a, b in zip(iters, iters[1:]))
    d2, _ = fixed_point(power_curve(0.3, 0.5))
    assert d2 == pytest.approx(0.09, abs=1e-9)  # c**(1/(1-gamma))


def test_fixed_point_rejects_identity_exponent():
    # psi(d) = d is the excluded gamma -> 1 boundary
    with pytest.raises(ValueError):
        ComplexityCurve(lambda u: u, shape=STRICTLY_CONCAVE, gamma=1.0)


def test_fixed_point_near_unit_boundary():
    d, _ = fixed_point(power_curve(0.99, 0.5))
    assert d == pytest.approx(0.99 ** 2, abs=1e-6)
    # psi(1) > 1: the capped iteration stays at 1 and reports it
    grower = ComplexityCurve(lambda u: np.asarray(u, float) ** 0.5 + 0.2,
                             shape=STRICTLY_CONCAVE, gamma=0.5)
    d, iters = fixed_point(grower)
    assert d == 1.0 and len(iters) >= 2


def test_fixed_point_detects_increasing_iterates():
    # a hidden bump between audit probes sends the iteration back up
    def bumpy(u):
        u = np.asarray(u, float)
        return np.where((u > 0.25) & (u < 0.3), 0.6, 0.28)

    liar = ComplexityCurve(bumpy, shape=STRICTLY_CONCAVE, gamma=0.5)
    with pytest.raises(NotContractive):
        fixed_point(liar)


def test_geometric_tail_sum_frozen():
    grid = GeometricGrid(q=2.0, j_min=0, j_max=2)
    psi = power_curve(1.0, 0.5)
    got = geometric_tail_sum(psi, 0.25, grid)
    # independent summation: 1/1 + sqrt(.5)/.5 + .5/.25
    want = 1.0 + math.sqrt(0.5) / 0.5 + 0.5 / 0.25
    assert got == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(4.41421356, abs=1e-7)
    bound = tail_sum_constant(0.5, 2.0) * float(psi(0.25)) / 0.25
    assert bound == pytest.approx(6.82842712, abs=1e-7)
    assert got <= bound


def test_geometric_tail_sum_off_grid():
    grid = GeometricGrid(q=2.0, j_min=0, j_max=4)
    with pytest.raises(OffGrid):
        geometric_tail_sum(power_curve(1.0, 0.5), 0.3, grid)


def test_table_curve_round_trip():
    grid = GeometricGrid(q=2.0, j_min=0, j_max=4)
    vals = np.array([0.5, 0.4, 0.3, 0.2, 0.1])
    psi = table_curve(grid, vals)
    assert float(psi(0.25)) == 0.3
    with pytest.raises(OffGrid):
        psi(0.3)
    with pytest.raises(ValueError):
        table_curve(grid, vals[:-1])


def test_shape_audit_raises():
    decreasing = ComplexityCurve(lambda u: 1.0 / np.asarray(u, float),
                                 shape=ARBITRARY, cap=None)
    with pytest.raises(NonMonotoneCurve):
        check_shape(decreasing, [0.1, 0.5, 1.0])
    convex_liar = ComplexityCurve(lambda u: np.asarray(u, float) ** 2,
                                  shape=CONCAVE, cap=None)
    with pytest.raises(NonMonotoneCurve):
        check_shape(convex_liar, [0.1, 0.5, 1.0])
    with pytest.raises(NonMonotoneCurve):
        flat(convex_liar, 0.1)


def test_grid_validation():
    with pytest.raises(EmptyGrid):
        GeometricGrid(q=2.0, j_min=3, j_max=1)
    with pytest.raises(ValueError):
        GeometricGrid(q=1.0)
    g = GeometricGrid.for_sample(n=512, t=2.0)
    assert g.points[0] == 2.0  # j = -1
    assert g.points[-1] <= 2.0 / 512  # the t/n floor is covered
    assert g.index_of(1.0) == 1


# --- algebraic properties -------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(gamma=st.floats(0.1, 0.85), c=st.floats(0.2, 3.0),
       e1=st.floats(0.05, 0.5), factor=st.floats(1.1, 8.0))
def test_sharp_monotone_in_epsilon(gamma, c, e1, factor):
    psi = power_curve(c, gamma)
    assert sharp(psi, e1) >= sharp(psi, e1 * factor) * (1 - 1e-9)


@settings(max_examples=40, deadline=None)
@given(gamma=st.floats(0.15, 0.8), eps=st.floats(0.1, 2.0),
       a=st.sampled_from([0.5, 2.0, 10.0]))
def test_sharp_scaling(gamma, eps, a):
    psi = power_curve(1.0, gamma)
    scaled = power_curve(a, gamma)
    assert sharp(scaled, eps) == pytest.approx(sharp(psi, eps / a), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.floats(0.05, 2.0))
def test_sharp_domination(seed, eps):
    rng = np.random.default_rng(seed)
    grid = GeometricGrid(q=2.0, j_min=-1, j_max=12)
    lo = random_step_curve(rng)
    bump = random_step_curve(rng)
    hi = ComplexityCurve(lambda u, a=lo, b=bump: a.evaluator(u) + b.evaluator(u),
                         shape=ARBITRARY, cap=lo.cap)
    assert sharp(lo, eps, grid=grid) <= sharp(hi, eps, grid=grid) + 1e-12


@settings(max_examples=40, deadline=None)
@given(g1=st.floats(0.15, 0.8), g2=st.floats(0.15, 0.8),
       c1=st.floats(0.2, 2.0), c2=st.floats(0.2, 2.0),
       e1=st.floats(0.05, 1.0), e2=st.floats(0.05, 1.0))
def test_sharp_splitting(g1, g2, c1, c2, e1, e2):
    p1 = power_curve(c1, g1)
    p2 = power_curve(c2, g2)
    total = ComplexityCurve(lambda u: c1 * u ** g1 + c2 * u ** g2,
                            shape=CONCAVE, cap=None)
    eps = e1 + e2
    lhs = max(sharp(p1, eps), sharp(p2, eps))
    mid = sharp(total, eps)
    rhs = max(sharp(p1, e1), sharp(p2, e2))
    assert lhs <= mid * (1 + 1e-9)
    assert mid <= rhs * (1 + 1e-9)


@settings(max_examples=60, deadline=None)
@given(gamma=st.floats(0.1, 0.85), c=st.floats(0.2, 3.0), eps=st.floats(0.05, 1.0))
def test_sharp_inverts_concave_ratio(gamma, c, eps):
    psi = power_curve(c, gamma)
    s = sharp(psi, eps)
    assert float(psi(s)) / s == pytest.approx(eps, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(gamma=st.floats(0.1, 0.8), scale=st.floats(0.05, 1.0), eps=st.floats(0.1, 1.0))
def test_sharp_strict_concave_scaling(gamma, scale, eps):
    psi = power_curve(1.0, gamma)
    assert sharp(psi, scale * eps) <= sharp(psi, eps) * scale ** (-1 / (1 - gamma)) * (1 + 1e-9)


def test_sharp_argument_scaling_constant():
    # nondecreasing psi, c >= 1: c * sharp(psi, u) <= sharp(psi, u/c)
    psi = power_curve(1.0, 0.5)
    for c in (1.0, 2.0, 5.0):
        for u in (0.1, 0.4, 1.0):
            assert c * sharp(psi, u) <= sharp(psi, u / c) * (1 + 1e-9)


def test_sharp_shift_direction():
    # shifting the argument up by c costs at most the larger of
    # sharp(psi, eps*u/2) - c and c*eps
    psi = power_curve(1.0, 0.5)
    for c in (0.05, 0.3):
        shifted = ComplexityCurve(lambda u, c=c: np.sqrt(np.asarray(u, float) + c),
                                  shape=CONCAVE, cap=None)
        for u in (0.2, 0.7):
            for eps in (0.25, 0.5, 1.0):
                lhs = sharp(shifted, u)
                rhs = max(sharp(psi, eps * u / 2.0) - c, c * eps)
                assert lhs <= rhs * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.floats(0.05, 2.0))
def test_sandwich_property(seed, eps):
    rng = np.random.default_rng(seed)
    grid = GeometricGrid(q=2.0, j_min=-1, j_max=12)
    psi = random_step_curve(rng)
    lo = sharp_q(psi, eps, grid)
    mid = sharp(psi, eps, grid=grid)
    hi = sharp_q(psi, eps / grid.q, grid)
    if math.isinf(lo):
        # no grid point qualifies; the continuous answer falls back to the cap
        assert mid == psi.cap
        return
    assert lo <= mid <= hi


def test_sharp_matches_exact_step_oracle():
    rng = np.random.default_rng(11)
    grid = GeometricGrid(q=2.0, j_min=-1, j_max=12)
    coarse = grid.points
    lattice_step = 2.0 ** (1.0 / 16.0)  # refinement of the evaluation lattice
    for trial in range(20):
        k = int(rng.integers(1, 6))
        idx = np.sort(rng.choice(np.arange(1, coarse.size), size=k, replace=False))
        breaks = np.sort(coarse[idx])
        levels = np.cumsum(rng.uniform(0.0, 0.6, size=k + 1))
        if trial % 4 == 0:
            levels = levels - levels[0]  # identically-zero bottom piece
        psi = step_curve(breaks, levels, cap=2.0)
        for eps in (0.1, 0.5, 2.0):
            got = sharp(psi, eps, grid=grid)
            want = oracle_sharp_step_exact(breaks, levels, eps, 2.0)
            if math.isinf(want):
                assert got == 2.0  # conservative cap convention
            else:
                assert want * (1 - 1e-12) <= got <= want * lattice_step * (1 + 1e-9)


def test_fixed_point_error_bound_lattice():
    for c in (0.1, 0.3, 0.5, 0.7, 0.9):
        for gamma in (0.25, 0.5, 0.75):
            psi = power_curve(c, gamma)
            dbar, iters = fixed_point(psi)
            exact = c ** (1.0 / (1.0 - gamma))
            assert dbar == pytest.approx(exact, abs=1e-9)
            for k, dk in enumerate(iters):
                bound = exact ** (1 - gamma ** k) * (1 - exact) ** (gamma ** k)
                assert dk - exact <= bound + 1e-9


def test_tail_sum_bound_lattice():
    grid = GeometricGrid(q=2.0, j_min=0, j_max=16)
    for c in (0.1, 0.5, 0.9):
        for gamma in (0.25, 0.5, 0.75):
            psi = power_curve(c, gamma)
            for delta in (1.0, 2.0 ** -4, 2.0 ** -16):
                s = geometric_tail_sum(psi, delta, grid)
                bound = tail_sum_constant(gamma, grid.q) * float(psi(delta)) / delta
                assert s <= bound * (1 + 1e-12)
