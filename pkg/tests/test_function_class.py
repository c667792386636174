"""Function classes: ERM, localized sets, diameters, moduli."""

import itertools
import math

import numpy as np
import pytest

from riskbound.function_class import (
    EmptyMinimalSet,
    FunctionClass,
    OracleDistribution,
    OracleUnavailable,
    RangeViolation,
    Sample,
    delta_minimal,
    diameter,
    draw_sample,
    empirical_metric2,
    erm,
    evaluate,
    monte_carlo_oracle,
    phi_hat,
    phi_n,
    phi_n_table,
    r_check,
    risk_report,
)


def const_class(*values):
    members = [lambda pts, v=v: np.full(len(pts), float(v)) for v in values]
    return FunctionClass.from_members(members)


def threshold_class(*cuts):
    members = [lambda pts, c=c: (np.asarray(pts) >= c).astype(float) for c in cuts]
    return FunctionClass.from_members(members, labels=[f"ge{c}" for c in cuts])


def uniform_sampler(n, rng):
    return rng.uniform(0.0, 1.0, size=n)


def cube_oracle(m):
    """All risks 1/2, all off-diagonal squared distances 1/2."""
    m2 = np.full((m, m), 0.5)
    np.fill_diagonal(m2, 0.0)
    return OracleDistribution(sampler=uniform_sampler,
                              risks=np.full(m, 0.5), metric2=m2)


# --- evaluation -----------------------------------------------------------

def test_evaluate_constant_half():
    mat = evaluate(const_class(0.5), Sample(np.arange(4.0)))
    assert np.all(mat.values == 0.5)


def test_evaluate_coordinate_readout():
    members = [lambda p, j=j: np.asarray(p)[:, j] for j in range(2)]
    fclass = FunctionClass.from_members(members, binary=True)
    pts = np.array([[0.0, 1.0], [1.0, 0.0]])
    mat = evaluate(fclass, Sample(pts))
    assert np.array_equal(mat.values, np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_evaluate_threshold():
    mat = evaluate(threshold_class(0.5), Sample(np.array([0.2, 0.8])))
    assert np.array_equal(mat.values[:, 0], np.array([0.0, 1.0]))


def test_evaluate_range_violation():
    bad = FunctionClass.from_members([lambda p: np.full(len(p), 1.5)])
    with pytest.raises(RangeViolation):
        evaluate(bad, Sample(np.zeros(3)))
    not_binary = FunctionClass.from_members([lambda p: np.full(len(p), 0.5)],
                                            binary=True)
    with pytest.raises(RangeViolation):
        evaluate(not_binary, Sample(np.zeros(3)))


def test_sample_needs_points():
    with pytest.raises(ValueError):
        Sample(np.array([]))


# --- ERM and reports ------------------------------------------------------

def test_erm_tie_break_lowest_index():
    vals = np.array([[0.4, 0.2, 0.2]])
    idx, rep = erm(vals)
    assert idx == 1  # first minimizer
    assert rep.empirical_excess[idx] == 0.0
    assert np.all(rep.empirical_excess >= 0.0)


def test_erm_single_member():
    idx, rep = erm(np.array([[0.7], [0.3]]))
    assert idx == 0
    assert rep.empirical_excess[0] == 0.0


def test_erm_matches_exhaustive_scan():
    rng = np.random.default_rng(5)
    vals = rng.integers(0, 2, size=(5, 3)).astype(float)
    idx, rep = erm(vals)
    means = [float(np.mean(vals[:, j])) for j in range(3)]
    best = min(range(3), key=lambda j: (means[j], j))
    assert idx == best
    assert rep.empirical_risks == pytest.approx(means)


def test_risk_report_requires_oracle_risks():
    oracle = OracleDistribution(sampler=uniform_sampler)
    with pytest.raises(OracleUnavailable):
        risk_report(np.array([[0.5]]), oracle)


# --- localized sets -------------------------------------------------------

def test_delta_minimal_full_and_erm():
    vals = np.array([[0.1, 0.6, 0.3]])
    idx, rep = erm(vals)
    assert list(delta_minimal(rep, 1.0, "empirical")) == [0, 1, 2]
    assert idx in delta_minimal(rep, 0.0, "empirical")


def test_delta_minimal_cube_always_full():
    oracle = cube_oracle(4)
    rep = risk_report(np.full((2, 4), 0.5), oracle)
    for d in (0.0, 0.1, 1.0):
        assert list(delta_minimal(rep, d, "true")) == [0, 1, 2, 3]


def test_delta_minimal_nesting():
    rng = np.random.default_rng(0)
    for _ in range(20):
        exc = np.sort(rng.uniform(0, 1, size=8))
        rep = erm(exc[None, :])[1]
        d1, d2 = sorted(rng.uniform(0, 1, size=2))
        s1 = set(delta_minimal(rep, d1, "empirical"))
        s2 = set(delta_minimal(rep, d2, "empirical"))
        assert s1 <= s2


def test_delta_minimal_rejects_bad_arguments():
    rep = erm(np.array([[0.5]]))[1]
    with pytest.raises(ValueError):
        delta_minimal(rep, -0.1, "empirical")
    with pytest.raises(OracleUnavailable):
        delta_minimal(rep, 0.5, "true")
    with pytest.raises(ValueError):
        delta_minimal(rep, 0.5, "both")


# --- diameters ------------------------------------------------------------

def test_diameter_singleton_zero():
    assert diameter(np.zeros((3, 3)), [1]) == 0.0


def test_diameter_cube_full_class():
    oracle = cube_oracle(5)
    got = diameter(oracle.metric2, np.arange(5))
    assert got == pytest.approx(math.sqrt(0.5), rel=1e-12)


def test_diameter_empirical_two_columns():
    vals = np.array([[0.0, 1.0], [0.0, 1.0]])
    m2 = empirical_metric2(vals)
    assert diameter(m2, [0, 1]) == pytest.approx(1.0, rel=1e-12)


def test_diameter_empty_raises():
    with pytest.raises(EmptyMinimalSet):
        diameter(np.zeros((2, 2)), [])


def test_diameter_monotone_in_delta():
    rng = np.random.default_rng(9)
    vals = rng.uniform(0, 1, size=(30, 6))
    m2 = empirical_metric2(vals)
    rep = erm(vals)[1]
    prev = 0.0
    for d in np.linspace(0, 1, 11):
        cur = diameter(m2, delta_minimal(rep, d, "empirical"))
        assert cur >= prev - 1e-12
        prev = cur


# --- phi_hat ----------------------------------------------------------------

def test_phi_hat_singleton_zero():
    vals = np.array([[0.2], [0.4]])
    assert phi_hat(vals, np.array([[1.0, -1.0]]), 1.0) == 0.0


def test_phi_hat_single_point():
    vals = np.array([[0.0, 1.0]])  # two members differing by 1 at the point
    assert phi_hat(vals, np.array([[1.0]]), 1.0) == pytest.approx(1.0)


def test_phi_hat_exhaustive_signs():
    vals = np.array([[0.0, 1.0], [0.0, 1.0]])
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=2)))
    assert phi_hat(vals, signs, 1.0) == pytest.approx(0.5)  # E|e1+e2|/2


def test_phi_hat_validates_signs():
    with pytest.raises(ValueError):
        phi_hat(np.array([[0.0, 1.0]]), np.array([[0.5]]), 1.0)


# --- phi_n ------------------------------------------------------------------

def test_phi_n_singleton_class():
    oracle = OracleDistribution(sampler=uniform_sampler, risks=np.array([0.5]))
    fclass = const_class(0.5)
    mean, se = phi_n(fclass, oracle, 1.0, n=8, replicates=10, seed=1)
    assert mean == 0.0 and se == 0.0


def test_phi_n_constant_pair_exactly_zero():
    # (P_n - P) of a constant difference vanishes identically
    oracle = OracleDistribution(sampler=uniform_sampler, risks=np.array([0.0, 1.0]))
    mean, se = phi_n(const_class(0.0, 1.0), oracle, 1.0, n=8, replicates=10, seed=1)
    assert mean == 0.0 and se == 0.0


def exact_threshold_modulus(n):
    """E |Bin(n, 1/2)/n - 1/2| by exhaustive outcome enumeration."""
    return sum(math.comb(n, b) * 0.5 ** n * abs(b / n - 0.5) for b in range(n + 1))


def test_phi_n_matches_exhaustive_outcome_oracle():
    # the pair {I(x >= 1/2), 0} reduces to a binomial count above 1/2
    assert exact_threshold_modulus(4) == pytest.approx(0.1875)
    assert exact_threshold_modulus(6) == pytest.approx(0.15625)
    members = [lambda p: (np.asarray(p) >= 0.5).astype(float),
               lambda p: np.zeros(len(p))]
    fclass = FunctionClass.from_members(members, binary=True)
    oracle = OracleDistribution(sampler=uniform_sampler, risks=np.array([0.5, 0.0]))
    for n in (4, 6):
        mean, se = phi_n(fclass, oracle, 0.6, n=n, replicates=3000, seed=42)
        assert se < 0.01
        assert abs(mean - exact_threshold_modulus(n)) <= 4 * se


def test_phi_n_is_deterministic_given_seed():
    oracle = OracleDistribution(sampler=uniform_sampler, risks=np.array([0.5, 0.0]))
    fclass = threshold_class(0.5, 1.1)  # second member is identically 0 on [0,1]
    a = phi_n(fclass, oracle, 1.0, n=16, replicates=50, seed=7)
    b = phi_n(fclass, oracle, 1.0, n=16, replicates=50, seed=7)
    assert a == b


def test_phi_n_table_shares_samples_coherently():
    # at a delta where the minimal set is the full class, the table entry
    # must agree with the scalar call on the same master seed
    oracle = OracleDistribution(sampler=uniform_sampler, risks=np.array([0.5, 0.0]))
    fclass = threshold_class(0.5, 1.1)
    means, ses = phi_n_table(fclass, oracle, [0.2, 1.0], n=16, replicates=40, seed=3)
    solo_mean, solo_se = phi_n(fclass, oracle, 1.0, n=16, replicates=40, seed=3)
    assert means[1] == pytest.approx(solo_mean)
    assert ses[1] == pytest.approx(solo_se)
    # the smaller localization keeps only the risk minimizer: modulus 0
    assert means[0] == 0.0


def test_phi_n_requires_oracle_and_replicates():
    fclass = const_class(0.5)
    bare = OracleDistribution(sampler=uniform_sampler)
    with pytest.raises(OracleUnavailable):
        phi_n(fclass, bare, 1.0, n=4, replicates=5)
    oracle = OracleDistribution(sampler=uniform_sampler, risks=np.array([0.5]))
    with pytest.raises(ValueError):
        phi_n(fclass, oracle, 1.0, n=4, replicates=1)


# --- r_check ----------------------------------------------------------------

def embedded_oracle(points, risks):
    """Oracle whose metric comes from a Euclidean embedding (genuine pseudometric)."""
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    m2 = np.sum(diff ** 2, axis=-1)
    return OracleDistribution(sampler=uniform_sampler,
                              risks=np.asarray(risks, float), metric2=m2)


def test_r_check_sigma_equals_delta():
    oracle = embedded_oracle([[0, 0], [1, 0], [0, 1]], [0.1, 0.2, 0.3])
    assert r_check(oracle, 0.2, 0.2) == 0.0


def test_r_check_cube_zero():
    oracle = cube_oracle(4)
    for sigma, delta in [(0.0, 0.0), (0.0, 0.5), (0.3, 0.9)]:
        assert r_check(oracle, sigma, delta) == 0.0


def test_r_check_matches_bruteforce():
    rng = np.random.default_rng(13)
    for _ in range(10):
        pts = rng.uniform(0, 0.7, size=(5, 2))
        risks = rng.uniform(0, 1, size=5)
        oracle = embedded_oracle(pts, risks)
        exc = risks - risks.min()
        for sigma, delta in [(0.0, 0.5), (0.2, 0.8), (0.5, 1.0)]:
            got = r_check(oracle, sigma, delta)
            outer = [j for j in range(5) if exc[j] <= delta]
            inner = [j for j in range(5) if exc[j] <= sigma]
            want = max(min(math.sqrt(oracle.metric2[f, g]) for g in inner)
                       for f in outer)
            assert got == pytest.approx(want, rel=1e-12)
            # dominated by the diameter of the outer set
            assert got <= diameter(oracle.metric2, outer) + 1e-12


def test_r_check_extension_is_pseudometric():
    rng = np.random.default_rng(21)
    pts = rng.uniform(0, 0.7, size=(6, 2))
    risks = rng.uniform(0, 1, size=6)
    oracle = embedded_oracle(pts, risks)

    def r_ext(a, b):
        lo, hi = sorted((a, b))
        return r_check(oracle, lo, hi)

    deltas = [0.0, 0.2, 0.4, 0.7, 1.0]
    for a, b, c in itertools.product(deltas, repeat=3):
        assert r_ext(a, c) <= r_ext(a, b) + r_ext(b, c) + 1e-12


def test_r_check_validates_arguments():
    oracle = cube_oracle(3)
    with pytest.raises(ValueError):
        r_check(oracle, 0.5, 0.2)
    bare = OracleDistribution(sampler=uniform_sampler)
    with pytest.raises(OracleUnavailable):
        r_check(bare, 0.1, 0.2)


# --- oracles ----------------------------------------------------------------

def test_oracle_validation():
    with pytest.raises(ValueError):
        OracleDistribution(sampler=uniform_sampler, risks=np.array([1.5]))
    bad_sym = np.array([[0.0, 0.2], [0.3, 0.0]])
    with pytest.raises(ValueError):
        OracleDistribution(sampler=uniform_sampler, metric2=bad_sym)
    bad_diag = np.array([[0.1, 0.2], [0.2, 0.0]])
    with pytest.raises(ValueError):
        OracleDistribution(sampler=uniform_sampler, metric2=bad_diag)


def test_draw_sample_deterministic():
    oracle = OracleDistribution(sampler=uniform_sampler)
    s1 = draw_sample(oracle, 5, seed=11)
    s2 = draw_sample(oracle, 5, seed=11)
    assert np.array_equal(s1.points, s2.points)
    assert s1.n == 5


def test_monte_carlo_oracle_against_closed_forms():
    fclass = threshold_class(0.25, 0.5)
    oracle = monte_carlo_oracle(fclass, uniform_sampler, n_draws=60_000, seed=2)
    eps = oracle.epsilon_oracle
    assert eps == pytest.approx(2.0 / math.sqrt(60_000))
    assert abs(oracle.risks[0] - 0.75) <= eps
    assert abs(oracle.risks[1] - 0.5) <= eps
    # P(f - g)^2 = P(0.25 <= x < 0.5) = 0.25
    assert abs(oracle.metric2[0, 1] - 0.25) <= eps
    varied = monte_carlo_oracle(fclass, uniform_sampler, n_draws=60_000, seed=2,
                                metric="variance")
    assert abs(varied.metric2[0, 1] - (0.25 - 0.25 ** 2)) <= eps
