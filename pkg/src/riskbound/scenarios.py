"""Synthetic scenarios with exact oracles, and the experiment drivers.

Each scenario packages a finite function class together with an
`OracleDistribution` whose true risks and true metric are computed in
closed form, so that excess risks, critical radii, and selection
certificates can be checked against ground truth.  The experiment
drivers run seeded Monte Carlo sweeps (rates, radius orderings,
coverage, model selection) and return report objects that serialize to
CSV rows and JSON summaries.
"""

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Tuple

import numpy as np

from .bounds import (BoundConstants, bound_report, delta_family,
                     empirical_curves, oracle_tables, working_grid)
from .complexity import BadParams, KernelSpec, rademacher_modulus, \
    rademacher_signs
from .function_class import (FunctionClass, OracleDistribution, diameter,
                             draw_sample, erm, evaluate, phi_n_table)
from .selection import (ModelFamily, dimension_penalty, kernel_penalty,
                        massart_penalty, penalty_v1, penalty_v2,
                        quadratic_link, rademacher_penalty, select_comparison,
                        select_penalized, shattering_penalty)
from .complexity import mendelson_curves
from .transform import STRICTLY_CONCAVE, ComplexityCurve

NOISE_VAR = 1.0 / 48.0  # variance of uniform noise on [-1/4, 1/4]
NET_SCALE = 0.35   # default regression net pitch, in units of n^(-1/2)
NET_RADIUS = 3     # default regression net points per coordinate: 2r + 1

METHODS = ("erm", "comparison", "penalized-v1", "penalized-v2",
           "penalized-dimension", "penalized-shattering", "penalized-kernel",
           "penalized-rademacher", "penalized-massart")


@dataclass(frozen=True)
class Scenario:
    """A synthetic learning problem with an exact oracle.

    Parameters
    ----------
    name : str
        Identifier used in reports.
    oracle : OracleDistribution
        Sampler plus exact true risks and true metric for `fclass`.
    fclass : FunctionClass
        The full function class (for family scenarios, the largest
        model; its member order indexes the oracle arrays).
    truth : dict
        Ground-truth parameters (rate exponents, Bayes risk, per-member
        excess, model structure) recorded by the constructor.
    point_kind : str
        Human-readable description of a sample point.
    family : ModelFamily, optional
        Nested model family over subsets of ``fclass.members``.
    per_n : callable, optional
        ``per_n(n)`` rebuilds the scenario for sample size ``n`` when
        its class resolution follows a schedule in ``n``.
    """

    name: str
    oracle: OracleDistribution
    fclass: FunctionClass
    truth: dict
    point_kind: str
    family: Optional[ModelFamily] = None
    per_n: Optional[Callable] = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("scenario needs a nonempty name")
        if self.oracle.risks is None or self.oracle.metric2 is None:
            raise ValueError("scenario oracles must carry exact risks and metric")

    def at(self, n: int) -> "Scenario":
        """The scenario resolved for sample size n."""
        return self.per_n(n) if self.per_n is not None else self


@dataclass(frozen=True)
class ExperimentPlan:
    """Sweep settings for the experiment drivers.

    ``n_sweep`` must be strictly increasing and ``replicates`` at least
    2; ``t`` is the confidence parameter and ``seed`` the master seed
    from which every (n, trial) job splits its own stream.
    """

    n_sweep: Tuple[int, ...]
    replicates: int
    t: float = 1.0
    seed: int = 0
    outputs: Tuple[str, ...] = ()

    def __post_init__(self):
        sweep = tuple(int(n) for n in self.n_sweep)
        if len(sweep) == 0:
            raise ValueError("n_sweep must be nonempty")
        if any(n < 2 for n in sweep):
            raise ValueError("sample sizes must be at least 2")
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise ValueError("n_sweep must be strictly increasing")
        if self.replicates < 2:
            raise ValueError("need at least 2 replicates")
        if self.t <= 0:
            raise ValueError("need t > 0")
        object.__setattr__(self, "n_sweep", sweep)


# ---------------------------------------------------------------- scenarios


def cube_scenario(N: int) -> Scenario:
    """Coordinate functions on the uniform binary cube.

    Points are uniform on {0,1}^(N+1) and the class reads out the N+1
    coordinates, so every member has true risk exactly 1/2 (zero
    excess) and every pair is at squared distance exactly 1/2.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    m = N + 1
    members = [lambda x, j=j: np.asarray(x, dtype=float)[:, j] for j in range(m)]
    labels = [f"coord{j}" for j in range(m)]
    fclass = FunctionClass.from_members(members, labels=labels, binary=True)
    risks = np.full(m, 0.5)
    metric2 = np.full((m, m), 0.5)
    np.fill_diagonal(metric2, 0.0)
    oracle = OracleDistribution(
        sampler=lambda n, rng: rng.integers(0, 2, size=(n, m)).astype(float),
        risks=risks,
        metric2=metric2,
    )
    truth = {"N": N, "bayes_risk": 0.5, "excess": np.zeros(m),
             "rate_exponent": None}
    return Scenario(name=f"cube-{N}", oracle=oracle, fclass=fclass,
                    truth=truth, point_kind="binary coordinate vector")


def _threshold_scenario(kappa: float, rho: float, class_size: int,
                        n: int, builder: Callable) -> Scenario:
    pitch = float(n) ** (-1.0 / (2.0 * kappa + rho - 1.0))
    offsets = np.arange(class_size) - (class_size - 1) / 2.0
    thresholds = np.clip(0.5 + offsets * pitch, 0.0, 1.0)
    members = [lambda pts, b=b: ((np.asarray(pts)[:, 0] >= b)
                                 != (np.asarray(pts)[:, 1] > 0.5)).astype(float)
               for b in thresholds]
    labels = [f"thr{b:.6g}" for b in thresholds]
    fclass = FunctionClass.from_members(members, labels=labels, binary=True)
    bayes = 0.5 - 1.0 / (2.0 * kappa)
    excess = np.abs(2.0 * (thresholds - 0.5)) ** kappa / (2.0 * kappa)
    risks = bayes + excess
    metric2 = np.abs(thresholds[:, None] - thresholds[None, :])

    def sampler(n_pts, rng):
        x = rng.uniform(0.0, 1.0, size=n_pts)
        margin = np.sign(x - 0.5) * np.abs(2.0 * (x - 0.5)) ** (kappa - 1.0)
        y = (rng.uniform(0.0, 1.0, size=n_pts) < (1.0 + margin) / 2.0)
        return np.column_stack([x, y.astype(float)])

    oracle = OracleDistribution(sampler=sampler, risks=risks, metric2=metric2)
    truth = {
        "kappa": kappa,
        "rho": rho,
        "beta": kappa / (2.0 * kappa + rho - 1.0),
        "alpha": 1.0 / (kappa - 1.0) if kappa > 1.0 else math.inf,
        "bayes_risk": bayes,
        "pitch": pitch,
        "thresholds": thresholds,
        "excess": excess,
        "rate_exponent": kappa / (2.0 * kappa + rho - 1.0),
    }
    return Scenario(name=f"tsybakov-k{kappa:g}-r{rho:g}", oracle=oracle,
                    fclass=fclass, truth=truth,
                    point_kind="(x, label) pair on [0,1] x {0,1}",
                    per_n=builder)


def tsybakov_scenario(kappa: float, rho: float, class_size: int,
                      n: int = 1024) -> Scenario:
    """Margin-noise classification with an exact threshold-grid oracle.

    Points are (X, Y) with X uniform on [0,1] and the conditional mean
    of 2Y-1 equal to sign(x-1/2)|2(x-1/2)|^(kappa-1): the mass near the
    crossing satisfies the margin condition with exponent 1/(kappa-1)
    (hard margin at kappa=1).  The class is the 0-1 loss of an even
    grid of threshold classifiers straddling 1/2 at pitch
    n^(-1/(2 kappa + rho - 1)), so the best achievable excess tracks
    the rate n^(-beta) with beta = kappa/(2 kappa + rho - 1); risks and
    pairwise distances are exact integrals.  ``per_n`` rebuilds the
    grid for other sample sizes.
    """
    if kappa < 1.0:
        raise BadParams("need kappa >= 1")
    if not 0.0 < rho < 1.0:
        raise BadParams("need 0 < rho < 1")
    if class_size < 2 or class_size % 2:
        raise BadParams("class_size must be an even count >= 2 "
                        "(the grid straddles the crossing point)")
    if n < 2:
        raise BadParams("need n >= 2")

    def builder(n_new):
        return _threshold_scenario(kappa, rho, class_size, n_new, builder)

    return _threshold_scenario(kappa, rho, class_size, n, builder)


def _bin_index(x, bins: int):
    return np.minimum((np.asarray(x) * bins).astype(int), bins - 1)


def _regression_members(coeffs: np.ndarray, bins: int):
    members, labels = [], []
    for c in coeffs:
        members.append(lambda pts, c=c: (np.asarray(pts)[:, 1]
                                         - c[_bin_index(np.asarray(pts)[:, 0],
                                                        bins)]) ** 2)
        labels.append("c" + "/".join(f"{v:.4g}" for v in c))
    return members, labels


def _regression_oracle(coeffs: np.ndarray, gstar_bins: np.ndarray):
    """Exact risks and metric for squared loss of piecewise-constant nets.

    With X uniform, Y = g*(X) + U, and U uniform on [-1/4, 1/4], the
    risk of coefficients c is 1/48 + mean_b (c_b - g*_b)^2 and the
    squared distance between two members has the closed per-bin form
    mean_b (c_b - c'_b)^2 ((2 g*_b - c_b - c'_b)^2 + 1/12).
    """
    gaps = coeffs - gstar_bins[None, :]
    risks = NOISE_VAR + np.mean(gaps ** 2, axis=1)
    diff = coeffs[:, None, :] - coeffs[None, :, :]
    summ = coeffs[:, None, :] + coeffs[None, :, :]
    centered = (2.0 * gstar_bins[None, None, :] - summ) ** 2 + 1.0 / 12.0
    metric2 = np.mean(diff ** 2 * centered, axis=2)
    np.fill_diagonal(metric2, 0.0)
    return risks, metric2


def _regression_sampler(gstar_fn):
    def sampler(n_pts, rng):
        x = rng.uniform(0.0, 1.0, size=n_pts)
        noise = rng.uniform(-0.25, 0.25, size=n_pts)
        y = np.clip(gstar_fn(x) + noise, 0.0, 1.0)
        return np.column_stack([x, y])
    return sampler


def _net_regression(d: int, values, n: int, builder) -> Scenario:
    if values is None:
        pitch = NET_SCALE / math.sqrt(n)
        if NET_RADIUS * pitch > 0.5:
            raise ValueError("sample size too small for the default "
                             "coefficient net to fit [0,1]")
        vals = 0.5 + pitch * np.arange(-NET_RADIUS, NET_RADIUS + 1)
    else:
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 1 or len(vals) < 2:
            raise ValueError("values must be a 1-d net with >= 2 points")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("net values must lie in [0,1]")
    if len(vals) ** d > 4000:
        raise ValueError("coefficient net too large; reduce d or the net")
    coeffs = np.array(list(product(vals, repeat=d)), dtype=float)
    members, labels = _regression_members(coeffs, d)
    fclass = FunctionClass.from_members(members, labels=labels)
    gstar_bins = np.full(d, 0.5)
    risks, metric2 = _regression_oracle(coeffs, gstar_bins)
    oracle = OracleDistribution(
        sampler=_regression_sampler(lambda x: np.full(np.asarray(x).shape, 0.5)),
        risks=risks,
        metric2=metric2,
    )
    block = KernelSpec(kernel=lambda a, b: (
        _bin_index(np.asarray(a)[..., 0], d)
        == _bin_index(np.asarray(b)[..., 0], d)).astype(float))
    truth = {"d": d, "rate_exponent": 1.0, "noise_var": NOISE_VAR,
             "coeffs": coeffs, "excess": risks - NOISE_VAR,
             "kernel": block, "bayes_risk": NOISE_VAR}
    return Scenario(name=f"regression-d{d}", oracle=oracle, fclass=fclass,
                    truth=truth, point_kind="(x, y) pair in [0,1]^2",
                    per_n=builder)


def finite_dim_regression(d: int, values=None, n: int = 1024) -> Scenario:
    """Squared-loss regression over a finite net of a d-dimensional span.

    X is uniform on [0,1], the span is the d indicator bins of an equal
    partition, g* is the constant 1/2 (inside every net), and
    Y = clip(g*(X) + U, 0, 1) with U uniform on [-1/4, 1/4] (the clip
    never binds).  Members are squared-loss compositions of all
    coefficient vectors from a per-coordinate net; risks and pairwise
    distances are exact integrals.  By default the net is the seven
    points 1/2 + 0.35 n^(-1/2) {-3..3}, matched to the per-bin noise
    scale so the excess of the empirical minimizer tracks the d/n
    statistical rate (``per_n`` rebuilds the net per sample size);
    passing explicit ``values`` fixes a static net instead.
    """
    if d < 1:
        raise ValueError("need d >= 1")
    if values is None:
        def builder(n_new):
            return _net_regression(d, None, n_new, builder)
        return _net_regression(d, None, n, builder)
    return _net_regression(d, values, n, None)


def nested_regression_family(levels: int = 4, t: float = 2.0) -> Scenario:
    """A nested family of piecewise-constant regressions with k* = 2.

    Model k holds every {1/4, 3/4}-valued function that is constant on
    2^(k-1) equal bins of [0,1]; deeper models refine shallower ones
    and share member objects, so the family is nested by identity.
    The regression function takes value 1/4 left of 1/2 and 3/4 right
    of it: model 1 misses it by exactly 1/8 in squared norm and every
    model from the second on contains it, so the oracle model index
    is 2.  Risks and distances are exact (same noise model as
    `finite_dim_regression`).
    """
    if levels < 2:
        raise ValueError("need at least 2 levels")
    bins = 2 ** (levels - 1)
    if bins > 16:
        raise ValueError("too many levels; the finest model gets 2^bins members")
    coeffs = np.array(list(product((0.25, 0.75), repeat=bins)), dtype=float)
    members, labels = _regression_members(coeffs, bins)
    fclass = FunctionClass.from_members(members, labels=labels)
    gstar_bins = np.where(np.arange(bins) < bins // 2, 0.25, 0.75)
    risks, metric2 = _regression_oracle(coeffs, gstar_bins)
    oracle = OracleDistribution(
        sampler=_regression_sampler(
            lambda x: np.where(np.asarray(x) < 0.5, 0.25, 0.75)),
        risks=risks,
        metric2=metric2,
    )
    model_indices = []
    for k in range(1, levels + 1):
        width = bins // 2 ** (k - 1)
        blocks = coeffs.reshape(len(coeffs), 2 ** (k - 1), width)
        flat = np.flatnonzero((blocks == blocks[:, :, :1]).all(axis=(1, 2)))
        model_indices.append(tuple(int(i) for i in flat))
    classes = tuple(
        FunctionClass.from_members([members[i] for i in idx],
                                   labels=[labels[i] for i in idx])
        for idx in model_indices)
    family = ModelFamily(classes, (float(t),) * levels, nested_flag=True)
    truth = {"dims": tuple(2 ** (k - 1) for k in range(1, levels + 1)),
             "k_star": 2, "noise_var": NOISE_VAR,
             "excess": risks - NOISE_VAR, "bayes_risk": NOISE_VAR,
             "model_indices": tuple(model_indices),
             "kernels": tuple(
                 KernelSpec(kernel=lambda a, b, nb=2 ** (k - 1): (
                     _bin_index(np.asarray(a)[..., 0], nb)
                     == _bin_index(np.asarray(b)[..., 0], nb)).astype(float))
                 for k in range(1, levels + 1))}
    return Scenario(name=f"nested-regression-{levels}", oracle=oracle,
                    fclass=fclass, truth=truth,
                    point_kind="(x, y) pair in [0,1]^2", family=family)


def adaptive_t_schedule(sizes, n: int) -> Tuple[float, ...]:
    """Per-model confidence levels log(size) + 3 log(n)."""
    if n < 2:
        raise ValueError("need n >= 2")
    return tuple(math.log(int(s)) + 3.0 * math.log(n) for s in sizes)


# ------------------------------------------------------------ trial engine


def _model_index_map(scenario: Scenario):
    family = scenario.family
    if family is None:
        return ((tuple(range(len(scenario.fclass)))),)
    stored = scenario.truth.get("model_indices")
    if stored is not None:
        return tuple(tuple(idx) for idx in stored)
    lookup = {id(m): i for i, m in enumerate(scenario.fclass.members)}
    return tuple(tuple(lookup[id(m)] for m in cls.members)
                 for cls in family.classes)


def _effective_family(scenario: Scenario, t: float) -> ModelFamily:
    if scenario.family is not None:
        return scenario.family
    return ModelFamily((scenario.fclass,), (float(t),), nested_flag=True)


def _submatrix(matrix, cls, indices):
    from .function_class import EvaluationMatrix
    return EvaluationMatrix(values=matrix.values[:, list(indices)],
                            fclass=cls, sample=matrix.sample)


def _family_delta_hats(matrix, family, index_map, consts, n, seed, draws):
    signs = rademacher_signs(n, seed=seed, n_draws=draws)
    grid = working_grid(n, consts)
    zero = lambda _: 0.0
    out = []
    for cls, idx in zip(family.classes, index_map):
        phi_hat_fn, d_hat_fn = empirical_curves(_submatrix(matrix, cls, idx),
                                                signs)
        out.append(delta_family(grid, zero, zero, phi_hat_fn, d_hat_fn,
                                consts, n).delta_hat)
    return np.asarray(out)


def _modulus_envelope(matrix, signs, grid) -> ComplexityCurve:
    """Square-root envelope dominating the empirical localized modulus."""
    table = np.array([rademacher_modulus(matrix, signs, dv)[0]
                      for dv in grid.points])
    coeff = float((table / np.sqrt(grid.points)).max())
    top = float(grid.points.max())
    return ComplexityCurve(
        lambda u, c=coeff: c * np.sqrt(np.asarray(u, dtype=float)),
        shape=STRICTLY_CONCAVE, gamma=0.5, cap=top)


def run_trial(scenario: Scenario, n: int, seed, method: str,
              consts: Optional[BoundConstants] = None, t: float = 1.0,
              draws: int = 256):
    """One seeded draw: fit by ``method`` and score against the oracle.

    Returns ``(excess, k_hat, certificate)`` where the excess is the
    selected member's true excess risk, ``k_hat`` the chosen model
    (1-based; 1 for plain ERM), and ``certificate`` the selection
    score bound (None for ERM).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; one of {METHODS}")
    scenario = scenario.at(n)
    risks = np.asarray(scenario.oracle.risks, dtype=float)
    sample = draw_sample(scenario.oracle, n, seed)
    matrix = evaluate(scenario.fclass, sample)
    if method == "erm":
        idx, _ = erm(matrix)
        return float(risks[idx] - risks.min()), 1, None

    family = _effective_family(scenario, t)
    index_map = _model_index_map(scenario)
    consts = consts or BoundConstants(t=t)
    emp = matrix.empirical_risks
    mins = np.array([emp[list(idx)].min() for idx in index_map])
    erm_cols = [idx[int(np.argmin(emp[list(idx)]))] for idx in index_map]
    ts = np.asarray(family.t_schedule, dtype=float)

    if method in ("penalized-v1", "penalized-v2", "comparison"):
        dh = _family_delta_hats(matrix, family, index_map, consts, n,
                                (*_seed_tuple(seed), 77), draws)
        if method == "penalized-v1":
            pens = penalty_v1(dh, mins, ts, n)
            result = select_penalized(mins, pens, delta_hats=dh,
                                      method="penalized-v1")
        elif method == "penalized-v2":
            link = (family.links[0] if family.links is not None
                    else quadratic_link(2.0))
            pi_hat, _ = penalty_v2(dh, link, 0.5, ts, n)
            result = select_penalized(mins, pi_hat, delta_hats=dh,
                                      method="penalized-v2")
        else:
            result = select_comparison(family, mins, dh)
    elif method == "penalized-dimension":
        dims = scenario.truth.get("dims")
        if dims is None:
            raise ValueError("dimension method needs per-model dimensions "
                             "in the scenario truth")
        pens = dimension_penalty(dims, ts, n)
        result = select_penalized(mins, pens, method=method)
    elif method == "penalized-shattering":
        pens, s_mins, _ = shattering_penalty(family, sample)
        result = select_penalized(s_mins, pens, method=method)
    elif method == "penalized-kernel":
        specs = scenario.truth.get("kernels")
        if specs is None:
            single = scenario.truth.get("kernel")
            specs = None if single is None else (single,) * len(family)
        if specs is None:
            raise ValueError("kernel method needs kernel specs in the "
                             "scenario truth")
        gammas = [mendelson_curves(spec, sample)[0] for spec in specs]
        pens = kernel_penalty(gammas, ts, n)
        result = select_penalized(mins, pens, method=method)
    else:  # penalized-rademacher | penalized-massart
        signs = rademacher_signs(n, seed=(*_seed_tuple(seed), 78),
                                 n_draws=draws)
        grid = working_grid(n, consts)
        curves = [_modulus_envelope(_submatrix(matrix, cls, idx), signs, grid)
                  for cls, idx in zip(family.classes, index_map)]
        if method == "penalized-rademacher":
            pens = rademacher_penalty(curves, ts, n)
        else:
            pens, _ = massart_penalty(family, (4.0,) * len(family), curves,
                                      0.5, n)
        result = select_penalized(mins, pens, method=method)

    col = erm_cols[result.k_hat - 1]
    certificate = (None if result.certificate is None
                   else float(result.certificate))
    return float(risks[col] - risks.min()), result.k_hat, certificate


def _seed_tuple(seed):
    return tuple(seed) if isinstance(seed, tuple) else (seed,)


# ----------------------------------------------------------------- reports


@dataclass(frozen=True)
class RateReport:
    """Per-n mean excess risks and the fitted log-log rate."""

    scenario: str
    method: str
    n_sweep: Tuple[int, ...]
    means: np.ndarray
    stderrs: np.ndarray
    slope: Optional[float]
    slope_ci: Optional[float]
    degenerate: bool
    rows: Tuple[tuple, ...] = field(repr=False, default=())

    def csv_header(self):
        return ["scenario", "n", "trial", "excess", "k_hat"]

    def csv_rows(self):
        return [list(row) for row in self.rows]

    def to_json_dict(self) -> dict:
        return {
            "experiment": "rate",
            "scenario": self.scenario,
            "method": self.method,
            "n_sweep": list(self.n_sweep),
            "means": [float(v) for v in self.means],
            "stderrs": [float(v) for v in self.stderrs],
            "slope": None if self.slope is None else float(self.slope),
            "slope_ci": None if self.slope_ci is None else float(self.slope_ci),
            "degenerate": bool(self.degenerate),
        }


@dataclass(frozen=True)
class Prop2Report:
    """Critical radii and non-inclusion frequencies across cube sizes."""

    n: int
    t: float
    N_list: Tuple[int, ...]
    delta_ns: np.ndarray
    frequencies: np.ndarray
    rows: Tuple[tuple, ...] = field(repr=False, default=())

    def csv_header(self):
        return ["scenario", "N", "n", "trial", "non_inclusion", "delta_n"]

    def csv_rows(self):
        return [list(row) for row in self.rows]

    def to_json_dict(self) -> dict:
        deltas = [float(v) for v in self.delta_ns]
        freqs = [float(v) for v in self.frequencies]
        return {
            "experiment": "prop2",
            "n": self.n,
            "t": self.t,
            "N_list": list(self.N_list),
            "delta_n": deltas,
            "non_inclusion": freqs,
            "delta_monotone": all(b >= a - 1e-12
                                  for a, b in zip(deltas, deltas[1:])),
            "freq_monotone": all(b >= a - 1e-12
                                 for a, b in zip(freqs, freqs[1:])),
            "final_freq": freqs[-1],
        }


@dataclass(frozen=True)
class OrderingReport:
    """Oracle radii against the per-trial empirical radius."""

    scenario: str
    n: int
    t: float
    delta_bar: float
    delta_tilde: float
    delta_hats: np.ndarray
    freq_ordered: float
    rows: Tuple[tuple, ...] = field(repr=False, default=())

    def csv_header(self):
        return ["scenario", "n", "trial", "delta_hat", "ordered"]

    def csv_rows(self):
        return [list(row) for row in self.rows]

    def to_json_dict(self) -> dict:
        return {
            "experiment": "ordering",
            "scenario": self.scenario,
            "n": self.n,
            "t": self.t,
            "delta_bar": float(self.delta_bar),
            "delta_tilde": float(self.delta_tilde),
            "delta_hat_mean": float(np.mean(self.delta_hats)),
            "freq_ordered": float(self.freq_ordered),
        }


@dataclass(frozen=True)
class CoverageReport:
    """Frequency of ERM excess exceeding the critical radius."""

    scenario: str
    n: int
    t: float
    delta_n: float
    frequency: float
    budget: float
    rows: Tuple[tuple, ...] = field(repr=False, default=())

    def csv_header(self):
        return ["scenario", "n", "trial", "excess", "delta_n"]

    def csv_rows(self):
        return [list(row) for row in self.rows]

    def to_json_dict(self) -> dict:
        return {
            "experiment": "coverage",
            "scenario": self.scenario,
            "n": self.n,
            "t": self.t,
            "delta_n": float(self.delta_n),
            "frequency": float(self.frequency),
            "budget": float(self.budget),
            "within_budget": bool(self.frequency <= self.budget),
        }


@dataclass(frozen=True)
class SelectionReport:
    """Per-trial selection outcomes against the oracle model index."""

    scenario: str
    method: str
    n: int
    k_star: int
    pi_tilde: np.ndarray
    excesses: np.ndarray
    k_hats: np.ndarray
    freq_k_within: float
    ratio_95: float
    rows: Tuple[tuple, ...] = field(repr=False, default=())

    def csv_header(self):
        return ["scenario", "n", "trial", "excess", "k_hat"]

    def csv_rows(self):
        return [list(row) for row in self.rows]

    def to_json_dict(self) -> dict:
        return {
            "experiment": "selection",
            "scenario": self.scenario,
            "method": self.method,
            "n": self.n,
            "k_star": int(self.k_star),
            "pi_tilde": [float(v) for v in self.pi_tilde],
            "mean_excess": float(np.mean(self.excesses)),
            "freq_k_within": float(self.freq_k_within),
            "ratio_95": float(self.ratio_95),
        }


# ----------------------------------------------------------------- drivers


def _fit_slope(ns, means):
    """OLS slope of log mean vs log n on the top half of the sweep."""
    half = len(ns) // 2
    ys = np.asarray(means, dtype=float)[half:]
    if np.any(ys <= 0.0):
        return None, None, True
    x = np.log(np.asarray(ns, dtype=float)[half:])
    y = np.log(ys)
    if len(x) < 2:
        return None, None, True
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    intercept = y.mean() - slope * x.mean()
    if len(x) == 2:
        return slope, None, False
    resid = y - intercept - slope * x
    se = math.sqrt(float(resid @ resid) / (len(x) - 2) / float(xc @ xc))
    return slope, 2.0 * se, False


def run_rate_experiment(scenario: Scenario, plan: ExperimentPlan,
                        method: str = "erm",
                        consts: Optional[BoundConstants] = None) -> RateReport:
    """Mean excess risk across the n-sweep and its fitted log-log slope.

    The excess is measured against the scenario's reference risk (the
    Bayes risk when the truth records one, else the class best), so a
    class resolution that follows a schedule in n contributes its
    approximation floor to the rate.  Every (n, trial) job draws from
    its own seed split off the plan's master seed, so the report is
    deterministic.  The slope is fitted on the upper half of the sweep;
    a sweep whose upper-half means hit zero (exactly-realizable
    scenarios) is flagged degenerate instead of fitted.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; one of {METHODS}")
    means, stderrs, rows = [], [], []
    for ni, n in enumerate(plan.n_sweep):
        resolved = scenario.at(n)
        risks = np.asarray(resolved.oracle.risks, dtype=float)
        floor = float(risks.min()
                      - resolved.truth.get("bayes_risk", risks.min()))
        excesses = []
        for trial in range(plan.replicates):
            excess, k_hat, _ = run_trial(resolved, n,
                                         (plan.seed, ni, trial), method,
                                         consts=consts, t=plan.t)
            excess += floor
            excesses.append(excess)
            rows.append((scenario.name, n, trial, excess,
                         "" if method == "erm" else k_hat))
        arr = np.asarray(excesses)
        means.append(arr.mean())
        stderrs.append(arr.std(ddof=1) / math.sqrt(len(arr)))
    slope, ci, degenerate = _fit_slope(plan.n_sweep, means)
    return RateReport(scenario=scenario.name, method=method,
                      n_sweep=plan.n_sweep, means=np.asarray(means),
                      stderrs=np.asarray(stderrs), slope=slope, slope_ci=ci,
                      degenerate=degenerate, rows=tuple(rows))


def run_prop2_experiment(N_list, n: int, t: float, trials: int, seed=0,
                         replicates: int = 300) -> Prop2Report:
    """Radius growth and non-inclusion frequencies on cube scenarios.

    For each N the critical radius delta_n(t) comes from the oracle
    table pipeline; the non-inclusion frequency is how often the full
    class (every member has zero true excess) fails to sit inside the
    empirical delta-minimal set at delta = 0.25 sqrt(log N / n).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    consts = BoundConstants(t=t)
    grid = working_grid(n, consts)
    delta_ns, freqs, rows = [], [], []
    for N in N_list:
        scenario = cube_scenario(N)
        phi_tab, _, d_tab = oracle_tables(scenario.fclass, scenario.oracle,
                                          grid, n, replicates=replicates,
                                          seed=(seed, N, 0))
        report = bound_report(grid, phi_tab, d_tab, consts, n)
        delta = 0.25 * math.sqrt(math.log(N) / n)
        hits = []
        for trial in range(trials):
            sample = draw_sample(scenario.oracle, n, (seed, N, 1, trial))
            emp = evaluate(scenario.fclass, sample).empirical_risks
            hit = bool(emp.max() > emp.min() + delta)
            hits.append(hit)
            rows.append((scenario.name, N, n, trial, int(hit),
                         report.delta_n))
        delta_ns.append(report.delta_n)
        freqs.append(float(np.mean(hits)))
    return Prop2Report(n=n, t=t, N_list=tuple(int(N) for N in N_list),
                       delta_ns=np.asarray(delta_ns),
                       frequencies=np.asarray(freqs), rows=tuple(rows))


def _oracle_curve_fns(fclass, oracle, grid, consts, n, replicates, seed):
    """Oracle phi/d callables, exact at every radius the transforms query."""
    deltas = np.union1d(grid.points, consts.c_tilde * grid.points)
    means, _ = phi_n_table(fclass, oracle, deltas, n, replicates, seed)
    risks = np.asarray(oracle.risks, dtype=float)
    excess = risks - risks.min()
    metric2 = np.asarray(oracle.metric2, dtype=float)

    def phi_fn(dv):
        return float(np.interp(dv, deltas, means))

    def d_fn(dv):
        return diameter(metric2, np.flatnonzero(excess <= dv))

    return phi_fn, d_fn


def run_ordering_experiment(scenario: Scenario, n: int, t: float, trials: int,
                            seed=0, replicates: int = 300,
                            draws: int = 256) -> OrderingReport:
    """How often the empirical radius lands between the oracle radii.

    The oracle radii (plain and inflated) are computed once from
    Monte Carlo oracle curves; each trial recomputes the empirical
    radius from a fresh sample and checks the ordering
    delta_bar <= delta_hat <= delta_tilde.
    """
    scenario = scenario.at(n)
    consts = BoundConstants(t=t)
    grid = working_grid(n, consts)
    zero = lambda _: 0.0
    phi_fn, d_fn = _oracle_curve_fns(scenario.fclass, scenario.oracle, grid,
                                     consts, n, replicates, (seed, 0))
    oracle_radii = delta_family(grid, phi_fn, d_fn, zero, zero, consts, n)
    delta_hats, rows = [], []
    ordered = 0
    for trial in range(trials):
        sample = draw_sample(scenario.oracle, n, (seed, 1, trial))
        matrix = evaluate(scenario.fclass, sample)
        signs = rademacher_signs(n, seed=(seed, 2, trial), n_draws=draws)
        phi_hat_fn, d_hat_fn = empirical_curves(matrix, signs)
        dh = delta_family(grid, zero, zero, phi_hat_fn, d_hat_fn,
                          consts, n).delta_hat
        ok = (oracle_radii.delta_bar <= dh + 1e-12
              and dh <= oracle_radii.delta_tilde + 1e-12)
        ordered += ok
        delta_hats.append(dh)
        rows.append((scenario.name, n, trial, dh, int(ok)))
    return OrderingReport(scenario=scenario.name, n=n, t=t,
                          delta_bar=oracle_radii.delta_bar,
                          delta_tilde=oracle_radii.delta_tilde,
                          delta_hats=np.asarray(delta_hats),
                          freq_ordered=ordered / trials, rows=tuple(rows))


def run_coverage_experiment(scenario: Scenario, n: int, t: float, trials: int,
                            seed=0, replicates: int = 400) -> CoverageReport:
    """Frequency of the ERM's true excess exceeding delta_n(t).

    The radius comes from the oracle table pipeline once; the budget is
    the theoretical tail log_q(q n / t) e^{-t}.
    """
    scenario = scenario.at(n)
    consts = BoundConstants(t=t)
    grid = working_grid(n, consts)
    phi_tab, _, d_tab = oracle_tables(scenario.fclass, scenario.oracle, grid,
                                      n, replicates=replicates, seed=(seed, 0))
    report = bound_report(grid, phi_tab, d_tab, consts, n)
    risks = np.asarray(scenario.oracle.risks, dtype=float)
    hits, rows = 0, []
    for trial in range(trials):
        sample = draw_sample(scenario.oracle, n, (seed, 1, trial))
        idx, _ = erm(evaluate(scenario.fclass, sample))
        excess = float(risks[idx] - risks.min())
        hit = excess > report.delta_n
        hits += hit
        rows.append((scenario.name, n, trial, excess, report.delta_n))
    budget = (math.log(consts.q * n / t) / math.log(consts.q)
              * math.exp(-t))
    return CoverageReport(scenario=scenario.name, n=n, t=t,
                          delta_n=report.delta_n, frequency=hits / trials,
                          budget=budget, rows=tuple(rows))


def run_selection_experiment(scenario: Scenario, n: int, trials: int,
                             method: str = "penalized-v1", seed=0,
                             replicates: int = 200,
                             draws: int = 256) -> SelectionReport:
    """Selection outcomes on a family scenario against its oracle.

    Computes the oracle model index k* and reference penalties from the
    inflated oracle radii once, then runs seeded selection trials.
    Reports the frequency of k_hat <= k* and the 95th-percentile ratio
    of realized excess to the oracle target (best-model excess plus
    its reference penalty).
    """
    if scenario.family is None:
        raise ValueError("selection experiments need a family scenario")
    if method == "erm":
        raise ValueError("selection experiments need a selection method")
    consts = BoundConstants(t=min(scenario.family.t_schedule))
    grid = working_grid(n, consts)
    zero = lambda _: 0.0
    risks = np.asarray(scenario.oracle.risks, dtype=float)
    index_map = _model_index_map(scenario)
    true_mins = np.array([risks[list(idx)].min() for idx in index_map])
    k_star = int(np.flatnonzero(true_mins
                                <= true_mins.min() + 1e-12)[0]) + 1
    delta_tildes = []
    for cls, idx in zip(scenario.family.classes, index_map):
        sub_oracle = OracleDistribution(
            sampler=scenario.oracle.sampler,
            risks=risks[list(idx)],
            metric2=np.asarray(scenario.oracle.metric2)[np.ix_(list(idx),
                                                               list(idx))])
        phi_fn, d_fn = _oracle_curve_fns(cls, sub_oracle, grid, consts, n,
                                         replicates, (seed, 0, len(idx)))
        delta_tildes.append(delta_family(grid, phi_fn, d_fn, zero, zero,
                                         consts, n).delta_tilde)
    ts = np.asarray(scenario.family.t_schedule, dtype=float)
    pi_tilde = penalty_v1(delta_tildes, true_mins, ts, n)
    target = float(true_mins[k_star - 1] - risks.min()
                   + pi_tilde[k_star - 1])
    excesses, k_hats, rows = [], [], []
    for trial in range(trials):
        excess, k_hat, _ = run_trial(scenario, n, (seed, 1, trial), method,
                                     consts=consts, draws=draws)
        excesses.append(excess)
        k_hats.append(k_hat)
        rows.append((scenario.name, n, trial, excess, k_hat))
    excesses = np.asarray(excesses)
    k_hats = np.asarray(k_hats)
    return SelectionReport(scenario=scenario.name, method=method, n=n,
                           k_star=k_star, pi_tilde=pi_tilde,
                           excesses=excesses, k_hats=k_hats,
                           freq_k_within=float(np.mean(k_hats <= k_star)),
                           ratio_95=float(np.quantile(excesses, 0.95)
                                          / target),
                           rows=tuple(rows))
