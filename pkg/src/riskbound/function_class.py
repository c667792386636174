"""Finite function classes: evaluation, ERM, localized sets, and moduli.

Everything downstream (bounds, model selection) works with a finite,
ordered class of functions taking values in [0, 1].  This module houses
the class/sample/oracle containers, empirical risk minimization, the
delta-minimal (localized) sets and their diameters, and the Monte Carlo
estimates of the oscillation moduli that drive the localized bounds.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np


class RangeViolation(ValueError):
    """A member evaluation left the declared range."""


class OracleUnavailable(RuntimeError):
    """A distribution-dependent quantity was requested without true risks."""


class EmptyMinimalSet(ValueError):
    """A localized index set came out empty."""


@dataclass(frozen=True)
class FunctionClass:
    """An ordered finite class of functions with values in [0, 1].

    Parameters
    ----------
    members : tuple of callables
        Each maps an array of scenario points to an equal-length float
        array of values in [0, 1].  Order is significant: all index
        reporting and tie-breaking follows it.
    labels : tuple of str
        One identifier per member.
    binary : bool
        Declare that every member takes values in {0, 1} only; audited
        at evaluation time.
    """

    members: Tuple[Callable, ...]
    labels: Tuple[str, ...]
    binary: bool = False

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("a function class needs at least one member")
        if len(self.labels) != len(self.members):
            raise ValueError("labels and members must align")

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def from_members(cls, members: Sequence[Callable], labels=None,
                     binary: bool = False) -> "FunctionClass":
        members = tuple(members)
        if labels is None:
            labels = tuple(f"f{j}" for j in range(len(members)))
        return cls(members, tuple(labels), binary)


@dataclass(frozen=True)
class Sample:
    """An ordered sample of scenario points and its RNG lineage."""

    points: np.ndarray
    seed_lineage: str = ""

    def __post_init__(self):
        if len(self.points) < 1:
            raise ValueError("a sample needs at least one point")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class EvaluationMatrix:
    """Member evaluations on a sample: entry (i, j) = f_j(X_i)."""

    values: np.ndarray
    fclass: FunctionClass
    sample: Sample

    @property
    def empirical_risks(self) -> np.ndarray:
        return self.values.mean(axis=0)


@dataclass(frozen=True)
class OracleDistribution:
    """Ground-truth access to the sampling distribution.

    Parameters
    ----------
    sampler : callable
        ``sampler(n, rng)`` draws n i.i.d. scenario points.
    risks : ndarray or None
        True risk per class member, each in [0, 1]; None when the
        distribution quantities are not computable.
    metric2 : ndarray or None
        Squared pseudometric matrix, default convention P(f-g)^2.
    epsilon_oracle : float
        Declared accuracy of ``risks``/``metric2`` (0 for exact).
    n_oracle : int or None
        Monte Carlo draws behind an approximate oracle.
    """

    sampler: Callable
    risks: Optional[np.ndarray] = None
    metric2: Optional[np.ndarray] = None
    epsilon_oracle: float = 0.0
    n_oracle: Optional[int] = None

    def __post_init__(self):
        if self.risks is not None:
            r = np.asarray(self.risks, dtype=float)
            if r.min() < -1e-9 or r.max() > 1 + 1e-9:
                raise ValueError("true risks must lie in [0, 1]")
        if self.metric2 is not None:
            m2 = np.asarray(self.metric2, dtype=float)
            if m2.ndim != 2 or m2.shape[0] != m2.shape[1]:
                raise ValueError("metric2 must be a square matrix")
            if not np.allclose(m2, m2.T, atol=1e-9):
                raise ValueError("metric2 must be symmetric")
            if m2.min() < -1e-9:
                raise ValueError("metric2 must be nonnegative")
            if np.abs(np.diag(m2)).max() > 1e-9:
                raise ValueError("metric2 must vanish on the diagonal")
            if self.risks is not None and m2.shape[0] != len(np.asarray(self.risks)):
                raise ValueError("metric2 and risks disagree on the class size")


@dataclass(frozen=True)
class RiskReport:
    """Per-member risks and excesses, true and empirical."""

    empirical_risks: np.ndarray
    erm_index: int
    empirical_excess: np.ndarray
    true_risks: Optional[np.ndarray] = None
    excess: Optional[np.ndarray] = None


def _values_of(matrix) -> np.ndarray:
    vals = getattr(matrix, "values", matrix)
    return np.asarray(vals, dtype=float)


def evaluate(fclass: FunctionClass, sample: Sample) -> EvaluationMatrix:
    """Evaluate every member on every sample point.

    Raises
    ------
    RangeViolation
        If any value leaves [0, 1], or leaves {0, 1} for a class
        declared binary.
    """
    pts = np.asarray(sample.points)
    n = len(pts)
    cols = []
    for label, f in zip(fclass.labels, fclass.members):
        v = np.asarray(f(pts), dtype=float).reshape(-1)
        if v.shape != (n,):
            raise ValueError(f"member {label} returned {v.shape}, expected ({n},)")
        cols.append(v)
    vals = np.column_stack(cols)
    if vals.min() < 0.0 or vals.max() > 1.0:
        raise RangeViolation("member evaluations must lie in [0, 1]")
    if fclass.binary and not np.all((vals == 0.0) | (vals == 1.0)):
        raise RangeViolation("class is declared binary but takes values outside {0, 1}")
    return EvaluationMatrix(vals, fclass, sample)


def draw_sample(oracle: OracleDistribution, n: int, seed) -> Sample:
    """Draw an i.i.d. sample of size n from the oracle's sampler."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    return Sample(np.asarray(oracle.sampler(n, rng)), seed_lineage=str(seed))


def erm(matrix) -> Tuple[int, RiskReport]:
    """Empirical risk minimization: lowest index attaining the minimum.

    Accepts an :class:`EvaluationMatrix` or a bare (n, m) value array
    and returns ``(index, report)`` where the report carries empirical
    risks and min-shifted empirical excesses (true fields unset).
    """
    vals = _values_of(matrix)
    if vals.size == 0:
        raise ValueError("cannot run ERM on an empty matrix")
    emp = vals.mean(axis=0)
    idx = int(np.argmin(emp))
    return idx, RiskReport(emp, idx, emp - emp[idx])


def risk_report(matrix, oracle: OracleDistribution) -> RiskReport:
    """Full risk report: empirical and true risks with their excesses."""
    if oracle.risks is None:
        raise OracleUnavailable("oracle has no true risks")
    idx, rep = erm(matrix)
    risks = np.asarray(oracle.risks, dtype=float)
    if risks.shape != rep.empirical_risks.shape:
        raise ValueError("oracle risks do not match the class size")
    return dataclasses.replace(rep, true_risks=risks, excess=risks - risks.min())


def delta_minimal(report: RiskReport, delta: float, which: str = "true") -> np.ndarray:
    """Indices whose (true or empirical) excess is at most delta."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if which == "true":
        exc = report.excess
        if exc is None:
            raise OracleUnavailable("report carries no true excesses")
    elif which == "empirical":
        exc = report.empirical_excess
    else:
        raise ValueError("which must be 'true' or 'empirical'")
    return np.flatnonzero(exc <= delta)


def empirical_metric2(matrix) -> np.ndarray:
    """Pairwise empirical squared distances P_n (f - g)^2."""
    vals = _values_of(matrix)
    n = vals.shape[0]
    gram = vals.T @ vals / n
    d = np.diag(gram)
    return np.clip(d[:, None] + d[None, :] - 2.0 * gram, 0.0, None)


def diameter(metric2: np.ndarray, indices) -> float:
    """Pseudometric diameter of an index set: sqrt of the max squared distance."""
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        raise EmptyMinimalSet("diameter of an empty index set")
    sub = np.asarray(metric2, dtype=float)[np.ix_(idx, idx)]
    return float(math.sqrt(max(float(sub.max()), 0.0)))


def phi_hat(matrix, signs: np.ndarray, delta: float) -> float:
    """Data-driven oscillation modulus over the empirical delta-minimal set.

    For each supplied sign vector, the sup over member pairs (f, g) in
    the empirical delta-minimal set of |n^{-1} sum_i eps_i (f - g)(X_i)|
    is the range of the per-member symmetrized means; the estimate is
    the average of that range over the sign vectors.
    """
    signs = np.atleast_2d(np.asarray(signs, dtype=float))
    if not np.all(np.abs(signs) == 1.0):
        raise ValueError("sign vectors must have entries +-1")
    vals = _values_of(matrix)
    n = vals.shape[0]
    if signs.shape[1] != n:
        raise ValueError("sign vectors must match the sample size")
    _, rep = erm(vals)
    keep = delta_minimal(rep, delta, which="empirical")
    sym = signs @ vals[:, keep] / n
    return float(np.mean(sym.max(axis=1) - sym.min(axis=1)))


def phi_n_table(fclass: FunctionClass, oracle: OracleDistribution, deltas,
                n: int, replicates: int, seed=0) -> Tuple[np.ndarray, np.ndarray]:
    """Monte Carlo table of the modulus phi_n(delta) on shared samples.

    Each replicate draws one fresh sample and evaluates
    ``sup over pairs in the true delta-minimal set of |(P_n - P)(f - g)|``
    for every requested delta at once.  Returns (means, stderrs) in the
    order of ``deltas``.  Deterministic given the master seed; replicate
    streams are split from it and reduced in replicate order.
    """
    if oracle.risks is None:
        raise OracleUnavailable("phi_n needs true risks")
    if replicates < 2:
        raise ValueError("need at least 2 replicates for a standard error")
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    risks = np.asarray(oracle.risks, dtype=float)
    exc = risks - risks.min()
    keeps = [np.flatnonzero(exc <= d) for d in deltas]
    if any(k.size == 0 for k in keeps):
        raise EmptyMinimalSet("a delta-minimal set came out empty")
    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sups = np.empty((replicates, deltas.size))
    for r, stream in enumerate(master.spawn(replicates)):
        rng = np.random.default_rng(stream)
        pts = np.asarray(oracle.sampler(n, rng))
        mat = evaluate(fclass, Sample(pts, seed_lineage=f"phi_n[{r}]"))
        centered = mat.empirical_risks - risks
        for c, keep in enumerate(keeps):
            block = centered[keep]
            sups[r, c] = block.max() - block.min()
    means = sups.mean(axis=0)
    stderrs = sups.std(axis=0, ddof=1) / math.sqrt(replicates)
    return means, stderrs


def phi_n(fclass: FunctionClass, oracle: OracleDistribution, delta: float,
          n: int, replicates: int, seed=0) -> Tuple[float, float]:
    """Monte Carlo estimate (mean, stderr) of the modulus at one delta."""
    means, stderrs = phi_n_table(fclass, oracle, [delta], n, replicates, seed)
    return float(means[0]), float(stderrs[0])


def r_check(oracle: OracleDistribution, sigma: float, delta: float) -> float:
    """Approximation radius of the sigma-minimal set within the delta-minimal set.

    ``sup over f in F(delta) of min over g in F(sigma) of rho_P(f, g)``;
    zero when sigma equals delta, and never larger than the diameter of
    F(delta).
    """
    if not 0.0 <= sigma <= delta:
        raise ValueError("need 0 <= sigma <= delta")
    if oracle.risks is None or oracle.metric2 is None:
        raise OracleUnavailable("r_check needs true risks and the true metric")
    risks = np.asarray(oracle.risks, dtype=float)
    exc = risks - risks.min()
    outer = np.flatnonzero(exc <= delta)
    inner = np.flatnonzero(exc <= sigma + oracle.epsilon_oracle)
    if inner.size == 0 or outer.size == 0:
        raise EmptyMinimalSet("localized set is empty at oracle accuracy")
    sub = np.asarray(oracle.metric2, dtype=float)[np.ix_(outer, inner)]
    return float(np.sqrt(np.clip(sub, 0.0, None)).min(axis=1).max())


def monte_carlo_oracle(fclass: FunctionClass, sampler: Callable, n_draws: int,
                       seed=0, metric: str = "second_moment",
                       chunk: int = 20_000) -> OracleDistribution:
    """Approximate oracle from Monte Carlo draws.

    Estimates true risks and the squared pseudometric from ``n_draws``
    i.i.d. points (accumulated in fixed-size chunks), declaring accuracy
    ``epsilon_oracle = 2 / sqrt(n_draws)``.  ``metric`` selects the
    default second-moment convention P(f-g)^2 or the experimental
    variance version P(f-g)^2 - (P(f-g))^2.
    """
    if metric not in ("second_moment", "variance"):
        raise ValueError("metric must be 'second_moment' or 'variance'")
    if n_draws < 2:
        raise ValueError("need at least 2 oracle draws")
    rng = np.random.default_rng(seed)
    m = len(fclass)
    total = np.zeros(m)
    gram = np.zeros((m, m))
    done = 0
    while done < n_draws:
        step = min(chunk, n_draws - done)
        pts = np.asarray(sampler(step, rng))
        vals = evaluate(fclass, Sample(pts, seed_lineage=f"oracle[{done}]")).values
        total += vals.sum(axis=0)
        gram += vals.T @ vals
        done += step
    risks = total / n_draws
    gram /= n_draws
    d = np.diag(gram)
    m2 = np.clip(d[:, None] + d[None, :] - 2.0 * gram, 0.0, None)
    if metric == "variance":
        mean_diff = risks[:, None] - risks[None, :]
        m2 = np.clip(m2 - mean_diff ** 2, 0.0, None)
    np.fill_diagonal(m2, 0.0)
    m2 = (m2 + m2.T) / 2.0
    return OracleDistribution(sampler, risks=risks, metric2=m2,
                              epsilon_oracle=2.0 / math.sqrt(n_draws),
                              n_oracle=n_draws)
