"""Model selection over function-class families: penalties and comparison.

Two penalization routes (a direct one and one driven by a convex link
function), a threshold-comparison selector for nested families, and the
specialized penalties (shattering-based, diameter/theta-based, dimension,
kernel spectrum, localized Rademacher).  Also houses the loss-class
construction that composes a loss with a base class and transfers its
complexity curve.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .complexity import BadParams, shattering_number
from .function_class import FunctionClass, evaluate
from .transform import sharp

# lattice used by all link/loss audits and by the numeric conjugate
AUDIT_POINTS = np.linspace(0.0, 2.0, 41)
LEGENDRE_POINTS = 10_000
_TOL = 1e-12


class NotNested(ValueError):
    """Raised when an operation requires a nested family and gets none."""


class LinkDegenerate(ValueError):
    """Raised when the link value at the working epsilon reaches 1."""


class BadOrdering(ValueError):
    """Raised when a schedule that must be nondecreasing is not."""


class LipschitzViolated(ValueError):
    """Raised when a loss fails its Lipschitz audit."""


class ConvexityViolated(ValueError):
    """Raised when a loss fails its convexity-modulus audit."""


# --------------------------------------------------------------------------
# convex links
# --------------------------------------------------------------------------


def _numeric_conjugate(phi: Callable, vs: np.ndarray) -> np.ndarray:
    """Grid Legendre transform sup_u [u v - phi(u)] over u >= 0.

    The grid always contains the audit lattice, so Fenchel-Young holds
    exactly at those points; elsewhere the value is a lower bound on the
    true conjugate with an O(grid step squared) defect.
    """
    vs = np.asarray(vs, dtype=float)
    v_max = float(vs.max()) if vs.size else 0.0
    u_max = 1.0
    while u_max < 2.0 ** 30:
        step = u_max * 1e-6
        slope = (float(phi(u_max)) - float(phi(u_max - step))) / step
        if slope > v_max:
            break
        u_max *= 2.0
    grid = np.union1d(np.linspace(0.0, u_max, LEGENDRE_POINTS), AUDIT_POINTS)
    values = np.asarray([float(phi(u)) for u in grid])
    scores = np.multiply.outer(vs, grid) - values
    return scores.max(axis=-1)


@dataclass(frozen=True)
class ConvexLink:
    """A convex nondecreasing map phi with phi(0) = 0 and its conjugate.

    Parameters
    ----------
    phi : callable
        The link; must accept scalars and return scalars.
    conjugate_fn : callable, optional
        Analytic conjugate.  When omitted, a grid Legendre transform is
        used (a lower bound on the true conjugate; exact on the audit
        lattice by construction).

    Attributes
    ----------
    submultiplicative_flag : bool
        Whether phi(u v) <= phi(u) phi(v) held on the audit lattice.
    """

    phi: Callable
    conjugate_fn: Optional[Callable] = None
    submultiplicative_flag: bool = False

    def __post_init__(self):
        if abs(float(self.phi(0.0))) > _TOL:
            raise ValueError("link must vanish at zero")
        vals = np.asarray([float(self.phi(u)) for u in AUDIT_POINTS])
        if np.any(vals < -_TOL):
            raise ValueError("link must be nonnegative")
        if np.any(np.diff(vals) < -_TOL):
            raise ValueError("link must be nondecreasing")
        mids = np.asarray([float(self.phi(u))
                           for u in (AUDIT_POINTS[:-1] + AUDIT_POINTS[1:]) / 2])
        if np.any(mids > (vals[:-1] + vals[1:]) / 2 + 1e-9):
            raise ValueError("link must be convex")
        pos = AUDIT_POINTS[AUDIT_POINTS > 0]
        prods = np.asarray([[float(self.phi(u * v)) for v in pos] for u in pos])
        bound = np.multiply.outer(
            np.asarray([float(self.phi(u)) for u in pos]),
            np.asarray([float(self.phi(v)) for v in pos]))
        object.__setattr__(self, "submultiplicative_flag",
                           bool(np.all(prods <= bound + 1e-9)))

    def conjugate(self, v):
        """Evaluate the conjugate sup_u [u v - phi(u)] at v (>= 0)."""
        arr = np.asarray(v, dtype=float)
        if np.any(arr < 0):
            raise ValueError("conjugate is evaluated on v >= 0 only")
        if self.conjugate_fn is not None:
            out = np.asarray([float(self.conjugate_fn(x)) for x in arr.ravel()])
        else:
            out = _numeric_conjugate(self.phi, arr.ravel())
        out = out.reshape(arr.shape)
        return float(out) if out.ndim == 0 else out

    def at_epsilon(self, epsilon: float) -> float:
        """The link value phi(sqrt(epsilon)) that drives versions 2."""
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return float(self.phi(math.sqrt(epsilon)))

    def A(self, epsilon: float) -> float:
        """Penalty slope 5/2 - phi(sqrt(epsilon))."""
        value = self.at_epsilon(epsilon)
        if value >= 1.0:
            raise LinkDegenerate("link value at sqrt(epsilon) must be < 1")
        return 2.5 - value

    def C(self, epsilon: float) -> float:
        """Oracle-inequality inflation (1 + phi(sqrt(eps)))/(1 - phi(sqrt(eps)))."""
        value = self.at_epsilon(epsilon)
        if value >= 1.0:
            raise LinkDegenerate("link value at sqrt(epsilon) must be < 1")
        return (1.0 + value) / (1.0 - value)


def quadratic_link(scale: float = 2.0) -> ConvexLink:
    """The link phi(u) = u^2 / scale with analytic conjugate scale v^2 / 4."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return ConvexLink(phi=lambda u: u * u / scale,
                      conjugate_fn=lambda v: scale * v * v / 4.0)


# --------------------------------------------------------------------------
# model families and selection results
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelFamily:
    """An ordered finite family of function classes with confidence budgets.

    Parameters
    ----------
    classes : sequence of FunctionClass
    t_schedule : sequence of float
        Per-model confidence parameters, all positive.
    nested_flag : bool
        Declare the family nested; verified by member identity (each
        class must contain every member of its predecessor).
    p_schedule : sequence of float, optional
        Per-model failure budgets for the data-driven radius estimates
        (defaults to zeros).
    links : sequence of ConvexLink, optional
        Per-model links; must be pointwise nonincreasing along the
        family on the audit lattice.
    """

    classes: Tuple[FunctionClass, ...]
    t_schedule: Tuple[float, ...]
    nested_flag: bool = False
    p_schedule: Optional[Tuple[float, ...]] = None
    links: Optional[Tuple[ConvexLink, ...]] = None

    def __post_init__(self):
        classes = tuple(self.classes)
        ts = tuple(float(t) for t in self.t_schedule)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "t_schedule", ts)
        if len(classes) == 0:
            raise ValueError("family must contain at least one class")
        if len(ts) != len(classes):
            raise ValueError("t_schedule must align with classes")
        if any(t <= 0 for t in ts):
            raise ValueError("t_schedule entries must be positive")
        if self.p_schedule is None:
            object.__setattr__(self, "p_schedule", (0.0,) * len(classes))
        else:
            ps = tuple(float(p) for p in self.p_schedule)
            if len(ps) != len(classes) or any(p < 0 for p in ps):
                raise ValueError("p_schedule must align and be nonnegative")
            object.__setattr__(self, "p_schedule", ps)
        if self.nested_flag:
            for prev, nxt in zip(classes, classes[1:]):
                pool = list(nxt.members)
                if not all(any(m is other for other in pool)
                           for m in prev.members):
                    raise NotNested("declared nested family is not nested")
        if self.links is not None:
            links = tuple(self.links)
            if len(links) != len(classes):
                raise ValueError("links must align with classes")
            for a, b in zip(links, links[1:]):
                va = np.asarray([float(a.phi(u)) for u in AUDIT_POINTS])
                vb = np.asarray([float(b.phi(u)) for u in AUDIT_POINTS])
                if np.any(vb > va + 1e-9):
                    raise ValueError("link schedule must be nonincreasing")
            object.__setattr__(self, "links", links)

    def __len__(self):
        return len(self.classes)


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a model-selection run.

    Model indices are 1-based throughout (``k_hat = 1`` is the first
    class in the family).
    """

    method: str
    k_hat: int
    min_risks: np.ndarray
    penalties: np.ndarray
    delta_hats: Optional[np.ndarray] = None
    reference_penalties: Optional[np.ndarray] = None
    certificate: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        """Serialize with keys method, k_hat, per_model, certificate, diagnostics."""
        dh = self.delta_hats
        per_model = []
        for j in range(len(self.min_risks)):
            per_model.append([
                float(self.min_risks[j]),
                float(self.penalties[j]),
                None if dh is None else float(dh[j]),
            ])
        return {
            "method": self.method,
            "k_hat": int(self.k_hat),
            "per_model": per_model,
            "certificate": None if self.certificate is None
            else float(self.certificate),
            "diagnostics": dict(self.diagnostics),
        }


# --------------------------------------------------------------------------
# penalties
# --------------------------------------------------------------------------


def _as_vector(values, name, length=None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} must have length {length}")
    return arr


def penalty_v1(delta_hats, min_risks, t_schedule, n: int,
               constant: float = 5.0) -> np.ndarray:
    """Direct penalties K [delta_k + sqrt((t_k/n) min_k) + t_k/n].

    ``min_risks`` are the per-model minimal risks (empirical for the
    data-driven penalty, true for the reference penalty) and
    ``delta_hats`` the matching critical radii.
    """
    dh = _as_vector(delta_hats, "delta_hats")
    mins = _as_vector(min_risks, "min_risks", dh.size)
    ts = _as_vector(t_schedule, "t_schedule", dh.size)
    if n < 1:
        raise ValueError("n must be at least 1")
    if constant <= 0:
        raise ValueError("constant must be positive")
    if np.any(mins < 0) or np.any(dh < 0) or np.any(ts < 0):
        raise ValueError("inputs must be nonnegative")
    return constant * (dh + np.sqrt(ts / n * mins) + ts / n)


def penalty_v2(delta_hats, link: ConvexLink, epsilon: float, t_schedule,
               n: int, delta_tildes=None):
    """Link-driven penalties A(eps) delta_k + phi*(sqrt(2 t_k/(eps n))) + t_k/n.

    Returns ``(pi_hat, pi_tilde)``; the reference ``pi_tilde`` (computed
    from ``delta_tildes`` when given, else None) carries the
    1/(1 + phi(sqrt(eps))) weights on all three terms and a factor 2 on
    the conjugate and confidence terms.
    """
    dh = _as_vector(delta_hats, "delta_hats")
    ts = _as_vector(t_schedule, "t_schedule", dh.size)
    if n < 1:
        raise ValueError("n must be at least 1")
    if np.any(ts < 0):
        raise ValueError("t_schedule entries must be nonnegative")
    slope = link.A(epsilon)  # raises LinkDegenerate when phi(sqrt(eps)) >= 1
    conj = np.asarray(link.conjugate(np.sqrt(2.0 * ts / (epsilon * n))))
    pi_hat = slope * dh + conj + ts / n
    pi_tilde = None
    if delta_tildes is not None:
        dt = _as_vector(delta_tildes, "delta_tildes", dh.size)
        weight = 1.0 + link.at_epsilon(epsilon)
        pi_tilde = (slope * dt + 2.0 * conj + 2.0 * ts / n) / weight
    return pi_hat, pi_tilde


def shattering_penalty(family: ModelFamily, sample,
                       constant: float = 6.0):
    """Shattering-count penalties for binary families on one sample.

    For each class: K [sqrt(min_k (log D_k + t_k)/n) + (log D_k + t_k)/n]
    with D_k the number of distinct value vectors the class realizes on
    the sample.  Returns ``(penalties, min_risks, log_shatters)``.
    """
    if constant <= 0:
        raise ValueError("constant must be positive")
    penalties, mins, logs = [], [], []
    n = len(np.asarray(sample.points))
    for cls, t in zip(family.classes, family.t_schedule):
        matrix = evaluate(cls, sample)  # NotBinary propagates from here
        count = shattering_number(matrix)
        log_count = math.log(count)
        min_risk = float(matrix.empirical_risks.min())
        rate = (log_count + t) / n
        penalties.append(constant * (math.sqrt(min_risk * rate) + rate))
        mins.append(min_risk)
        logs.append(log_count)
    return np.asarray(penalties), np.asarray(mins), np.asarray(logs)


def massart_penalty(family: ModelFamily, D_schedule, theta_curves,
                    epsilon: float, n: int, K: float = 4.0,
                    K_hat: float = 4.0):
    """Variance-linked penalties 3 delta_k + K_hat D_k t_k / (eps n).

    ``delta_k = D_k^{-1} theta_k^sharp(eps/(K D_k))`` is computed from
    the per-model complexity curves.  Returns ``(penalties, deltas)``.
    """
    ds = _as_vector(D_schedule, "D_schedule", len(family))
    if len(theta_curves) != len(family):
        raise ValueError("theta_curves must align with the family")
    if epsilon <= 0:
        raise BadParams("epsilon must be positive")
    if K <= 0 or K_hat <= 0:
        raise BadParams("constants must be positive")
    if np.any(ds <= 0):
        raise BadParams("D_schedule entries must be positive")
    if np.any(np.diff(ds) < 0):
        raise BadOrdering("D_schedule must be nondecreasing")
    ts = np.asarray(family.t_schedule)
    deltas = np.asarray([
        sharp(theta, epsilon / (K * d)) / d
        for theta, d in zip(theta_curves, ds)
    ])
    penalties = 3.0 * deltas + K_hat * ds * ts / (epsilon * n)
    return penalties, deltas


def dimension_penalty(dims, t_schedule, n: int,
                      constant: float = 1.0) -> np.ndarray:
    """Linear-span penalties K (d_k + t_k + 1)/n."""
    dv = _as_vector(dims, "dims")
    ts = _as_vector(t_schedule, "t_schedule", dv.size)
    if constant <= 0 or n < 1:
        raise BadParams("constant and n must be positive")
    if np.any(dv < 0) or np.any(ts <= 0):
        raise BadParams("dims must be nonnegative and t positive")
    return constant * (dv + ts + 1.0) / n


def kernel_penalty(gamma_curves, t_schedule, n: int,
                   constant: float = 1.0) -> np.ndarray:
    """Spectrum penalties K (gamma_k^sharp(1) + (t_k + 1)/n)."""
    ts = _as_vector(t_schedule, "t_schedule", len(gamma_curves))
    if constant <= 0 or n < 1:
        raise BadParams("constant and n must be positive")
    if np.any(ts <= 0):
        raise BadParams("t_schedule entries must be positive")
    radii = np.asarray([sharp(curve, 1.0) for curve in gamma_curves])
    return constant * (radii + (ts + 1.0) / n)


def rademacher_penalty(omega_curves, t_schedule, n: int,
                       constant: float = 2.0) -> np.ndarray:
    """Localized-modulus penalties K (omega_k^sharp(1/K) + (t_k + 1)/n)."""
    ts = _as_vector(t_schedule, "t_schedule", len(omega_curves))
    if constant <= 0 or n < 1:
        raise BadParams("constant and n must be positive")
    if np.any(ts <= 0):
        raise BadParams("t_schedule entries must be positive")
    radii = np.asarray([sharp(curve, 1.0 / constant)
                        for curve in omega_curves])
    return constant * (radii + (ts + 1.0) / n)


# --------------------------------------------------------------------------
# selectors
# --------------------------------------------------------------------------


def select_penalized(min_risks, penalties, delta_hats=None,
                     reference_penalties=None,
                     method: str = "penalized") -> SelectionResult:
    """Pick the model minimizing empirical min risk plus penalty.

    Ties break to the lowest index.  The certificate is the attained
    minimum of the penalized objective, which upper-bounds the risk of
    the selected function on the method's favorable event.
    """
    mins = _as_vector(min_risks, "min_risks")
    pens = _as_vector(penalties, "penalties", mins.size)
    scores = mins + pens
    k_hat = int(np.argmin(scores)) + 1
    return SelectionResult(
        method=method,
        k_hat=k_hat,
        min_risks=mins,
        penalties=pens,
        delta_hats=None if delta_hats is None
        else _as_vector(delta_hats, "delta_hats", mins.size),
        reference_penalties=None if reference_penalties is None
        else _as_vector(reference_penalties, "reference_penalties", mins.size),
        certificate=float(scores.min()),
        diagnostics={},
    )


def _first_passing(mins: np.ndarray, thresholds: np.ndarray) -> int:
    """Smallest 1-based k with mins[k] - mins[l] <= thresholds[l] for all l > k."""
    size = mins.size
    for k in range(size):
        if all(mins[k] - mins[l] <= thresholds[l] for l in range(k + 1, size)):
            return k + 1
    return 1  # unreachable for finite families (last index passes vacuously)


def select_comparison(family: ModelFamily, min_risks, delta_hats,
                      c_hat: float = 4.0, oracle_mins=None,
                      delta_bars=None, delta_tildes=None,
                      c_bar: float = 1.0,
                      c_tilde: float = 10.0) -> SelectionResult:
    """Threshold-comparison selection for a nested family.

    ``k_hat`` is the smallest index whose empirical min risk is within
    ``c_hat`` times the running-max radius of every larger model.  With
    oracle inputs, the diagnostics report the population analogues
    ``k_star`` (true-risk stabilization index), ``k_bar`` and
    ``k_tilde`` (the same test run on true risks with the ``c_bar`` and
    ``c_tilde`` thresholds); the default constants satisfy
    ``c_bar <= c_hat/2 - 1`` and ``(c_tilde - 1)/2 > c_hat``, under which
    the ordering k_tilde <= k_hat <= k_bar <= k_star holds on the
    favorable event.
    """
    if not family.nested_flag:
        raise NotNested("comparison selection requires a nested family")
    mins = _as_vector(min_risks, "min_risks", len(family))
    dh = _as_vector(delta_hats, "delta_hats", len(family))
    if c_hat <= 0:
        raise ValueError("c_hat must be positive")
    running = np.maximum.accumulate(dh)
    k_hat = _first_passing(mins, c_hat * running)
    diagnostics = {"thresholds": (c_hat * running).tolist()}
    certificate = None
    if oracle_mins is not None:
        omins = _as_vector(oracle_mins, "oracle_mins", len(family))
        size = omins.size
        k_star = size
        for k in range(size):
            if all(abs(omins[k] - omins[l]) <= _TOL for l in range(k + 1, size)):
                k_star = k + 1
                break
        diagnostics["k_star"] = k_star
        if delta_bars is not None:
            db = np.maximum.accumulate(
                _as_vector(delta_bars, "delta_bars", size))
            diagnostics["k_bar"] = _first_passing(omins, c_bar * db)
        if delta_tildes is not None:
            dt = np.maximum.accumulate(
                _as_vector(delta_tildes, "delta_tildes", size))
            k_tilde = _first_passing(omins, c_tilde * dt)
            diagnostics["k_tilde"] = k_tilde
            start = diagnostics.get("k_bar", k_star)
            tail = range(start - 1, size)
            certificate = min(omins[k] - omins.min() + (c_tilde + 1.0) * dt[k]
                              for k in tail)
    return SelectionResult(
        method="comparison",
        k_hat=k_hat,
        min_risks=mins,
        penalties=c_hat * running,
        delta_hats=dh,
        certificate=certificate,
        diagnostics=diagnostics,
    )


# --------------------------------------------------------------------------
# loss classes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LossClassMeta:
    """A loss with audited regularity constants.

    Parameters
    ----------
    loss : callable
        Vectorized map ``loss(y, u)``.
    L : float
        Lipschitz constant in u, audited on a (y, u, v) lattice.
    Lam : float, optional
        Quadratic convexity modulus: midpoint gap >= Lam |u - v|^2.
    psi, r : callable and float, optional
        General modulus: midpoint gap >= psi(|u - v|^r), r in (0, 2].
        Exactly one of ``Lam`` and ``(psi, r)`` must be supplied.
    V : float, optional
        Base-class combinatorial exponent for the closed-form rate.
    value_range : (float, float)
        Common range of the y and u arguments; its width is the range
        bound M.
    """

    loss: Callable
    L: float
    Lam: Optional[float] = None
    psi: Optional[Callable] = None
    r: Optional[float] = None
    V: Optional[float] = None
    value_range: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if (self.Lam is None) == (self.psi is None):
            raise ValueError("supply exactly one of Lam or (psi, r)")
        if self.psi is not None:
            if self.r is None or not (0.0 < self.r <= 2.0):
                raise ValueError("r must lie in (0, 2] when psi is given")
        if self.Lam is not None and self.Lam <= 0:
            raise ValueError("Lam must be positive")
        if self.L <= 0:
            raise ValueError("L must be positive")
        lo, hi = self.value_range
        if not hi > lo:
            raise ValueError("value_range must be increasing")
        pts = np.linspace(lo, hi, 9)
        ys = pts[:, None, None]
        us = pts[None, :, None]
        vs = pts[None, None, :]
        lu = np.asarray(self.loss(ys, us), dtype=float)
        lv = np.asarray(self.loss(ys, vs), dtype=float)
        lu, lv = np.broadcast_arrays(lu, lv)
        gap_uv = np.broadcast_to(np.abs(us - vs), lu.shape)
        if np.any(np.abs(lu - lv) > self.L * gap_uv + _TOL):
            raise LipschitzViolated("loss exceeds the declared Lipschitz bound")
        lm = np.asarray(self.loss(ys, (us + vs) / 2.0), dtype=float)
        midgap = (lu + lv) / 2.0 - np.broadcast_to(lm, lu.shape)
        if self.Lam is not None:
            required = self.Lam * gap_uv ** 2
        else:
            required = np.asarray(self.psi(gap_uv ** self.r), dtype=float)
        if np.any(midgap < required - _TOL):
            raise ConvexityViolated("loss convexity gap below the declared modulus")

    @property
    def M(self) -> float:
        """Width of the common value range."""
        lo, hi = self.value_range
        return hi - lo

    def modulus_inverse(self, x: float) -> float:
        """Invert the convexity modulus at x >= 0."""
        if x < 0:
            raise ValueError("modulus inverse needs a nonnegative argument")
        if self.Lam is not None:
            return x / self.Lam
        if x == 0:
            return 0.0
        hi = 1.0
        while float(self.psi(hi)) < x:
            hi *= 2.0
            if hi > 2.0 ** 40:
                raise ValueError("modulus never reaches the requested level")
        lo = 0.0
        for _ in range(200):
            mid = (lo + hi) / 2.0
            if float(self.psi(mid)) < x:
                lo = mid
            else:
                hi = mid
        return hi

    @property
    def exponent(self) -> float:
        """The modulus exponent r (2 for the quadratic case)."""
        return 2.0 if self.Lam is not None else float(self.r)


def pi_n(M: float, L: float, Lam: float, V: float, t: float, n: int,
         constant: float = 1.0) -> float:
    """Closed-form critical radius for convex-hull loss classes.

    constant * [Lam M^{V/(V+1)} (L/Lam v 1)^{(V+2)/(V+1)}
    n^{-(V+2)/(2(V+1))} + L^2 t / (Lam n)].  The confidence part scales
    linearly in t, so the value at t = 0 is the pure rate term.
    """
    if min(M, L, Lam, V, constant) <= 0 or n < 1 or t < 0:
        raise ValueError("parameters must be positive (t nonnegative)")
    rate = (Lam * M ** (V / (V + 1.0))
            * max(L / Lam, 1.0) ** ((V + 2.0) / (V + 1.0))
            * n ** (-(V + 2.0) / (2.0 * (V + 1.0))))
    return constant * (rate + L * L * t / (Lam * n))


def loss_class(meta: LossClassMeta, base: FunctionClass, theta=None,
               n: Optional[int] = None, t: Optional[float] = None,
               constant: float = 1.0):
    """Compose a loss with a base class of predictors.

    Members of the returned class act on two-column point arrays
    ``[x, y]`` and return ``loss(y, g(x)) / scale`` where ``scale``
    normalizes loss values into [0, 1] (the audited lattice maximum,
    never below 1).  When a complexity curve ``theta`` for the base
    class and ``(n, t)`` are supplied, also returns the transferred
    deviation curve

        W(delta) = C [L theta(M^{2-r} m^{-1}(delta/2))
                      + L sqrt(M^{2-r} m^{-1}(delta/2) (t+1)/n) + t/n]

    with m the convexity modulus, and the closed-form radius when the
    meta carries the exponent V.  Returns ``(fclass, W or None,
    radius or None)``.
    """
    lo, hi = meta.value_range
    pts = np.linspace(lo, hi, 9)
    lattice_max = float(np.max(np.asarray(
        meta.loss(pts[:, None], pts[None, :]), dtype=float)))
    scale = max(1.0, lattice_max)

    def make(g):
        def member(points):
            arr = np.asarray(points, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError("loss-class members act on [x, y] pairs")
            return np.asarray(meta.loss(arr[:, 1], g(arr[:, 0])),
                              dtype=float) / scale
        return member

    composed = FunctionClass.from_members(
        [make(g) for g in base.members], labels=base.labels)

    wbar = None
    if theta is not None and n is not None and t is not None:
        r = meta.exponent
        M = meta.M

        def wbar(delta):
            inv = M ** (2.0 - r) * meta.modulus_inverse(delta / 2.0)
            return constant * (meta.L * float(theta(inv))
                               + meta.L * math.sqrt(inv * (t + 1.0) / n)
                               + t / n)

    radius = None
    if meta.V is not None and n is not None and t is not None:
        lam = meta.Lam if meta.Lam is not None else None
        if lam is not None:
            radius = pi_n(meta.M, meta.L, lam, meta.V, t, n, constant)
    return composed, wbar, radius
