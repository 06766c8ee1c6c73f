"""Converse bounds and their constants.

Covers the change-of-measure lower bound on the error probability of a
constant-composition code over a singular channel, the closed-form bounds on
tilted sums, the third-order constant for symmetric singular channels, the
normal-approximation series, and the constant-composition converse for
asymmetric singular channels (region split, ``gamma(delta)``, ``beta_1``,
``beta_2`` and the assembled constant).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import exactdist
from ._simplex import MAX_DIM, ball_net, pattern_ascent, simplex_grid
from .channel import Channel, as_input_dist, classify, uniform
from .errors import (DimensionTooLarge, HypothesisFailure, NetTooCoarse, NotApplicable,
                     NotSingular, NotSymmetric)
from .gaussian import norm_cdf, norm_pdf, norm_ppf
from .measures import (capacity, dispersion, dispersion_batch, kappa, m3_batch,
                       mutual_info, mutual_info_batch, third_moments, unique_caid)

ZERO_DISPERSION = 1e-12
DELTA_START = 0.25
DELTA_SHRINK = 0.5
DELTA_STEPS = 20


# -- change of measure ---------------------------------------------------------

@dataclass(frozen=True)
class Lemma2Terms:
    """``W(S_R(Q)|z^n)``, the tilted sum under ``q_Q``, and their difference."""
    w_sr: float
    tilted: float
    bound: float
    n: int
    rate: float
    enumeration_size: int


def _composition_counts(composition, n: int, size: int) -> np.ndarray:
    counts = np.asarray(composition)
    if counts.dtype.kind == "f":
        if not math.isclose(float(counts.sum()), 1.0, abs_tol=1e-9):
            counts_f = counts
        else:
            counts_f = counts * n
        counts = np.rint(counts_f).astype(np.int64)
        if np.max(np.abs(counts - counts_f)) > 1e-9:
            raise HypothesisFailure("composition is not a type of length n")
    counts = counts.astype(np.int64)
    if counts.shape != (size,) or np.any(counts < 0) or counts.sum() != n:
        raise HypothesisFailure(f"composition {counts.tolist()} is not a type of length {n}")
    return counts


def lemma2_lower_bound(ch: Channel, q_in, composition, n: int, rate: float,
                       budget: int = exactdist.DEFAULT_ENUM_BUDGET) -> Lemma2Terms:
    """Lower bound on the average error of any constant-composition code.

    ``composition`` is the common type of the codewords, given as counts summing
    to ``n`` (or as frequencies).  The first term is the exact probability under
    ``W(.|z^n)`` that ``sum_i -ln alpha_{Y_i}(Q) <= nR``; the second is the exact
    tilted sum under ``q_Q``.
    """
    q_in = as_input_dist(q_in, ch.input_size)
    counts = _composition_counts(composition, n, ch.input_size)
    word_law = []
    for x in np.flatnonzero(counts):
        word_law.extend([exactdist.decompose(ch, q_in, int(x))] * int(counts[x]))
    threshold = n * rate
    first = exactdist.tail(word_law, n, threshold, budget)
    second = exactdist.tail(exactdist.decompose(ch, q_in, "q"), n, threshold, budget)
    return Lemma2Terms(w_sr=first.cdf_at_threshold, tilted=second.tilted_sum,
                       bound=first.cdf_at_threshold - second.tilted_sum, n=n, rate=rate,
                       enumeration_size=first.enumeration_size + second.enumeration_size)


def lemma3_bound(m2: float, m3: float, n: int, iid: bool = True) -> float:
    """Closed-form bound on ``E[1{S_n <= r} e^{-(r - S_n)}]``.

    ``m2`` and ``m3`` are per-letter variance and centred third absolute moment.
    """
    if m2 <= 0:
        raise ValueError("m2 must be positive")
    m2n, m3n = n * m2, n * m3
    c = 1.0 if iid else 2.0
    return 1.0 / math.sqrt(2 * math.pi * m2n) + c * m3n / m2n**1.5


def berry_esseen(m1: float, m2: float, m3: float, n: int, threshold: float,
                 iid: bool = True) -> tuple[float, float]:
    """Bracket on ``P(S_n <= threshold)`` with Berry-Esseen constant 1/2 (i.i.d.) or 1."""
    if m2 <= 0:
        raise ValueError("m2 must be positive")
    z = (threshold - n * m1) / math.sqrt(n * m2)
    c = 0.5 if iid else 1.0
    w = c * m3 / (math.sqrt(n) * m2**1.5)
    centre = norm_cdf(z)
    return centre - w, centre + w


# -- reports -------------------------------------------------------------------------

@dataclass
class ConverseReport:
    n: int
    eps: float
    bound_nats: float
    regime: str
    valid_from: int
    constants: dict
    trivial: bool = False
    terms: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def trivial_bound(ch: Channel, n: int) -> float:
    return n * math.log(min(ch.input_size, ch.output_size))


# -- symmetric singular channels -----------------------------------------------------

@dataclass(frozen=True)
class Prop1Constants:
    eps: float
    k_ratio: float
    K: float
    n_o: int
    capacity: float
    v: float
    m3: float
    phi: float
    quantile: float

    def to_json(self) -> dict:
        return asdict(self)


def _least_n(pred, guess: int) -> int:
    """Least ``n >= 1`` with ``pred(n)`` for a predicate monotone in ``n``, starting near ``guess``."""
    n = max(1, guess)
    while n > 1 and pred(n - 1):
        n -= 1
    while not pred(n):
        n += 1
    return n


def _require_symmetric_singular(ch: Channel):
    cls = classify(ch)
    if not cls.singular:
        raise NotSingular("channel is not singular")
    if not cls.symmetric:
        raise NotSymmetric("channel is not symmetric")
    return cls


def prop1_constants(ch: Channel, eps: float) -> Prop1Constants:
    """Third-order constant ``K(eps, W)`` and its validity threshold for symmetric singular W.

    The reference input is letter 0; for symmetric singular channels every
    input gives the same moments.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    _require_symmetric_singular(ch)
    u = uniform(ch.input_size)
    v = dispersion(ch, u)
    if v <= ZERO_DISPERSION:
        raise NotApplicable("zero dispersion: the constant is undefined")
    m3 = float(third_moments(ch, u)[0][0])
    q = norm_ppf(eps)
    phi = norm_pdf(q)
    k = m3 / v**1.5
    big_k = k * math.sqrt(v) / phi + (2.0 / phi) * (1.0 / math.sqrt(2 * math.pi) + m3 / v)

    def holds(n: int) -> bool:
        return 1.0 - big_k / (2.0 * phi * math.sqrt(n * v)) > 0.5

    n_o = _least_n(holds, int(math.floor((big_k / phi) ** 2 / v)) + 1)
    return Prop1Constants(eps=eps, k_ratio=k, K=big_k, n_o=n_o, capacity=mutual_info(ch, u),
                          v=v, m3=m3, phi=phi, quantile=q)


def prop1_rate(consts: Prop1Constants, n: int) -> float:
    """Per-letter rate ``C + sqrt(V/n) Phi^{-1}(eps) + K/n`` used by the symmetric converse."""
    return consts.capacity + math.sqrt(consts.v / n) * consts.quantile + consts.K / n


def prop1_converse(ch: Channel, eps: float, n: int) -> ConverseReport:
    if n < 1:
        raise ValueError("blocklength must be positive")
    c = prop1_constants(ch, eps)
    first = n * c.capacity
    second = math.sqrt(n * c.v) * c.quantile
    report = ConverseReport(n=n, eps=eps, bound_nats=first + second + c.K,
                            regime="symmetric-singular", valid_from=c.n_o,
                            constants=c.to_json(),
                            terms={"first_order": first, "second_order": second,
                                   "third_order": c.K})
    if n < c.n_o:
        report.bound_nats = trivial_bound(ch, n)
        report.trivial = True
        report.notes.append("n below validity threshold; trivial bound n ln min(|X|,|Y|)")
    return report


def theorem1_series(ch: Channel, eps: float, n: int) -> ConverseReport:
    """Normal approximation with the regime-correct third-order term (symmetric channels).

    Regimes: ``nonsingular`` adds ``ln sqrt(n)`` with an order-only constant;
    ``singular`` adds the computed constant ``K(eps, W)``; ``zero-dispersion``
    keeps ``nC`` with an order-only constant.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    cls = classify(ch)
    if not cls.symmetric:
        raise NotSymmetric("the series is stated for symmetric channels")
    u = uniform(ch.input_size)
    c = mutual_info(ch, u)
    v = dispersion(ch, u)
    q = norm_ppf(eps)
    terms = {"first_order": n * c, "second_order": math.sqrt(n * v) * q,
             "log_term": 0.0, "constant": None}
    computed = ["first_order", "second_order"]
    order_only: list[str] = []
    constants: dict = {"capacity": c, "v_eps": v, "quantile": q}
    valid_from = 1
    if v <= ZERO_DISPERSION:
        regime = "zero-dispersion"
        terms["second_order"] = 0.0
        order_only.append("constant")
    elif cls.singular:
        regime = "singular"
        p1 = prop1_constants(ch, eps)
        terms["constant"] = p1.K
        computed.append("constant")
        constants.update(K=p1.K, n_o=p1.n_o)
        valid_from = p1.n_o
    else:
        regime = "nonsingular"
        terms["log_term"] = 0.5 * math.log(n)
        computed.append("log_term")
        order_only.append("constant")
    value = sum(t for t in terms.values() if t is not None)
    constants.update(computed=computed, order_only=order_only)
    return ConverseReport(n=n, eps=eps, bound_nats=value, regime=regime,
                          valid_from=valid_from, constants=constants, terms=terms)


# -- asymmetric singular channels ----------------------------------------------------

def region_classify(ch: Channel, q_in, delta: float, nu: float) -> str:
    """``"S1"``, ``"S2"`` or ``"S3"`` by distance to the CAID and the dispersion floor."""
    _, caid = unique_caid(ch)
    q_in = as_input_dist(q_in, ch.input_size)
    if np.linalg.norm(q_in - caid) > delta:
        return "S3"
    return "S1" if dispersion(ch, q_in) >= nu else "S2"


def default_grid(dim: int) -> int:
    if dim > MAX_DIM:
        raise DimensionTooLarge(f"simplex search supports |X| <= {MAX_DIM}, got {dim}")
    return 200 if dim <= 4 else (40 if dim == 5 else 20)


def default_net(dim: int) -> int:
    """Ticks per tangent axis for the ball net around the CAID."""
    return {1: 41, 2: 41, 3: 41, 4: 21, 5: 11, 6: 7}[dim]


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    argmax: np.ndarray | None
    grid: int
    refined: bool


def gamma_delta(ch: Channel, delta: float, grid: int | None = None) -> GammaResult:
    """``C - max I(Q;W)`` over ``{Q : ||Q - P*|| >= delta}``.

    Grid search followed by SLSQP restricted to the region.  Returns
    ``gamma = inf`` when the region is empty.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    c, caid = unique_caid(ch)
    grid = default_grid(ch.input_size) if grid is None else grid
    pts = simplex_grid(ch.input_size, grid)
    far = np.linalg.norm(pts - caid, axis=1) >= delta
    corners = np.eye(ch.input_size)
    if not np.any(np.linalg.norm(corners - caid, axis=1) >= delta):
        return GammaResult(gamma=math.inf, argmax=None, grid=grid, refined=False)
    if np.any(far):
        vals = mutual_info_batch(ch, pts[far])
        best_i = int(np.argmax(vals))
        best, best_p = float(vals[best_i]), pts[far][best_i]
    else:
        best, best_p = -math.inf, None
        for p in corners:
            if np.linalg.norm(p - caid) >= delta and mutual_info(ch, p) > best:
                best, best_p = mutual_info(ch, p), p
    refined = False
    res = minimize(
        lambda p: -mutual_info(ch, np.clip(p, 0, None) / np.clip(p, 0, None).sum()),
        best_p, method="SLSQP", bounds=[(0.0, 1.0)] * ch.input_size,
        constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1.0},
                     {"type": "ineq", "fun": lambda p: np.sum((p - caid) ** 2) - delta**2}],
        options={"ftol": 1e-14, "maxiter": 500})
    p = np.clip(res.x, 0.0, None)
    p = p / p.sum()
    if np.linalg.norm(p - caid) >= delta * (1 - 1e-12):
        val = mutual_info(ch, p)
        if val > best:
            best, best_p, refined = val, p, True
    return GammaResult(gamma=c - best, argmax=np.asarray(best_p), grid=grid, refined=refined)


def v_max(ch: Channel, grid: int | None = None) -> float:
    """``max_P V(P,W)``: grid search then pairwise-transfer ascent."""
    grid = default_grid(ch.input_size) if grid is None else grid
    pts = simplex_grid(ch.input_size, grid)
    vals = dispersion_batch(ch, pts)
    start = pts[int(np.argmax(vals))]
    _, best = pattern_ascent(lambda p: dispersion(ch, p), start, step=0.5 / grid,
                             min_step=1e-12)
    return max(float(best), float(vals.max()))


def large_distance_margin(n: int, gamma: float, v_eps: float, quantile: float, vmax: float,
                  eps: float) -> float:
    """Left side minus right side of the large-distance threshold condition."""
    if math.isinf(gamma):
        return 1.0 - eps
    expo = -(n * gamma / 2.0 + math.sqrt(n * v_eps) * quantile)
    head = -math.inf if expo > 700 else 1.0 - math.exp(expo)
    return head - 4.0 * vmax / (n * gamma**2) - eps


def _large_distance_threshold(gamma: float, v_eps: float, quantile: float, vmax: float,
                      eps: float) -> int:
    """Least ``n_o`` such that the condition holds for every ``n >= n_o``."""
    if math.isinf(gamma):
        return 1

    def ok(n: int) -> bool:
        return large_distance_margin(n, gamma, v_eps, quantile, vmax, eps) > 0

    # below n_a the Chebyshev term alone is too large
    n_a = int(math.floor(4.0 * vmax / (gamma**2 * (1.0 - eps)))) + 1
    c = math.sqrt(v_eps) * quantile
    # past n_m the margin is increasing in n
    n_m = max(n_a, int(math.ceil((c / gamma) ** 2)) if c < 0 else n_a)
    if not ok(n_m):
        lo, hi = n_m, 2 * n_m
        while not ok(hi):
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        return hi
    n = n_m - 1
    while n >= n_a:
        if not ok(n):
            return n + 1
        n -= 1
    return max(n_a, 1)


@dataclass(frozen=True)
class Prop2Constants:
    eps: float
    capacity: float
    caid: np.ndarray
    v_eps: float
    quantile: float
    phi: float
    delta: float
    nu: float
    a: float | None
    gamma: float
    v_max: float
    kappa: float
    m3_ratio_max: float
    K_s1: float
    beta1: float
    beta2: float
    n_o: int
    n_tilde_o: int
    K_total: float
    net_per_axis: int
    net_size: int
    grid: int
    delta_status: str = "net-verified"

    def to_json(self) -> dict:
        out = asdict(self)
        out["caid"] = self.caid.tolist()
        return out


def _require_asymmetric_singular(ch: Channel, eps: float):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    if eps == 0.5:
        raise NotApplicable("eps = 1/2 is outside the constant-composition converse")
    cls = classify(ch)
    if not cls.singular:
        raise NotSingular("channel is not singular")
    if cls.symmetric:
        raise NotApplicable("channel is symmetric; use the symmetric converse")


def prop2_constants(ch: Channel, eps: float, net: int | None = None,
                    grid: int | None = None) -> Prop2Constants:
    """Constants of the constant-composition converse for asymmetric singular channels.

    ``delta`` shrinks geometrically from 1/4 until every net point in the ball
    around the CAID gives a full-support output and, for ``eps < 1/2``, no net
    point falls below the dispersion floor.  ``beta1``, ``beta2`` and the
    third-moment ratio are net estimates over the ``S1`` part of the ball.
    """
    _require_asymmetric_singular(ch, eps)
    c, caid = unique_caid(ch)
    v_eps = dispersion(ch, caid)
    if v_eps <= ZERO_DISPERSION:
        raise NotApplicable("V_eps(W) = 0")
    q = norm_ppf(eps)
    phi = norm_pdf(q)
    if eps < 0.5:
        a = None
        nu = v_eps / 2.0
    else:
        a = 2.0 / (1.0 - eps) + 1.0
        nu = v_eps * q**2 / a
    per_axis = default_net(ch.input_size - 1) if net is None else net
    grid = default_grid(ch.input_size) if grid is None else grid

    delta = DELTA_START
    for _ in range(DELTA_STEPS):
        pts = ball_net(caid, delta, per_axis)
        full_support = np.all(pts @ (ch.w > 0) > 0)
        vs = dispersion_batch(ch, pts)
        if full_support and (eps > 0.5 or np.all(vs >= nu)):
            break
        delta *= DELTA_SHRINK
    else:
        raise NetTooCoarse(f"no admissible delta found down to {delta / DELTA_SHRINK:.3g}")

    s1 = vs >= nu
    p1, v1 = pts[s1], vs[s1]
    dist = np.linalg.norm(p1 - caid, axis=1)
    off = dist > 1e-12
    i1 = mutual_info_batch(ch, p1[off])
    beta1 = float(np.min((c - i1) / dist[off] ** 2))
    beta2 = float(np.max(np.abs(np.sqrt(v1[off]) - math.sqrt(v_eps)) / dist[off]))
    ratio = float(np.max(m3_batch(ch, p1) / v1))
    kap = kappa(ch)
    k_s1 = (2.0 / phi) * (ratio + 1.0 / math.sqrt(2 * math.pi) + kap / nu)

    gam = gamma_delta(ch, delta, grid).gamma
    vmax = v_max(ch, grid)
    n_o = _large_distance_threshold(gam, v_eps, q, vmax, eps)
    t = 2.0 * k_s1 / (phi * math.sqrt(nu))
    n_tilde = _least_n(lambda n: math.sqrt(n) > t, int(math.floor(t * t)) + 1)

    k_total = (beta2 * abs(q)) ** 2 / (4.0 * beta1) + k_s1
    if a is not None:
        k_total -= math.log(1.0 - eps - 2.0 / a)
    return Prop2Constants(
        eps=eps, capacity=c, caid=np.array(caid), v_eps=v_eps, quantile=q, phi=phi,
        delta=delta, nu=nu, a=a, gamma=gam, v_max=vmax, kappa=kap, m3_ratio_max=ratio,
        K_s1=k_s1, beta1=beta1, beta2=beta2, n_o=n_o, n_tilde_o=n_tilde, K_total=k_total,
        net_per_axis=per_axis, net_size=int(pts.shape[0]), grid=grid)


def prop2_converse(ch: Channel, eps: float, n: int, net: int | None = None,
                   grid: int | None = None) -> ConverseReport:
    if n < 1:
        raise ValueError("blocklength must be positive")
    k = prop2_constants(ch, eps, net, grid)
    first = n * k.capacity
    second = math.sqrt(n * k.v_eps) * k.quantile
    valid_from = max(k.n_o, k.n_tilde_o)
    report = ConverseReport(n=n, eps=eps, bound_nats=first + second + k.K_total,
                            regime="asymmetric-singular-constant-composition",
                            valid_from=valid_from, constants=k.to_json(),
                            terms={"first_order": first, "second_order": second,
                                   "third_order": k.K_total})
    if k.a is not None:
        report.notes.append(f"a = 2/(1-eps) + 1 = {k.a!r} (any a > 2/(1-eps) is admissible)")
    report.notes.append("delta is net-verified, not certified")
    if n < valid_from:
        report.bound_nats = trivial_bound(ch, n)
        report.trivial = True
        report.notes.append("n below validity threshold; trivial bound n ln min(|X|,|Y|)")
    return report
