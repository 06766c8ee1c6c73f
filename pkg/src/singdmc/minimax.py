"""Minimax (meta-)converse for symmetric singular channels.

The auxiliary output law ``Q*`` puts weight ``prod_i delta_{y_i}`` on output
words inside ``S_R = {y^n : sum_i -ln alpha_{y_i} <= nR}`` and nothing outside.
Against the uniform input, the likelihood ratio of the channel law to
``U x Q*`` is constant on compatible pairs inside ``S_R``, so the optimal
Neyman-Pearson test randomises on that single class.  Every sum over output
words depends on the word only through its type, which is what makes the
exact evaluation below feasible.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import exactdist, kernels
from ._simplex import integer_compositions
from .bounds import prop1_constants, prop1_rate
from .channel import Channel, alpha_vector, classify, column_constants, uniform
from .errors import EnumerationBudgetExceeded, NotApplicable, TauOutOfRange
from .measures import dispersion

ORACLE_LR_TOL = 1e-9


def _require(ch: Channel, need_dispersion: bool = True) -> None:
    cls = classify(ch)
    if not (cls.symmetric and cls.singular):
        raise NotApplicable("the minimax evaluation needs a symmetric singular channel")
    if need_dispersion and dispersion(ch, uniform(ch.input_size)) <= 0:
        raise NotApplicable("zero dispersion")


def _statistic_values(ch: Channel) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.log(alpha_vector(ch, uniform(ch.input_size)))


def qstar_logweight(ch: Channel, y_word, rate: float) -> float | None:
    """Unnormalised ``ln Q*(y^n)``: ``sum_i ln delta_{y_i}`` on ``S_R``, else ``None``."""
    _require(ch, need_dispersion=False)
    y = np.asarray(y_word, dtype=np.int64)
    n = y.size
    stat = float(np.sum(_statistic_values(ch)[y]))
    if stat > n * rate + exactdist.SLACK_PER_LETTER * n:
        return None
    deltas = column_constants(ch)
    return math.fsum(math.log(deltas[int(v)]) for v in y)


def qstar_log_normalizer(ch: Channel, n: int, rate: float,
                         budget: int = exactdist.DEFAULT_ENUM_BUDGET) -> float:
    """``ln sum_{y^n in S_R} prod_i delta_{y_i} = nR + ln(tilted sum)``."""
    _require(ch, need_dispersion=False)
    law = exactdist.decompose(ch, uniform(ch.input_size), "q")
    til = exactdist.tilted_sum(law, n, n * rate, budget)
    return n * rate + math.log(til) if til > 0 else -math.inf


@dataclass(frozen=True)
class MinimaxReport:
    n: int
    eps: float
    rate: float
    tau: float
    w_sr: float
    tilted: float
    log_beta: float
    beta: float
    rate_bound_nats: float
    strict_check: bool

    def to_json(self) -> dict:
        return asdict(self)


def default_rate(ch: Channel, eps: float, n: int) -> float:
    """The rate ``C + sqrt(V/n) Phi^{-1}(eps) + K(eps,W)/n`` of the symmetric converse."""
    return prop1_rate(prop1_constants(ch, eps), n)


def np_tau_beta(ch: Channel, eps: float, n: int, rate: float | None = None,
                budget: int = exactdist.DEFAULT_ENUM_BUDGET) -> MinimaxReport:
    """``beta_{1-eps}(U, Q*)`` from the closed form ``(1 - tau) w_sr / (e^{nR} tilted)``.

    ``beta`` itself may underflow for large ``n``; ``log_beta`` does not.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    _require(ch)
    rate = default_rate(ch, eps, n) if rate is None else rate
    u = uniform(ch.input_size)
    threshold = n * rate
    w_sr = exactdist.exact_cdf(exactdist.decompose(ch, u, 0), n, threshold, budget)
    til = exactdist.tilted_sum(exactdist.decompose(ch, u, "q"), n, threshold, budget)
    if w_sr <= eps:
        raise TauOutOfRange(f"W(S_R|x_o^n) = {w_sr:.6g} does not exceed eps = {eps}")
    tau = eps / w_sr
    log_beta = math.log(w_sr - eps) - threshold - math.log(til)
    return MinimaxReport(n=n, eps=eps, rate=rate, tau=tau, w_sr=w_sr, tilted=til,
                         log_beta=log_beta, beta=math.exp(log_beta),
                         rate_bound_nats=-log_beta, strict_check=w_sr - til > eps)


def np_oracle(ch: Channel, eps: float, n: int, rate: float,
              budget: int = exactdist.DEFAULT_ENUM_BUDGET) -> float:
    """Optimal randomised test between ``U x W`` and ``U x Q*``, computed over output types.

    Independent of :func:`np_tau_beta`: classes are formed from output types,
    their masses under both hypotheses are computed directly, and the
    acceptance region is filled in decreasing likelihood-ratio order.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    _require(ch)
    nx, ny = ch.input_size, ch.output_size
    if math.comb(n + ny - 1, ny - 1) > budget:
        raise EnumerationBudgetExceeded("too many output types for the oracle")
    types = integer_compositions(n, ny)
    reach = (ch.w > 0).sum(axis=0) / nx
    delta = ch.w.max(axis=0)
    q = ch.w.sum(axis=0) / nx
    log_mult = gammaln(n + 1) - gammaln(types + 1).sum(axis=1)
    inside = types @ (-np.log(reach)) <= n * rate + exactdist.SLACK_PER_LETTER * n
    with np.errstate(divide="ignore"):
        log_p = log_mult + types @ np.log(q)
    log_w = log_mult + types @ np.log(delta)
    if not np.any(inside):
        return 0.0
    log_z = logsumexp(log_w[inside])
    log_q = np.where(inside, log_w + types @ np.log(reach) - log_z, -np.inf)
    lr = np.where(inside, log_p - log_q, np.inf)

    need = 1.0 - eps
    accepted = math.fsum(np.exp(log_p[~inside]).tolist())
    if accepted >= need:
        return 0.0
    order = np.argsort(-lr[inside], kind="stable")
    lr_in = lr[inside][order]
    p_in = np.exp(log_p[inside][order])
    q_in = np.exp(log_q[inside][order])
    beta = 0.0
    start = 0
    while start < lr_in.size:
        stop = start + 1
        while stop < lr_in.size and abs(lr_in[stop] - lr_in[start]) <= ORACLE_LR_TOL:
            stop += 1
        group_p = math.fsum(p_in[start:stop].tolist())
        group_q = math.fsum(q_in[start:stop].tolist())
        if accepted + group_p < need:
            accepted += group_p
            beta += group_q
        else:
            beta += group_q * (need - accepted) / group_p
            break
        start = stop
    return beta


def optimal_rate(ch: Channel, eps: float, n: int,
                 budget: int = exactdist.DEFAULT_ENUM_BUDGET) -> float:
    """Rate minimising ``-ln beta`` over the family ``Q*_R``.

    ``-ln beta = ln Z(nR) - ln(W(S_R|x_o^n) - eps)`` with
    ``Z(t) = sum_{S <= t} q(y^n) e^{S}``; both pieces only change when ``nR``
    crosses an atom of the statistic, so the minimum is attained at an atom
    and is found by one pass over the sorted atoms.
    """
    _require(ch)
    u = uniform(ch.input_size)
    w_law = exactdist.decompose(ch, u, 0)
    q_law = exactdist.decompose(ch, u, "q")
    size = exactdist.enumeration_size(w_law, n)
    if size > budget:
        raise EnumerationBudgetExceeded(f"{size} composition vectors exceed the budget of {budget}")
    lp_w, s = kernels.composition_terms(np.ascontiguousarray(w_law.values),
                                        np.ascontiguousarray(np.log(w_law.probs)), n)
    lp_q, s_q = kernels.composition_terms(np.ascontiguousarray(q_law.values),
                                          np.ascontiguousarray(np.log(q_law.probs)), n)
    if w_law.values.shape != q_law.values.shape or s.shape != s_q.shape \
            or not np.allclose(w_law.values, q_law.values, rtol=0, atol=1e-12):
        raise NotApplicable("row and output laws of the statistic have different atoms")
    # same classes in the same order, so the compositions line up row by row
    order = np.argsort(s, kind="stable")
    s, lp_w, lp_q = s[order], lp_w[order], lp_q[order]
    w_cum = np.cumsum(np.exp(lp_w))
    log_z = np.logaddexp.accumulate(lp_q + s)
    # last index of every group of tied atoms
    ends = np.flatnonzero(np.append(np.diff(s) > exactdist.SLACK_PER_LETTER * n, True))
    live = ends[w_cum[ends] > eps]
    if live.size == 0:
        raise TauOutOfRange("no rate gives W(S_R|x_o^n) > eps")
    obj = log_z[live] - np.log(w_cum[live] - eps)
    return float(s[live[int(np.argmin(obj))]]) / n
