"""Exact law of the singular-channel statistic ``sum_i -ln alpha_{Y_i}(Q)``.

For a singular channel the information density of an output depends on the
output alone, so its per-letter law collapses onto a few value classes.  Sums
over output words then reduce to sums over class-count vectors, which are
enumerated exactly by the compiled kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import kernels
from .channel import Channel, alpha_vector, as_input_dist, is_singular_wrt, output_dist
from .errors import (DominationFailure, EnumerationBudgetExceeded, NotSingular,
                     TooLarge)

DEFAULT_ENUM_BUDGET = 10**7
BRUTE_FORCE_LIMIT = 10**7
MERGE_TOL = 1e-12
SLACK_PER_LETTER = 1e-12


@dataclass(frozen=True, eq=False)
class ValueClassDecomposition:
    values: np.ndarray
    probs: np.ndarray
    measure_tag: str

    def __len__(self):
        return self.values.size

    def same_law(self, other: "ValueClassDecomposition") -> bool:
        return (self.values.shape == other.values.shape
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.probs, other.probs))

    def mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    def var(self) -> float:
        return float(np.dot(self.probs, (self.values - self.mean()) ** 2))

    def abs_central_moment(self, order: int = 3) -> float:
        return float(np.dot(self.probs, np.abs(self.values - self.mean()) ** order))

    def to_json(self) -> dict:
        return {"values": self.values.tolist(), "probs": self.probs.tolist(),
                "measure": self.measure_tag}


@dataclass(frozen=True)
class TailResult:
    cdf_at_threshold: float
    tilted_sum: float
    threshold: float
    n: int
    enumeration_size: int


Measure = Union[str, int]
Law = Union[ValueClassDecomposition, Sequence[ValueClassDecomposition]]


def _merge(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(values, kind="stable")
    out_v: list[float] = []
    out_p: list[float] = []
    for v, p in zip(values[order], probs[order]):
        if out_v and abs(v - out_v[-1]) < MERGE_TOL:
            out_p[-1] += p
        else:
            out_v.append(float(v))
            out_p.append(float(p))
    return np.array(out_v), np.array(out_p)


def decompose(ch: Channel, q_in, measure: Measure = "q") -> ValueClassDecomposition:
    """Per-letter law of ``-ln alpha_Y(Q)`` under ``q_Q`` or a row ``W(.|x)``.

    Raises
    ------
    NotSingular
        If the rows involved (support of Q, plus ``x``) are not singular.
    DominationFailure
        If the measure charges an output that Q cannot reach.
    """
    q_in = as_input_dist(q_in, ch.input_size)
    rows = q_in > 0
    if measure == "q":
        weights = output_dist(ch, q_in)
        tag = "q"
    else:
        x = int(measure)
        rows = rows.copy()
        rows[x] = True
        weights = ch.w[x]
        tag = f"W(.|{x})"
    mix = rows / rows.sum()
    if not is_singular_wrt(ch, mix):
        raise NotSingular("channel rows used by this statistic are not singular")
    a = alpha_vector(ch, q_in)
    live = weights > 0
    if np.any(a[live] <= 0):
        raise DominationFailure(f"q_Q does not dominate the measure {tag}")
    values, probs = _merge(-np.log(a[live]) + 0.0, weights[live])
    probs = probs / probs.sum()
    return ValueClassDecomposition(values=values, probs=probs, measure_tag=tag)


def _group(law: Law, n: int) -> list[tuple[ValueClassDecomposition, int]]:
    if isinstance(law, ValueClassDecomposition):
        return [(law, n)]
    law = list(law)
    if len(law) != n:
        raise ValueError(f"per-letter law list has length {len(law)}, expected n={n}")
    groups: list[list] = []
    for dec in law:
        for g in groups:
            if g[0].same_law(dec):
                g[1] += 1
                break
        else:
            groups.append([dec, 1])
    return [(d, c) for d, c in groups]


def enumeration_size(law: Law, n: int) -> int:
    size = 1
    for dec, count in _group(law, n):
        size *= math.comb(count + len(dec) - 1, len(dec) - 1)
    return size


def tail(law: Law, n: int, threshold: float,
         budget: int = DEFAULT_ENUM_BUDGET) -> TailResult:
    """Exact ``P(S_n <= t)`` and ``E[1{S_n <= t} e^{-(t - S_n)}]``.

    ``law`` is either one decomposition (i.i.d. letters) or a list of ``n``
    per-letter decompositions, which are grouped and enumerated as a product
    over groups.  Ties at the threshold count as inside, with an absolute
    slack of ``1e-12 * n``.
    """
    if n < 1:
        raise ValueError("blocklength must be positive")
    groups = _group(law, n)
    size = enumeration_size(law, n)
    if size > budget:
        raise EnumerationBudgetExceeded(
            f"{size} composition vectors exceed the budget of {budget}")
    slack = SLACK_PER_LETTER * n
    if len(groups) == 1:
        dec, _ = groups[0]
        cdf, tilted, visited = kernels.iid_tail(
            np.ascontiguousarray(dec.values), np.ascontiguousarray(np.log(dec.probs)),
            n, float(threshold), slack)
    else:
        lps, ss = [], []
        for dec, count in groups:
            lp, s = kernels.composition_terms(
                np.ascontiguousarray(dec.values), np.ascontiguousarray(np.log(dec.probs)), count)
            lps.append(np.asarray(lp))
            ss.append(np.asarray(s))
        cdf, tilted, visited = kernels.product_tail(lps, ss, float(threshold), slack)
    cdf = min(max(cdf, 0.0), 1.0)
    tilted = min(max(tilted, 0.0), cdf)
    return TailResult(cdf_at_threshold=cdf, tilted_sum=tilted, threshold=float(threshold),
                      n=n, enumeration_size=int(visited))


def exact_cdf(law: Law, n: int, threshold: float, budget: int = DEFAULT_ENUM_BUDGET) -> float:
    return tail(law, n, threshold, budget).cdf_at_threshold


def tilted_sum(law: Law, n: int, threshold: float, budget: int = DEFAULT_ENUM_BUDGET) -> float:
    return tail(law, n, threshold, budget).tilted_sum


def brute_force_cdf(ch: Channel, q_in, measure, n: int, threshold: float
                    ) -> tuple[float, float]:
    """Oracle: enumerate every output word of length ``n``.

    ``measure`` is ``"q"`` (i.i.d. ``q_Q``), an input letter (i.i.d. row) or a
    length-``n`` input word.  Returns ``(P(S_n <= t), E[1{S_n<=t} e^{-(t-S_n)}])``.
    """
    if n < 1:
        raise ValueError("blocklength must be positive")
    ny = ch.output_size
    if ny**n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"|Y|^n = {ny}^{n} exceeds {BRUTE_FORCE_LIMIT}")
    q_in = as_input_dist(q_in, ch.input_size)
    if isinstance(measure, str):
        letters = [output_dist(ch, q_in)] * n
    elif np.isscalar(measure):
        letters = [ch.w[int(measure)]] * n
    else:
        word = list(measure)
        if len(word) != n:
            raise ValueError("input word length must equal n")
        letters = [ch.w[int(x)] for x in word]
    a = alpha_vector(ch, q_in)
    with np.errstate(divide="ignore"):
        stat = -np.log(a)
    limit = threshold + SLACK_PER_LETTER * n
    table = np.array(letters)
    powers = ny ** np.arange(n - 1, -1, -1, dtype=np.int64)
    cdf: list[float] = []
    til: list[float] = []
    for lo in range(0, ny**n, 1 << 16):
        idx = np.arange(lo, min(ny**n, lo + (1 << 16)), dtype=np.int64)
        ys = (idx[:, None] // powers[None, :]) % ny
        p = np.prod(table[np.arange(n)[None, :], ys], axis=1)
        live = p > 0
        s = stat[ys[live]].sum(axis=1)
        inside = s <= limit
        cdf.extend(p[live][inside].tolist())
        til.extend((p[live][inside] * np.exp(-(threshold - s[inside]))).tolist())
    return math.fsum(cdf), math.fsum(til)
