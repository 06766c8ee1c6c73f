"""Ground truth: exact ML error of small codebooks, Monte-Carlo tails, bound audits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .bounds import lemma2_lower_bound
from .channel import Channel, alpha_vector, as_input_dist, uniform
from .errors import DominationFailure, HypothesisFailure, NotSingular, TooLarge
from .exactdist import BRUTE_FORCE_LIMIT, SLACK_PER_LETTER

# rounding guard when comparing two exactly computed probabilities
AUDIT_SLACK = 1e-12
MC_CHUNK = 4096
MIN_SAMPLES = 1000


@dataclass(frozen=True, eq=False)
class Codebook:
    n: int
    codewords: np.ndarray
    composition: np.ndarray | None

    @classmethod
    def from_words(cls, words, input_size: int | None = None) -> "Codebook":
        cw = np.atleast_2d(np.asarray(words, dtype=np.int64))
        if cw.size == 0:
            raise ValueError("codebook is empty")
        if np.any(cw < 0) or (input_size is not None and np.any(cw >= input_size)):
            raise ValueError("codeword letter outside the input alphabet")
        size = int(cw.max()) + 1 if input_size is None else input_size
        types = np.stack([np.bincount(w, minlength=size) for w in cw])
        comp = types[0] if np.all(types == types[0]) else None
        cw.setflags(write=False)
        return cls(n=cw.shape[1], codewords=cw, composition=comp)

    def __len__(self) -> int:
        return self.codewords.shape[0]

    def to_json(self) -> dict:
        return {"n": self.n, "codewords": self.codewords.tolist(),
                "composition": None if self.composition is None else self.composition.tolist()}


def random_cc_codebook(rng: np.random.Generator, counts, size: int) -> Codebook:
    """``size`` independent uniformly random words of the type ``counts``."""
    counts = np.asarray(counts, dtype=np.int64)
    base = np.repeat(np.arange(counts.size), counts)
    words = np.stack([rng.permutation(base) for _ in range(size)])
    return Codebook.from_words(words, input_size=counts.size)


def ml_error_exact(ch: Channel, cb: Codebook) -> float:
    """Average error of ML decoding, ties broken toward the lowest message index."""
    if ch.output_size ** cb.n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"|Y|^n = {ch.output_size}^{cb.n} exceeds {BRUTE_FORCE_LIMIT}")
    if np.any(cb.codewords >= ch.input_size):
        raise ValueError("codeword letter outside the input alphabet")
    return float(kernels.ml_error(ch.w, cb.codewords))


@dataclass(frozen=True)
class Lemma2Audit:
    n: int
    size: int
    rate: float
    eps: float
    ml_error: float
    lower_bound: float
    w_sr: float
    tilted: float
    holds: bool
    exceeds_eps: bool

    def to_json(self) -> dict:
        return asdict(self)


def audit_lemma2(ch: Channel, cb: Codebook, eps: float, rate: float | None = None
                 ) -> Lemma2Audit:
    """Compare the exact ML error of ``cb`` with the change-of-measure lower bound.

    The reference input law is the common composition of the codebook.
    """
    if cb.composition is None:
        raise HypothesisFailure("codebook is not constant-composition")
    rate = math.log(len(cb)) / cb.n if rate is None else rate
    q_in = cb.composition / cb.n
    try:
        terms = lemma2_lower_bound(ch, q_in, cb.composition, cb.n, rate)
    except NotSingular as exc:
        raise HypothesisFailure(f"singularity relative to the composition fails: {exc}") from exc
    except DominationFailure as exc:
        raise HypothesisFailure(f"domination fails: {exc}") from exc
    err = ml_error_exact(ch, cb)
    return Lemma2Audit(n=cb.n, size=len(cb), rate=rate, eps=eps, ml_error=err,
                       lower_bound=terms.bound, w_sr=terms.w_sr, tilted=terms.tilted,
                       holds=err >= terms.bound - AUDIT_SLACK, exceeds_eps=terms.bound > eps)


def mc_estimate(ch: Channel, x_word, threshold: float, samples: int, seed: int,
                q_in=None) -> tuple[float, float]:
    """Monte-Carlo ``P(sum_i -ln alpha_{Y_i}(Q) <= threshold | x^n)`` with a 95% half-width.

    Samples are drawn in fixed-size chunks, each from its own child of
    ``SeedSequence(seed)``, so the result depends only on the seed.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    x = np.asarray(x_word, dtype=np.int64)
    n = x.size
    q_in = uniform(ch.input_size) if q_in is None else as_input_dist(q_in, ch.input_size)
    with np.errstate(divide="ignore"):
        stat = -np.log(alpha_vector(ch, q_in))
    cum = np.cumsum(ch.w[x], axis=1)
    limit = threshold + SLACK_PER_LETTER * n
    chunks = -(-samples // MC_CHUNK)
    hits = 0
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(chunks)):
        m = min(MC_CHUNK, samples - i * MC_CHUNK)
        u = np.random.default_rng(child).random((m, n))
        y = np.minimum((u[:, :, None] >= cum[None, :, :]).sum(axis=2), ch.output_size - 1)
        hits += int(np.count_nonzero(stat[y].sum(axis=1) <= limit))
    p = hits / samples
    return p, 1.959963984540054 * math.sqrt(p * (1 - p) / samples)
