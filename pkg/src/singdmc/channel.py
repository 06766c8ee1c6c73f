"""Discrete memoryless channels: validation, classification, singular structure.

A channel is stored as a row-stochastic matrix ``w[x, y] = W(y|x)``.  All-zero
output columns are stripped at construction; ``column_map`` remembers the
original index of every surviving column.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (BadParameter, EmptyAlphabet, NegativeEntry, NonStochastic,
                     SearchBudgetExceeded, ValidationError)

ROW_SUM_TOL = 1e-9
PROB_SUM_TOL = 1e-12
REL_TOL = 1e-12
DEFAULT_SEARCH_BUDGET = 10**6


def close(a: float, b: float, rtol: float = REL_TOL) -> bool:
    """Relative equality used for every probability comparison."""
    return abs(a - b) <= rtol * max(abs(a), abs(b))


@dataclass(frozen=True, eq=False)
class Channel:
    w: np.ndarray
    column_map: tuple[int, ...]
    labels_x: tuple[str, ...] | None = None
    labels_y: tuple[str, ...] | None = None

    @property
    def input_size(self) -> int:
        return self.w.shape[0]

    @property
    def output_size(self) -> int:
        return self.w.shape[1]

    @property
    def key(self) -> str:
        """Content hash of the (stripped) transition matrix."""
        h = hashlib.sha256()
        h.update(np.asarray(self.w.shape, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.w, dtype=np.float64).tobytes())
        return h.hexdigest()

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Channel) and self.key == other.key

    def __repr__(self):
        return f"Channel({self.input_size}x{self.output_size}, key={self.key[:12]})"

    def to_json(self) -> dict:
        out = {"W": self.w.tolist()}
        if self.labels_x is not None:
            out["labels_x"] = list(self.labels_x)
        if self.labels_y is not None:
            out["labels_y"] = list(self.labels_y)
        return out


@dataclass(frozen=True)
class Classification:
    symmetric: bool
    partition: list[list[int]] | None
    singular: bool
    column_constants: dict[int, float] | None
    per_class: list[tuple[float, float, int]] | None = field(default=None)

    def to_json(self) -> dict:
        return {
            "symmetric": self.symmetric,
            "partition": self.partition,
            "singular": self.singular,
            "column_constants": (None if self.column_constants is None else
                                 [self.column_constants[y] for y in sorted(self.column_constants)]),
            "per_class": (None if self.per_class is None else
                          [{"delta": d, "alpha": a, "nu": v} for d, a, v in self.per_class]),
        }


def validate(raw, labels_x: Sequence[str] | None = None,
             labels_y: Sequence[str] | None = None) -> Channel:
    """Build a :class:`Channel` from a nested list or array.

    Raises
    ------
    EmptyAlphabet
        If the matrix has no rows or no columns (after stripping).
    NegativeEntry
        If any entry is negative.
    NonStochastic
        If a row sum deviates from 1 by more than ``1e-9``.
    """
    try:
        w = np.array(raw, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"matrix is not rectangular numeric: {exc}") from None
    if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
        raise EmptyAlphabet(f"need a non-empty 2-D matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("matrix has non-finite entries")
    if np.any(w < 0):
        raise NegativeEntry("transition probabilities must be nonnegative")
    if np.any(w > 1):
        raise NonStochastic("transition probabilities must not exceed 1")
    sums = w.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise NonStochastic(f"row {int(bad[0])} sums to {sums[bad[0]]!r}")
    keep = np.flatnonzero(w.max(axis=0) > 0)
    if keep.size == 0:
        raise EmptyAlphabet("no output column has positive mass")
    if labels_y is not None:
        if len(labels_y) != w.shape[1]:
            raise ValidationError("labels_y length does not match the column count")
        labels_y = tuple(str(labels_y[j]) for j in keep)
    if labels_x is not None:
        if len(labels_x) != w.shape[0]:
            raise ValidationError("labels_x length does not match the row count")
        labels_x = tuple(str(s) for s in labels_x)
    w = np.ascontiguousarray(w[:, keep])
    w.setflags(write=False)
    return Channel(w=w, column_map=tuple(int(j) for j in keep),
                   labels_x=labels_x, labels_y=labels_y)


def as_input_dist(p, size: int) -> np.ndarray:
    """Validate a probability vector over an alphabet of ``size`` letters."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (size,):
        raise ValidationError(f"input distribution must have shape ({size},), got {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_SUM_TOL * max(1, size):
        raise ValidationError("input distribution must be nonnegative and sum to 1")
    return p


def uniform(size: int) -> np.ndarray:
    return np.full(size, 1.0 / size)


# -- singularity -------------------------------------------------------------

def _column_is_constant(col: np.ndarray) -> bool:
    pos = col[col > 0]
    if pos.size <= 1:
        return True
    return all(close(v, pos[0]) for v in pos[1:])


def is_singular(ch: Channel) -> bool:
    """True iff in every column all strictly positive entries coincide."""
    return all(_column_is_constant(ch.w[:, y]) for y in range(ch.output_size))


def is_singular_wrt(ch: Channel, p) -> bool:
    """Singularity restricted to the rows in the support of ``p``."""
    p = as_input_dist(p, ch.input_size)
    rows = ch.w[p > 0]
    return all(_column_is_constant(rows[:, y]) for y in range(ch.output_size))


def column_constants(ch: Channel) -> dict[int, float]:
    """The common positive value of every column (meaningful for singular channels)."""
    return {y: float(ch.w[:, y].max()) for y in range(ch.output_size)}


# -- Gallager symmetry ---------------------------------------------------------

def _same_multiset(a: np.ndarray, b: np.ndarray) -> bool:
    return all(close(u, v) for u, v in zip(np.sort(a), np.sort(b)))


def _rows_permuted(block: np.ndarray) -> bool:
    first = np.sort(block[0])
    return all(_same_multiset(first, row) for row in block[1:])


def detect_symmetry(ch: Channel, budget: int = DEFAULT_SEARCH_BUDGET
                    ) -> tuple[bool, list[list[int]] | None]:
    """Decide Gallager symmetry by exhaustive partition search.

    Columns are first grouped by their sorted-entry multiset (columns inside a
    block must be permutations of each other).  Each group is then split into
    blocks by depth-first search, largest candidate block first, until every
    block also has mutually permuted rows.

    Returns
    -------
    (symmetric, partition)
        ``partition`` lists output indices per block, sorted by smallest member,
        or is None when no witness exists.
    """
    w = ch.w
    groups: list[list[int]] = []
    for y in range(ch.output_size):
        for g in groups:
            if _same_multiset(w[:, g[0]], w[:, y]):
                g.append(y)
                break
        else:
            groups.append([y])

    nodes = 0

    def split(remaining: list[int]) -> list[list[int]] | None:
        nonlocal nodes
        if not remaining:
            return []
        head, rest = remaining[0], remaining[1:]
        for size in range(len(rest), -1, -1):
            for others in combinations(rest, size):
                nodes += 1
                if nodes > budget:
                    raise SearchBudgetExceeded(
                        f"symmetry search exceeded {budget} nodes (|Y|={ch.output_size})")
                block = [head, *others]
                if not _rows_permuted(w[:, block]):
                    continue
                left = [y for y in rest if y not in others]
                tail = split(left)
                if tail is not None:
                    return [block, *tail]
        return None

    partition: list[list[int]] = []
    for g in groups:
        found = split(g)
        if found is None:
            return False, None
        partition.extend(found)
    partition.sort(key=min)
    return True, partition


def classify(ch: Channel, budget: int = DEFAULT_SEARCH_BUDGET) -> Classification:
    symmetric, partition = detect_symmetry(ch, budget)
    singular = is_singular(ch)
    consts = column_constants(ch) if singular else None
    per_class = None
    if symmetric and singular:
        a = alpha_vector(ch, uniform(ch.input_size))
        per_class = []
        for block in partition:
            y = block[0]
            nu = int(np.count_nonzero(ch.w[0, block] > 0))
            per_class.append((consts[y], float(a[y]), nu))
    return Classification(symmetric=symmetric, partition=partition, singular=singular,
                          column_constants=consts, per_class=per_class)


# -- singular-structure quantities ---------------------------------------------

def alpha_vector(ch: Channel, q_in) -> np.ndarray:
    """``alpha_y(Q)``: input mass that can reach each output ``y``."""
    q_in = as_input_dist(q_in, ch.input_size)
    return q_in @ (ch.w > 0).astype(np.float64)


def alpha(ch: Channel, q_in, y: int) -> float:
    return float(alpha_vector(ch, q_in)[y])


def output_dist(ch: Channel, q_in) -> np.ndarray:
    """``q_Q(y) = sum_x Q(x) W(y|x)``."""
    q_in = as_input_dist(q_in, ch.input_size)
    return q_in @ ch.w


# -- builtin channels ------------------------------------------------------------

def bec(delta: float) -> Channel:
    if not 0.0 <= delta <= 1.0:
        raise BadParameter(f"BEC erasure probability must lie in [0,1], got {delta}")
    return validate([[1 - delta, 0.0, delta], [0.0, 1 - delta, delta]],
                    labels_x=["0", "1"], labels_y=["0", "1", "e"])


def bsc(p: float) -> Channel:
    if not 0.0 <= p <= 1.0:
        raise BadParameter(f"BSC crossover probability must lie in [0,1], got {p}")
    return validate([[1 - p, p], [p, 1 - p]])


def identity(k: int = 2) -> Channel:
    if int(k) != k or k < 1:
        raise BadParameter(f"identity size must be a positive integer, got {k}")
    return validate(np.eye(int(k)))


def asym_example() -> Channel:
    """The 3-input, 4-output channel that is singular but not symmetric."""
    w = np.zeros((3, 4))
    w[0, 0] = 2 / 3
    for x, y in [(0, 1), (0, 3), (1, 3), (2, 1)]:
        w[x, y] = 1 / 6
    w[1, 2] = w[2, 2] = 5 / 6
    return validate(w)


def ternary_erasure(b: float = 0.1, c: float = 0.2) -> Channel:
    """Symmetric singular channel on three inputs.

    Outputs are the three inputs themselves (prob ``1-2b-c``), the three
    unordered input pairs (prob ``b`` for each pair containing the input) and
    a full erasure (prob ``c``).
    """
    a = 1 - 2 * b - c
    if min(a, b, c) < 0:
        raise BadParameter(f"need b, c >= 0 and 2b + c <= 1, got b={b}, c={c}")
    pairs = [(0, 1), (0, 2), (1, 2)]
    w = np.zeros((3, 7))
    for x in range(3):
        w[x, x] = a
        for j, pr in enumerate(pairs):
            if x in pr:
                w[x, 3 + j] = b
        w[x, 6] = c
    return validate(w)


BUILTINS = {
    "bec": bec,
    "bsc": bsc,
    "identity": identity,
    "asym_example": asym_example,
    "ternary_erasure": ternary_erasure,
}


def builtin(name: str, *params) -> Channel:
    try:
        ctor = BUILTINS[name]
    except KeyError:
        raise BadParameter(f"unknown builtin channel {name!r}; "
                           f"choose from {sorted(BUILTINS)}") from None
    try:
        return ctor(*params)
    except TypeError as exc:
        raise BadParameter(f"bad parameters for {name}: {exc}") from None


def parse_builtin(spec: str) -> Channel:
    """Parse ``name:param1,param2`` (e.g. ``bec:0.5``)."""
    name, _, rest = spec.partition(":")
    params = []
    for tok in filter(None, rest.split(",")):
        try:
            params.append(int(tok) if tok.strip().lstrip("-").isdigit() else float(tok))
        except ValueError:
            raise BadParameter(f"cannot parse parameter {tok!r} in {spec!r}") from None
    return builtin(name.strip(), *params)


def load_channel(path) -> Channel:
    """Load the JSON channel format ``{"W": [[...]], "labels_x": .., "labels_y": ..}``."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "W" not in data:
        raise ValidationError(f"{path}: expected an object with key 'W'")
    return validate(data["W"], data.get("labels_x"), data.get("labels_y"))
