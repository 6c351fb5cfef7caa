"""Finite hypothesis classes on the ``d``-point domain.

A hypothesis is a bit vector; its integer code reads ``labels[0]`` as the
most significant bit, and classes keep their members sorted by code.  That
order is the canonical tie-break used everywhere downstream.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import Dataset, DomainError

MAX_FULL_D = 20


@dataclass(frozen=True, order=True)
class Hypothesis:
    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(b) for b in self.labels)
        if any(b not in (0, 1) for b in labels):
            raise DomainError("hypothesis labels must be bits")
        object.__setattr__(self, "labels", labels)

    def __call__(self, x: int) -> int:
        return self.labels[x]

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def d(self) -> int:
        return len(self.labels)

    @property
    def code(self) -> int:
        return encode(self.labels)

    @classmethod
    def from_code(cls, code: int, d: int) -> "Hypothesis":
        return cls(decode(code, d))

    def __repr__(self) -> str:
        return "Hypothesis(" + "".join(map(str, self.labels)) + ")"


def encode(labels: Sequence[int]) -> int:
    code = 0
    for b in labels:
        code = (code << 1) | int(b)
    return code


def decode(code: int, d: int) -> tuple[int, ...]:
    return tuple((int(code) >> (d - 1 - j)) & 1 for j in range(d))


class HypothesisClass:
    """Deduplicated, canonically ordered set of labelings of ``d`` points."""

    def __init__(self, hypotheses: Iterable, d: int | None = None, *, _codes: np.ndarray | None = None):
        if _codes is not None:
            codes = _codes
        else:
            hs = [h if isinstance(h, Hypothesis) else Hypothesis(tuple(h)) for h in hypotheses]
            if not hs:
                raise DomainError("hypothesis class must be non-empty")
            lengths = {len(h) for h in hs}
            if len(lengths) != 1:
                raise DomainError(f"hypotheses have mixed lengths {sorted(lengths)}")
            d_found = lengths.pop()
            if d is not None and d != d_found:
                raise DomainError(f"declared d={d} but hypotheses have length {d_found}")
            d = d_found
            codes = np.unique(np.array([h.code for h in hs], dtype=np.int64))
        if d is None or d < 1:
            raise DomainError("domain size d must be >= 1")
        self.d = int(d)
        self.codes = codes
        self.codes.setflags(write=False)

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self):
        d = self.d
        return (Hypothesis.from_code(int(c), d) for c in self.codes)

    def __getitem__(self, i: int) -> Hypothesis:
        return Hypothesis.from_code(int(self.codes[i]), self.d)

    def __contains__(self, h) -> bool:
        h = h if isinstance(h, Hypothesis) else Hypothesis(tuple(h))
        if len(h) != self.d:
            return False
        i = np.searchsorted(self.codes, h.code)
        return i < len(self.codes) and int(self.codes[i]) == h.code

    def __eq__(self, other) -> bool:
        return isinstance(other, HypothesisClass) and self.d == other.d and np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash((self.d, self.codes.tobytes()))

    def __repr__(self) -> str:
        return f"HypothesisClass(d={self.d}, size={len(self)})"

    @property
    def hypotheses(self) -> list[Hypothesis]:
        return list(self)

    @cached_property
    def matrix(self) -> np.ndarray:
        """``(|class|, d)`` array of labels, rows in canonical order."""
        shifts = np.arange(self.d - 1, -1, -1, dtype=np.int64)
        return ((self.codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)

    @property
    def is_full(self) -> bool:
        return len(self.codes) == 1 << self.d

    def index_of(self, h: Hypothesis) -> int:
        i = int(np.searchsorted(self.codes, h.code))
        if i >= len(self.codes) or int(self.codes[i]) != h.code:
            raise KeyError(h)
        return i

    def consistent_indices(self, data: Dataset) -> np.ndarray:
        c0, c1 = data.label_counts(self.d)
        errors = training_errors(self, c0[None, :], c1[None, :])[0]
        return np.flatnonzero(errors == 0)

    def nearest(self, labels: Sequence[int]) -> Hypothesis:
        """Member closest in Hamming distance; ties go to the canonically smallest."""
        target = np.asarray(labels, dtype=np.int8)
        dist = np.abs(self.matrix - target[None, :]).sum(axis=1)
        return self[int(np.argmin(dist))]


def training_errors(hclass: HypothesisClass, c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    """Mistake counts of every member for a batch of per-point label counts.

    ``c0`` and ``c1`` have shape ``(batch, d)``; returns ``(batch, |class|)``.
    A hypothesis predicting 1 at point j pays ``c0[j]``, predicting 0 pays ``c1[j]``.
    """
    diff = (np.asarray(c0, dtype=np.int64) - np.asarray(c1, dtype=np.int64))
    return diff @ hclass.matrix.T.astype(np.int64) + np.asarray(c1, dtype=np.int64).sum(axis=1, keepdims=True)


def full_class(d: int) -> HypothesisClass:
    """All ``2**d`` labelings."""
    if not 1 <= d <= MAX_FULL_D:
        raise DomainError(f"full_class needs 1 <= d <= {MAX_FULL_D}, got {d}")
    return HypothesisClass((), d, _codes=np.arange(1 << d, dtype=np.int64))


def shatters(hclass: HypothesisClass, subset: Iterable[int]) -> bool:
    pts = sorted(set(int(x) for x in subset))
    if any(not 0 <= x < hclass.d for x in pts):
        raise DomainError(f"subset {pts} not contained in [0, {hclass.d})")
    if not pts:
        return True
    patterns = {tuple(row) for row in hclass.matrix[:, pts].tolist()}
    return len(patterns) == 1 << len(pts)


def vc_dimension(hclass: HypothesisClass) -> int:
    """Size of the largest shattered subset, by exhaustive search from the top."""
    if hclass.d > MAX_FULL_D:
        raise DomainError(f"vc_dimension is capped at d <= {MAX_FULL_D}")
    # a class with n members cannot shatter more than log2(n) points
    upper = min(hclass.d, int(np.floor(np.log2(len(hclass)))))
    for size in range(upper, 0, -1):
        if any(shatters(hclass, s) for s in combinations(range(hclass.d), size)):
            return size
    return 0


def consistent_set(hclass: HypothesisClass, data: Dataset) -> list[Hypothesis]:
    return [hclass[int(i)] for i in hclass.consistent_indices(data)]
