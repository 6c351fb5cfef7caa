"""Transductive learners ``h_m(Z_m, X_u)``.

None of the implemented learners looks at the unlabeled points; they are
the supervised baselines whose transductive rates the bounds describe.

Each learner has a one-sample entry point working on :class:`Dataset`
and a batched kernel over ``(trials, m)`` arrays of training points and
labels, used by the vectorized Monte Carlo harness.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import ConfigError, Dataset
from .hypothesis import Hypothesis, HypothesisClass, training_errors
from .rng import CounterRNG

KINDS = ("erm", "majority_of_erms", "constant", "random_guess", "ignore_unlabeled_wrapper")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    bit: int | None = None
    inner: "LearnerSpec | None" = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "constant" and self.bit not in (0, 1):
            raise ConfigError("constant learner needs bit 0 or 1")
        if self.kind == "ignore_unlabeled_wrapper" and self.inner is None:
            raise ConfigError("ignore_unlabeled_wrapper needs an inner learner")

    @property
    def randomized(self) -> bool:
        if self.kind == "ignore_unlabeled_wrapper":
            return self.inner.randomized
        return self.kind == "random_guess"

    @property
    def base(self) -> "LearnerSpec":
        """Learner with wrappers stripped."""
        return self.inner.base if self.kind == "ignore_unlabeled_wrapper" else self

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.bit is not None:
            out["bit"] = self.bit
        if self.inner is not None:
            out["inner"] = self.inner.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj) -> "LearnerSpec":
        if isinstance(obj, str):
            obj = {"kind": obj}
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError(f"learner spec must be an object with a 'kind', got {obj!r}")
        inner = obj.get("inner")
        return cls(obj["kind"], obj.get("bit"), cls.from_dict(inner) if inner is not None else None)

    @classmethod
    def from_json(cls, text: str) -> "LearnerSpec":
        return cls.from_dict(json.loads(text))

    def __str__(self) -> str:
        if self.kind == "constant":
            return f"constant({self.bit})"
        if self.kind == "ignore_unlabeled_wrapper":
            return f"ignore_unlabeled({self.inner})"
        return self.kind


ERM = LearnerSpec("erm")
MAJORITY = LearnerSpec("majority_of_erms")


# --------------------------------------------------------------------------
# single-sample learners

def erm(hclass: HypothesisClass, train: Dataset) -> Hypothesis:
    """Canonically smallest minimizer of training error."""
    c0, c1 = train.label_counts(hclass.d)
    return hclass[int(_erm_indices(hclass, c0[None, :], c1[None, :])[0])]


def recursion_threshold(d: int) -> int:
    return max(4, 3 * d)


def majority_ensemble(hclass: HypothesisClass, train: Dataset) -> list[Hypothesis]:
    """ERMs at the leaves of the three-subsample recursion (a multiset)."""
    n = len(train)
    if n <= recursion_threshold(hclass.d):
        return [erm(hclass, train)]
    q = n // 4
    head = n - 3 * q
    s0 = train[:head]
    s1, s2, s3 = train[head:head + q], train[head + q:head + 2 * q], train[head + 2 * q:]
    out: list[Hypothesis] = []
    for sub in (s0 + s2 + s3, s0 + s1 + s3, s0 + s1 + s2):
        out.extend(majority_ensemble(hclass, sub))
    return out


def majority_of_erms(hclass: HypothesisClass, train: Dataset) -> Hypothesis:
    ensemble = majority_ensemble(hclass, train)
    votes = np.sum([h.labels for h in ensemble], axis=0)
    vector = (2 * votes > len(ensemble)).astype(int)
    return hclass.nearest(vector)


def run_learner(spec: LearnerSpec, hclass: HypothesisClass, train: Dataset,
                unlabeled: Sequence[int] = (), rng: CounterRNG | None = None) -> Hypothesis:
    kind = spec.kind
    if kind == "erm":
        return erm(hclass, train)
    if kind == "majority_of_erms":
        return majority_of_erms(hclass, train)
    if kind == "constant":
        return hclass.nearest([spec.bit] * hclass.d)
    if kind == "random_guess":
        if rng is None:
            raise ConfigError("random_guess needs an rng")
        return hclass[int(rng.uniforms(1)[0] * len(hclass))]
    if kind == "ignore_unlabeled_wrapper":
        return run_learner(spec.inner, hclass, train, (), rng)
    raise ConfigError(f"unknown learner kind {kind!r}")


# --------------------------------------------------------------------------
# batched kernels

def _erm_indices(hclass: HypothesisClass, c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    if hclass.is_full:
        # per-point minimizer, 0 on ties; the resulting code is the smallest minimizer
        bits = (c1 > c0).astype(np.int64)
        weights = 1 << np.arange(hclass.d - 1, -1, -1, dtype=np.int64)
        return bits @ weights
    return np.argmin(training_errors(hclass, c0, c1), axis=1)


def _counts(points: np.ndarray, labels: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    onehot = points[..., None] == np.arange(d)
    c1 = (onehot & (labels[..., None] == 1)).sum(axis=-2)
    c0 = onehot.sum(axis=-2) - c1
    return c0, c1


@lru_cache(maxsize=64)
def leaf_membership(n: int, d: int) -> np.ndarray:
    """``(leaves, n)`` 0/1 matrix: which training positions each leaf ERM sees."""
    leaves: list[list[int]] = []

    def rec(idx: list[int]) -> None:
        k = len(idx)
        if k <= recursion_threshold(d):
            leaves.append(idx)
            return
        q = k // 4
        head = k - 3 * q
        s0, s1, s2, s3 = idx[:head], idx[head:head + q], idx[head + q:head + 2 * q], idx[head + 2 * q:]
        rec(s0 + s2 + s3)
        rec(s0 + s1 + s3)
        rec(s0 + s1 + s2)

    rec(list(range(n)))
    mat = np.zeros((len(leaves), n), dtype=np.int32)
    for r, idx in enumerate(leaves):
        np.add.at(mat[r], idx, 1)
    mat.setflags(write=False)
    return mat


def predict_batch(spec: LearnerSpec, hclass: HypothesisClass,
                  points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Predictions ``(trials, d)`` of a deterministic learner for a batch of training sets."""
    kind = spec.base.kind
    d = hclass.d
    batch = points.shape[0]
    if kind == "erm":
        c0, c1 = _counts(points, labels, d)
        if hclass.is_full:
            return (c1 > c0).astype(np.int8)
        return hclass.matrix[_erm_indices(hclass, c0, c1)]
    if kind == "constant":
        row = np.asarray(hclass.nearest([spec.base.bit] * d).labels, dtype=np.int8)
        return np.broadcast_to(row, (batch, d)).copy()
    if kind == "majority_of_erms":
        leaves = leaf_membership(points.shape[1], d).astype(np.float64)
        n_leaves, m = leaves.shape
        onehot = (points[..., None] == np.arange(d)).astype(np.float64)
        ones = onehot * (labels[..., None] == 1)

        def per_leaf(x: np.ndarray) -> np.ndarray:
            # (b, m, d) -> (b, leaves, d); float64 matmul is exact for these counts
            y = leaves @ x.transpose(1, 0, 2).reshape(m, batch * d)
            return np.rint(y).astype(np.int64).reshape(n_leaves, batch, d).transpose(1, 0, 2)

        c1 = per_leaf(ones)
        c0 = per_leaf(onehot) - c1
        if hclass.is_full:
            votes = (c1 > c0).sum(axis=1)
        else:
            idx = _erm_indices(hclass, c0.reshape(-1, d), c1.reshape(-1, d))
            votes = hclass.matrix[idx].reshape(batch, n_leaves, d).astype(np.int64).sum(axis=1)
        vector = (2 * votes > n_leaves).astype(np.int8)
        if hclass.is_full:
            return vector
        dist = np.abs(vector[:, None, :] - hclass.matrix[None, :, :]).sum(axis=2)
        return hclass.matrix[np.argmin(dist, axis=1)]
    raise ConfigError(f"learner {spec} has no batched kernel")


def has_batch_kernel(spec: LearnerSpec) -> bool:
    return spec.base.kind in ("erm", "constant", "majority_of_erms")
