"""Points, labeled datasets, train/test splits and the test-error objective.

The input domain is always the finite set of ``d`` shattered points, so a
point is just its integer index and a labeled example is ``(index, bit)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .rng import CounterRNG


class DomainError(ValueError):
    """Operation called outside its mathematical domain."""


class ConfigError(ValueError):
    """Malformed experiment or learner configuration."""


class ResourceError(RuntimeError):
    """Exhaustive search would exceed the configured size cap."""


PointId = int


def as_fraction(x) -> Fraction:
    """Exact rational view of a number; floats go through their shortest repr (0.1 -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(repr(float(x)))


class LabeledExample(NamedTuple):
    point: PointId
    label: int


@dataclass(frozen=True)
class Dataset:
    """Ordered multiset of labeled examples."""

    items: tuple[LabeledExample, ...] = ()

    def __post_init__(self):
        items = tuple(LabeledExample(int(p), int(y)) for p, y in self.items)
        for p, y in items:
            if p < 0:
                raise DomainError(f"negative point id {p}")
            if y not in (0, 1):
                raise DomainError(f"label must be 0 or 1, got {y}")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, pairs: Iterable[Sequence[int]]) -> "Dataset":
        return cls(tuple(pairs))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Dataset(self.items[idx])
        return self.items[idx]

    def __add__(self, other: "Dataset") -> "Dataset":
        return Dataset(self.items + other.items)

    @property
    def points(self) -> tuple[PointId, ...]:
        """The unlabeled view (labels dropped, order kept)."""
        return tuple(p for p, _ in self.items)

    def take(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.items[i] for i in indices))

    def label_counts(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-point counts of label 0 and label 1, each of length ``d``."""
        c0 = np.zeros(d, dtype=np.int64)
        c1 = np.zeros(d, dtype=np.int64)
        for p, y in self.items:
            if p >= d:
                raise DomainError(f"point {p} outside domain of size {d}")
            (c1 if y else c0)[p] += 1
        return c0, c1

    def max_point(self) -> int:
        return max((p for p, _ in self.items), default=-1)


@dataclass(frozen=True)
class Split:
    """Permutation-induced partition: test = first ``u`` positions, train = the rest."""

    permutation: tuple[int, ...]
    m: int
    u: int

    def __post_init__(self):
        perm = tuple(int(i) for i in self.permutation)
        object.__setattr__(self, "permutation", perm)
        n = len(perm)
        if self.m < 1 or self.u < 1:
            raise DomainError(f"split needs m >= 1 and u >= 1, got m={self.m}, u={self.u}")
        if self.m + self.u != n:
            raise DomainError(f"m + u = {self.m + self.u} does not match permutation length {n}")
        if sorted(perm) != list(range(n)):
            raise DomainError("permutation is not a bijection on [0, N)")

    @property
    def N(self) -> int:
        return self.m + self.u

    @property
    def test_indices(self) -> tuple[int, ...]:
        return self.permutation[: self.u]

    @property
    def train_indices(self) -> tuple[int, ...]:
        return self.permutation[self.u:]

    def apply(self, pop: Dataset) -> tuple[Dataset, Dataset]:
        if len(pop) != self.N:
            raise DomainError(f"population has {len(pop)} items, split expects {self.N}")
        return pop.take(self.train_indices), pop.take(self.test_indices)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    m: int
    u: int
    epsilon: float = 0.0
    delta: float = 0.05
    trials: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.m < 1 or self.u < 1:
            raise ConfigError(f"m and u must be >= 1, got m={self.m}, u={self.u}")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.trials < 1:
            raise ConfigError(f"trials must be positive, got {self.trials}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    @property
    def N(self) -> int:
        return self.m + self.u

    @property
    def error_threshold(self) -> int:
        """Smallest mistake count ``k`` with ``k / u >= epsilon`` (exact)."""
        return _ceil_fraction(as_fraction(self.epsilon) * self.u)


def _ceil_fraction(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def empirical_error(h, data: Dataset) -> Fraction:
    """Fraction of ``data`` on which ``h`` disagrees with the label."""
    if len(data) == 0:
        raise DomainError("err undefined on empty test set")
    labels = h.labels
    d = len(labels)
    wrong = 0
    for p, y in data:
        if p >= d:
            raise DomainError(f"point {p} outside domain of size {d}")
        wrong += labels[p] != y
    return Fraction(wrong, len(data))


def split_without_replacement(pop: Dataset, m: int, rng: CounterRNG) -> tuple[Dataset, Dataset]:
    """Uniform random (train, test) partition with ``|train| = m``.

    Consumes ``len(pop)`` words of ``rng``.
    """
    n = len(pop)
    if not 1 <= m < n:
        raise DomainError(f"need 1 <= m < |pop|, got m={m}, |pop|={n}")
    split = Split(tuple(rng.permutation(n).tolist()), m, n - m)
    return split.apply(pop)


def sample_iid(P, n: int, rng: CounterRNG) -> Dataset:
    """``n`` independent draws from a discrete labeled law (consumes ``n`` words)."""
    total = sum(mass for _, _, mass in P.atoms)
    if abs(float(total) - 1.0) > 1e-12:
        raise DomainError(f"distribution masses sum to {float(total)}, not 1")
    idx = draw_atoms(P.cdf(), rng.uniforms(n))
    atoms = P.atoms
    return Dataset(tuple((atoms[i][0], atoms[i][1]) for i in idx.tolist()))


def draw_atoms(cdf: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF lookup; zero-mass atoms are never returned."""
    idx = np.searchsorted(cdf, uniforms, side="right")
    last = int(np.flatnonzero(np.diff(np.concatenate(([0.0], cdf))) > 0)[-1])
    return np.minimum(idx, last)


def is_realizable(data: Dataset, hclass) -> bool:
    """True iff some member of ``hclass`` labels every example correctly."""
    seen: dict[int, int] = {}
    for p, y in data:
        if seen.setdefault(p, y) != y:
            return False
    if data.max_point() >= hclass.d:
        return False
    return len(hclass.consistent_indices(data)) > 0
