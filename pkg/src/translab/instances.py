"""Hard instance families for both transductive settings.

TLSI instances are populations holding ``i[j]`` copies of ``(x_j, b[j])``;
TLSII instances are point-mass laws putting mass ``p`` on each of the first
``d - 1`` labeled points and the remainder on the last one.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import Dataset, DomainError, Split, as_fraction
from .rng import CounterRNG

MAX_POPULATION = 1 << 48


@dataclass(frozen=True)
class PopulationSpec:
    b: tuple[int, ...]
    i: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(x) for x in self.b)
        i = tuple(int(x) for x in self.i)
        if len(b) != len(i) or not b:
            raise DomainError(f"b and i must have the same positive length, got {len(b)} and {len(i)}")
        if any(x not in (0, 1) for x in b):
            raise DomainError("b must be a bit vector")
        if any(x < 0 for x in i):
            raise DomainError("copy counts must be nonnegative")
        if sum(i) > MAX_POPULATION:
            raise DomainError(f"population size {sum(i)} exceeds 2**48")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "i", i)

    @property
    def d(self) -> int:
        return len(self.b)

    @property
    def N(self) -> int:
        return sum(self.i)

    def point_of_item(self) -> np.ndarray:
        """Point index of every population item, in block order."""
        return np.repeat(np.arange(self.d), self.i)

    def to_json(self) -> str:
        return json.dumps({"setting": "TLSI", "d": self.d, "b": list(self.b), "i": list(self.i)})


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite labeled law; ``atoms`` is a tuple of ``(point, label, mass)``."""

    atoms: tuple[tuple[int, int, Fraction], ...]
    d: int

    def __post_init__(self):
        atoms = tuple((int(x), int(y), as_fraction(w)) for x, y, w in self.atoms)
        if not atoms:
            raise DomainError("distribution needs at least one atom")
        if any(w < 0 for _, _, w in atoms):
            raise DomainError("masses must be nonnegative")
        if abs(float(sum(w for _, _, w in atoms)) - 1.0) > 1e-12:
            raise DomainError("masses must sum to 1")
        labels: dict[int, int] = {}
        for x, y, w in atoms:
            if not 0 <= x < self.d:
                raise DomainError(f"atom point {x} outside [0, {self.d})")
            if y not in (0, 1):
                raise DomainError("atom labels must be bits")
            if w > 0 and labels.setdefault(x, y) != y:
                raise DomainError(f"point {x} carries both labels; law is not realizable")
        object.__setattr__(self, "atoms", atoms)

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(w for _, _, w in self.atoms)

    def cdf(self) -> np.ndarray:
        return np.cumsum([float(w) for w in self.masses])

    def labeling(self) -> tuple[int, ...]:
        """Label of each point (0 for points without mass)."""
        out = [0] * self.d
        for x, y, w in self.atoms:
            if w > 0:
                out[x] = y
        return tuple(out)

    def point_masses(self) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * self.d
        for x, _, w in self.atoms:
            out[x] += w
        return tuple(out)

    def to_json(self) -> str:
        return json.dumps({
            "setting": "TLSII", "d": self.d,
            "b": [y for _, y, _ in self.atoms],
            "masses": [str(w) for w in self.masses],
        })


def instance_from_json(text: str):
    """Parse ``{"setting": "TLSI"|"TLSII", ...}``; TLSII accepts either ``p`` or explicit ``masses``."""
    obj = json.loads(text) if isinstance(text, str) else dict(text)
    setting = obj.get("setting")
    b = tuple(obj["b"])
    d = int(obj.get("d", len(b)))
    if setting == "TLSI":
        return PopulationSpec(b, tuple(obj["i"]))
    if setting == "TLSII":
        if "p" in obj:
            return tlsii_hard_distribution_p(d, as_fraction(obj["p"]), b)
        masses = [as_fraction(w) for w in obj["masses"]]
        return DiscreteDistribution(tuple((j, b[j], masses[j]) for j in range(len(b))), d)
    raise DomainError(f"unknown setting {setting!r}")


# --------------------------------------------------------------------------
# TLSI families

def tlsi_hard_counts_prob(N: int, d: int, epsilon, delta_override: int | None = None) -> tuple[int, ...]:
    """``(D, ..., D, N - (d-1) D)`` with ``D = ceil(7 N eps / (d-1))`` unless overridden."""
    if d < 2:
        raise DomainError(f"need d >= 2, got {d}")
    eps = as_fraction(epsilon)
    if delta_override is None:
        q = 7 * N * eps / (d - 1)
        rep = max(1, math.ceil(q))
    else:
        rep = int(delta_override)
    if rep < 0 or (d - 1) * rep > N:
        raise DomainError(f"hard-instance preconditions violated: (d-1)*Delta = {(d - 1) * rep} > N = {N}")
    return (rep,) * (d - 1) + (N - (d - 1) * rep,)


def tlsi_hard_counts_expect(N: int, d: int, m: int) -> tuple[int, ...]:
    """``(floor(N/m), ..., floor(N/m), N - (d-1) floor(N/m))``."""
    if d < 1:
        raise DomainError(f"need d >= 1, got {d}")
    if m < d - 1 or m < 1:
        raise DomainError(f"need m >= d - 1, got m={m}, d={d}")
    rep = N // m
    return (rep,) * (d - 1) + (N - (d - 1) * rep,)


def materialize_population(spec: PopulationSpec) -> Dataset:
    return Dataset(tuple((j, spec.b[j]) for j in range(spec.d) for _ in range(spec.i[j])))


def test_multiplicities(spec: PopulationSpec, split: Split) -> np.ndarray:
    """Copies of each point that land in the test side of ``split``."""
    if split.N != spec.N:
        raise DomainError(f"split covers {split.N} items, population has {spec.N}")
    owner = spec.point_of_item()
    return np.bincount(owner[list(split.test_indices)], minlength=spec.d).astype(np.int64)


test_multiplicities.__test__ = False  # not a pytest test despite the name


# --------------------------------------------------------------------------
# TLSII families

def tlsii_hard_distribution_p(d: int, p, b: Sequence[int]) -> DiscreteDistribution:
    """Mass ``p`` on each of ``(x_j, b_j)``, ``j < d-1``, and ``1 - (d-1)p`` on ``(x_{d-1}, b_{d-1})``."""
    if d < 2:
        raise DomainError(f"need d >= 2, got {d}")
    if len(b) != d:
        raise DomainError(f"b has length {len(b)}, expected {d}")
    p = as_fraction(p)
    if not 0 < p <= Fraction(1, d - 1):
        raise DomainError(f"need 0 < p <= 1/(d-1), got p={p}")
    masses = [p] * (d - 1) + [1 - (d - 1) * p]
    return DiscreteDistribution(tuple((j, int(b[j]), masses[j]) for j in range(d)), d)


def tlsii_hard_distribution_expect(d: int, m: int, b: Sequence[int]) -> DiscreteDistribution:
    """The law with mass ``1/m`` on each of the first ``d-1`` labeled points."""
    if m < d - 1:
        raise DomainError(f"need m >= d - 1, got m={m}, d={d}")
    return tlsii_hard_distribution_p(d, Fraction(1, m), b)


def random_labeling(d: int, rng: CounterRNG) -> tuple[int, ...]:
    """``d`` fair bits; consumes ``d`` words."""
    if d < 1:
        raise DomainError(f"need d >= 1, got {d}")
    return tuple(int(x) for x in rng.bits(d))


def all_labelings(d: int) -> list[tuple[int, ...]]:
    return [tuple((c >> (d - 1 - j)) & 1 for j in range(d)) for c in range(1 << d)]
