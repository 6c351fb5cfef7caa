"""Binomial, hypergeometric and multinomial kernels plus the tail facts used in the lower-bound arguments.

Small cases (n <= 60) are computed with exact integer binomial
coefficients; larger ones go through log-gamma.  Probabilities that may
underflow are carried as :class:`LogWeight`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .core import DomainError, draw_atoms
from .rng import CounterRNG

EXACT_CAP = 60


@dataclass(frozen=True, order=True)
class LogWeight:
    """Natural log of a nonnegative weight; ``-inf`` is the zero element."""

    log: float

    @classmethod
    def of(cls, p) -> "LogWeight":
        p = float(p)
        if p < 0:
            raise DomainError(f"weight must be nonnegative, got {p}")
        return cls(math.log(p) if p > 0 else -math.inf)

    @property
    def value(self) -> float:
        return math.exp(self.log)

    def __float__(self) -> float:
        return self.value

    def __mul__(self, other: "LogWeight") -> "LogWeight":
        return LogWeight(self.log + other.log)

    def __add__(self, other: "LogWeight") -> "LogWeight":
        return logsumexp([self, other])


LogWeight.ZERO = LogWeight(-math.inf)


def logsumexp(weights: Iterable[LogWeight]) -> LogWeight:
    logs = [w.log for w in weights]
    if not logs:
        return LogWeight.ZERO
    top = max(logs)
    if top == -math.inf:
        return LogWeight.ZERO
    return LogWeight(top + math.log(math.fsum(math.exp(x - top) for x in logs)))


def log_comb(n: int, k: int) -> float:
    if not 0 <= k <= n:
        return -math.inf
    if n <= EXACT_CAP:
        return math.log(math.comb(n, k))
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


# --------------------------------------------------------------------------
# binomial

def binomial_pmf(n: int, p: float, k: int) -> LogWeight:
    if not 0 <= k <= n:
        raise DomainError(f"binomial pmf needs 0 <= k <= n, got k={k}, n={n}")
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    p = float(p)
    if p == 0.0:
        return LogWeight(0.0 if k == 0 else -math.inf)
    if p == 1.0:
        return LogWeight(0.0 if k == n else -math.inf)
    return LogWeight(log_comb(n, k) + k * math.log(p) + (n - k) * math.log1p(-p))


def binomial_pmf_exact(n: int, p: Fraction, k: int) -> Fraction:
    if not 0 <= k <= n:
        raise DomainError(f"binomial pmf needs 0 <= k <= n, got k={k}, n={n}")
    p = Fraction(p)
    return math.comb(n, k) * p ** k * (1 - p) ** (n - k)


def binomial_tail(n: int, p: float, k: int) -> float:
    """P{Binom(n, p) >= k}."""
    if k > n:
        raise DomainError(f"binomial tail needs k <= n, got k={k}, n={n}")
    k = max(k, 0)
    return min(1.0, logsumexp(binomial_pmf(n, p, j) for j in range(k, n + 1)).value)


# --------------------------------------------------------------------------
# hypergeometric

def _check_hypergeometric(N: int, K: int, u: int) -> None:
    if not (0 <= K <= N and 0 <= u <= N):
        raise DomainError(f"hypergeometric parameters need 0 <= K, u <= N; got N={N}, K={K}, u={u}")


def hypergeometric_pmf_exact(N: int, K: int, u: int, k: int) -> Fraction:
    """P{k successes in u draws without replacement from N items, K of them successes}."""
    _check_hypergeometric(N, K, u)
    if not 0 <= k <= min(K, u):
        raise DomainError(f"k={k} outside [0, min(K, u)] = [0, {min(K, u)}]")
    return Fraction(math.comb(K, k) * math.comb(N - K, u - k), math.comb(N, u))


def hypergeometric_pmf(N: int, K: int, u: int, k: int) -> LogWeight:
    _check_hypergeometric(N, K, u)
    if not 0 <= k <= min(K, u):
        raise DomainError(f"k={k} outside [0, min(K, u)] = [0, {min(K, u)}]")
    if N <= EXACT_CAP:
        q = hypergeometric_pmf_exact(N, K, u, k)
        return LogWeight(math.log(q) if q else -math.inf)
    return LogWeight(log_comb(K, k) + log_comb(N - K, u - k) - log_comb(N, u))


@lru_cache(maxsize=64)
def _log_factorials(n: int) -> np.ndarray:
    out = gammaln(np.arange(n + 1) + 1.0)
    out.flags.writeable = False
    return out


def hypergeometric_pmf_array(N: int, K, u, k) -> np.ndarray:
    """Vectorized log-gamma pmf; entries outside the support are 0."""
    K, u, k = np.broadcast_arrays(np.asarray(K), np.asarray(u), np.asarray(k))
    valid = (k >= 0) & (k <= K) & (u - k >= 0) & (u - k <= N - K)
    kc, uc, Kc = np.where(valid, k, 0), np.where(valid, u, 0), np.where(valid, K, 0)
    lf = _log_factorials(N)

    def lc(a, b):
        return lf[a] - lf[b] - lf[a - b]

    logp = lc(Kc, kc) + lc(N - Kc, uc - kc) - lc(N, uc)
    return np.where(valid, np.exp(logp), 0.0)


def hypergeometric_moments(N: int, K: int, u: int) -> tuple[float, float]:
    """Mean ``uK/N`` and variance ``uK(N-K)(N-u) / (N^2 (N-1))``."""
    _check_hypergeometric(N, K, u)
    if N == 0:
        raise DomainError("hypergeometric law needs N >= 1")
    mean = u * K / N
    if N == 1:
        return mean, 0.0
    var = u * K * (N - K) * (N - u) / (N * N * (N - 1))
    return mean, var


def hypergeometric_tail_exact(N: int, K: int, u: int, k: int) -> Fraction:
    """P{X >= k} for X ~ hypergeometric(N, K, u)."""
    _check_hypergeometric(N, K, u)
    lo = max(k, 0, u - (N - K))
    return sum((hypergeometric_pmf_exact(N, K, u, j) for j in range(lo, min(K, u) + 1)), Fraction(0))


# --------------------------------------------------------------------------
# multinomial

def multinomial_sample(probs: Sequence[float], n: int, rng: CounterRNG) -> np.ndarray:
    """Category counts of ``n`` iid draws; consumes ``n`` words of ``rng``."""
    p = np.asarray([float(x) for x in probs], dtype=np.float64)
    if (p < 0).any():
        raise DomainError("multinomial probabilities must be nonnegative")
    if abs(math.fsum(p) - 1.0) > 1e-12:
        raise DomainError(f"multinomial probabilities sum to {math.fsum(p)}, not 1")
    idx = draw_atoms(np.cumsum(p), rng.uniforms(n))
    return np.bincount(idx, minlength=len(p)).astype(np.int64)


# --------------------------------------------------------------------------
# tail facts

def chebyshev_cantelli(mean: float, variance: float, threshold: float) -> float:
    """Lower bound on P{X >= threshold} from the one-sided Chebyshev inequality.

    Only informative for ``threshold < mean``; returns 0 otherwise.
    """
    if variance < 0:
        raise DomainError(f"variance must be nonnegative, got {variance}")
    if threshold >= mean:
        return 0.0
    gap2 = (mean - threshold) ** 2
    return min(1.0, max(0.0, 1.0 - variance / (variance + gap2)))


@dataclass(frozen=True)
class CentralBinomialFacts:
    k: int
    at_least_half: Fraction      # P{Binom(2k, 1/2) >= k}
    central_pmf: Fraction        # P{Binom(2k, 1/2) = k}
    central_bound: float         # sqrt(1 / (4 pi k))

    @property
    def at_least_half_holds(self) -> bool:
        return self.at_least_half >= Fraction(1, 2)

    @property
    def central_bound_holds(self) -> bool:
        return float(self.central_pmf) <= self.central_bound


def binomial_central_facts(k: int) -> CentralBinomialFacts:
    """Exact central facts of Binom(2k, 1/2); the analytic bound is reported, not assumed."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    n = 2 * k
    total = 1 << n
    central = Fraction(math.comb(n, k), total)
    upper = Fraction(sum(math.comb(n, j) for j in range(k, n + 1)), total)
    return CentralBinomialFacts(k, upper, central, math.sqrt(1.0 / (4.0 * math.pi * k)))
