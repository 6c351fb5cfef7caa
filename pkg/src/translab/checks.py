"""Exhaustive verification of the binomial-ratio inequalities and the numeric constants in the proofs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .core import DomainError

LEMMA_N_MAX = 500
_FLOAT_MARGIN = 1e-9


# --------------------------------------------------------------------------
# binomial ratio C(n-i, k-i) / C(n, k)

@dataclass(frozen=True)
class LemmaRow:
    n: int
    k: int
    i: int
    ratio: float
    lower_max: float
    exp_term: float
    upper_min: float


@dataclass(frozen=True)
class LemmaViolation:
    n: int
    k: int
    i: int
    inequality: str


@dataclass
class LemmaReport:
    n_max: int
    checked: int = 0
    violations: list[LemmaViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _pow_ge(num_a: int, den_a: int, exp_a: int, num_b: int, den_b: int, exp_b: int) -> bool:
    """``(num_a/den_a)**exp_a >= (num_b/den_b)**exp_b`` for nonnegative integers."""
    return num_a ** exp_a * den_b ** exp_b >= num_b ** exp_b * den_a ** exp_a


def _log_lower_terms(n: int, k: int, i: int) -> tuple[float, float]:
    a = i * math.log((k - i + 1) / (n - i + 1))
    b = (n - k) * math.log((k + 1 - i) / (k + 1))
    return a, b


def _lower_max_ge_exp(n: int, k: int, i: int) -> bool:
    a, b = _log_lower_terms(n, k, i)
    e = -(n - k) * i / (k - i + 1)
    gap = max(a, b) - e
    if abs(gap) > _FLOAT_MARGIN * max(1.0, abs(e)):
        return gap > 0
    with mpmath.workdps(60):
        a = i * mpmath.log(mpmath.mpf(k - i + 1) / (n - i + 1))
        b = (n - k) * mpmath.log(mpmath.mpf(k + 1 - i) / (k + 1))
        e = -mpmath.mpf((n - k) * i) / (k - i + 1)
        return max(a, b) >= e


def lemma_row(n: int, k: int, i: int) -> LemmaRow:
    """Float view of the ratio and its bounds (for reporting)."""
    if not 0 <= i <= k <= n:
        raise DomainError(f"need 0 <= i <= k <= n, got n={n}, k={k}, i={i}")
    if i == 0 or n == k:
        # every bound is an empty product
        ratio = float(Fraction(math.comb(n - i, k - i), math.comb(n, k)))
        return LemmaRow(n, k, i, ratio, 1.0, 1.0, 1.0)
    ratio = float(Fraction(math.comb(n - i, k - i), math.comb(n, k)))
    a, b = _log_lower_terms(n, k, i)
    u1 = i * math.log(k / n) if k else -math.inf
    u2 = (n - k) * math.log((n - i) / n) if n > i else -math.inf
    return LemmaRow(n, k, i, ratio, math.exp(max(a, b)), math.exp(-(n - k) * i / (k - i + 1)),
                    math.exp(min(u1, u2)))


def verify_lemma_binomial_ratio(n_max: int) -> LemmaReport:
    """Check, for all ``0 <= i <= k <= n <= n_max``, with exact integer arithmetic:

    ratio >= max{(1 - (n-k)/(n-i+1))^i, (1 - i/(k+1))^(n-k)} >= exp(-(n-k) i / (k-i+1))
    ratio <= min{(1 - (n-k)/n)^i, (1 - i/n)^(n-k)}
    """
    if not 0 <= n_max <= LEMMA_N_MAX:
        raise DomainError(f"n_max must lie in [0, {LEMMA_N_MAX}], got {n_max}")
    report = LemmaReport(n_max)
    bad = report.violations.append
    for n in range(n_max + 1):
        row = [math.comb(n, k) for k in range(n + 1)]
        for k in range(n + 1):
            cnk = row[k]
            for i in range(k + 1):
                report.checked += 1
                if i == 0 or n == k:
                    continue    # ratio is 1 and every bound is 1
                top = math.comb(n - i, k - i)
                # ratio = top / cnk; compare against (p/q)^e as top * q^e vs cnk * p^e
                l1 = _pow_ge(top, cnk, 1, k - i + 1, n - i + 1, i)
                l2 = _pow_ge(top, cnk, 1, k + 1 - i, k + 1, n - k)
                if not l1 and not l2:
                    bad(LemmaViolation(n, k, i, "ratio >= lower_max"))
                if not _lower_max_ge_exp(n, k, i):
                    bad(LemmaViolation(n, k, i, "lower_max >= exp_term"))
                u1 = _pow_ge(k, n, i, top, cnk, 1)
                u2 = _pow_ge(n - i, n, n - k, top, cnk, 1)
                if not (u1 and u2):
                    bad(LemmaViolation(n, k, i, "ratio <= upper_min"))
    return report


# --------------------------------------------------------------------------
# proof constants

@dataclass(frozen=True)
class ConstantCheck:
    name: str
    lhs: float
    rhs: float
    relation: str
    passed: bool


def _rational(name: str, lhs: Fraction, relation: str, rhs: Fraction) -> ConstantCheck:
    ok = {">": lhs > rhs, ">=": lhs >= rhs, "<=": lhs <= rhs, "=": lhs == rhs}[relation]
    return ConstantCheck(name, float(lhs), float(rhs), relation, ok)


def _real(name: str, lhs, relation: str, rhs) -> ConstantCheck:
    ok = {">": lhs > rhs, ">=": lhs >= rhs, "<=": lhs <= rhs}[relation]
    return ConstantCheck(name, float(lhs), float(rhs), relation, bool(ok))


def verify_proof_constants() -> list[ConstantCheck]:
    """Re-evaluate each standalone numeric inequality of the lower-bound proofs."""
    F = Fraction
    out = [
        _rational("6/(21^2+6) = 6/447", F(6, 21 ** 2 + 6), "=", F(6, 447)),
        _rational("6/447 > 1/75", F(6, 447), ">", F(1, 75)),
        _rational("(1/2)(1/75) = 1/150", F(1, 2) * F(1, 75), "=", F(1, 150)),
        _rational("2/7 + 2/3 = 20/21", F(2, 7) + F(2, 3), "=", F(20, 21)),
        _rational("1/8 + 14/32 <= 1", F(1, 8) + F(14, 32), "<=", F(1)),
        _rational("7/(1/2 - 1/16) = 16", 7 / (F(1, 2) - F(1, 16)), "=", F(16)),
        _rational("16 eps <= 1/2 at eps = 1/32", 16 * F(1, 32), "<=", F(1, 2)),
        _rational("16/(1 - 16/32) = 32", F(16) / (1 - F(16, 32)), "=", F(32)),
        _rational("1 - 1/(1 + (2 - 4/3)^2) = 4/13", 1 - 1 / (1 + (2 - F(4, 3)) ** 2), "=", F(4, 13)),
        _rational("1 - 1/(1 + (2 - 4/3)^2) > 3/10", 1 - 1 / (1 + (2 - F(4, 3)) ** 2), ">", F(3, 10)),
        _rational("(1/3)(3/10) = 1/10", F(1, 3) * F(3, 10), "=", F(1, 10)),
        _rational("1/2 - 7/16 = 1/16", F(1, 2) - F(7, 16), "=", F(1, 16)),
        _rational("(1/2)(1/2) = 1/4", F(1, 2) * F(1, 2), "=", F(1, 4)),
    ]
    with mpmath.workdps(50):
        half_gap = (1 - mpmath.sqrt(1 / (4 * mpmath.pi))) / 2
        out.append(_real("(1/2)(1 - sqrt(1/(4 pi))) > 1/3", half_gap, ">", mpmath.mpf(1) / 3))
        power = (mpmath.e ** -1 * mpmath.mpf(7) / 16) ** (mpmath.mpf(9) / 8)
        out.append(_real("(e^-1 7/16)^(9/8) > 1/8", power, ">", mpmath.mpf(1) / 8))
    return out
