"""Closed-form minimax lower bounds and ERM / majority-vote upper bounds.

Every evaluator returns a :class:`BoundEvaluation` carrying the value and
an applicability verdict built from the bound's hypotheses.  An
inapplicable bound is still evaluated (for diagnostics) and flagged; it is
never an error.  All logarithms are natural.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

from .core import DomainError, as_fraction

PROB, EXPECT, SAMPLE = "probability", "expectation", "sample_complexity"


@dataclass(frozen=True)
class BoundEvaluation:
    name: str
    setting: str
    kind: str            # "lower" | "upper"
    mode: str            # PROB | EXPECT | SAMPLE
    value: float
    applicable: bool
    failed_conditions: tuple[str, ...] = ()
    raw_value: float | None = None   # before clipping to [0, 1]

    def row(self) -> dict:
        return {
            "name": self.name, "setting": self.setting, "kind": self.kind, "mode": self.mode,
            "value": repr(float(self.value)), "applicable": str(self.applicable).lower(),
            "failed_conditions": ";".join(self.failed_conditions),
        }


def _make(name, setting, kind, mode, raw, failed: list[str]) -> BoundEvaluation:
    raw = float(raw)
    value = min(1.0, max(0.0, raw)) if mode in (PROB, EXPECT) else raw
    return BoundEvaluation(name, setting, kind, mode, value, not failed, tuple(failed), raw)


class _Conditions:
    def __init__(self):
        self.failed: list[str] = []

    def need(self, ok: bool, text: str) -> None:
        if not ok:
            self.failed.append(text)


def _inv(eps: float) -> float:
    return math.inf if eps <= 0 else 1.0 / eps


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


# --------------------------------------------------------------------------
# TLSI lower bounds

def lower_prob_tlsi_statements(d: int, m: int, u: int, epsilon: float) -> tuple[BoundEvaluation, BoundEvaluation]:
    eps = float(epsilon)
    c1 = _Conditions()
    c1.need(d >= 2, "d >= 2")
    c1.need(u >= m, "u >= m")
    c1.need(m >= 8 * (d - 1), "m >= 8(d-1)")
    c1.need(0 < eps <= 1 / 32, "0 < epsilon <= 1/32")
    const = 1 / 150 if d >= 7 else 1 / 4
    st1 = _make("tlsi_lower_prob_st1", "TLSI", "lower", PROB, const * math.exp(-32 * m * eps), c1.failed)

    c2 = _Conditions()
    c2.need(d >= 2, "d >= 2")
    c2.need(m >= max(9, 2 * (d - 1)), "m >= max(9, 2(d-1))")
    c2.need(m <= d * _inv(eps) / 24, "m <= d/(24 epsilon)")
    c2.need(m <= u, "m <= u")
    st2 = _make("tlsi_lower_prob_st2", "TLSI", "lower", PROB, 1 / 16, c2.failed)
    return st1, st2


def _best_of(name: str, setting: str, mode: str, statements: Iterable[BoundEvaluation]) -> BoundEvaluation:
    statements = list(statements)
    good = [s for s in statements if s.applicable]
    if good:
        best = max(good, key=lambda s: s.value)
        return BoundEvaluation(name, setting, "lower", mode, best.value, True, (), best.raw_value)
    failed = tuple(f"{s.name}: {c}" for s in statements for c in s.failed_conditions)
    value = max(s.value for s in statements)
    return BoundEvaluation(name, setting, "lower", mode, value, False, failed, value)


def lower_prob_tlsi(d: int, m: int, u: int, epsilon: float) -> BoundEvaluation:
    """Largest applicable minimax tail lower bound in setting I."""
    return _best_of("tlsi_lower_prob", "TLSI", PROB, lower_prob_tlsi_statements(d, m, u, epsilon))


def sample_complexity_lower_tlsi(d: int, epsilon: float, delta: float) -> BoundEvaluation:
    """Labeled-sample threshold below which every learner fails at confidence ``delta``."""
    eps, dl = float(epsilon), float(delta)
    c = _Conditions()
    c.need(0 < eps <= 1 / 32, "0 < epsilon <= 1/32")
    c.need(0 < dl <= 1 / 150, "0 < delta <= 1/150")
    value = max(_inv(eps) / 32 * math.log(1 / (150 * dl)), d * _inv(eps) / 24)
    return _make("tlsi_sample_complexity_lower", "TLSI", "lower", SAMPLE, value, c.failed)


def sample_complexity_lower_tlsi_theta(d: int, epsilon: float, delta: float) -> BoundEvaluation:
    """The averaged form ``log(1/(150 delta))/(64 eps) + d/(48 eps)`` (never above the max form)."""
    base = sample_complexity_lower_tlsi(d, epsilon, delta)
    eps = float(epsilon)
    value = _inv(eps) / 64 * math.log(1 / (150 * float(delta))) + d * _inv(eps) / 48
    return _make("tlsi_sample_complexity_lower_theta", "TLSI", "lower", SAMPLE, value, list(base.failed_conditions))


def lower_expect_tlsi(d: int, m: int, u: int) -> BoundEvaluation:
    c = _Conditions()
    c.need(d >= 2, "d >= 2")
    c.need(m >= 9, "m >= 9")
    c.need(m >= d - 1, "m >= d-1")
    c.need(m <= u, "m <= u")
    return _make("tlsi_lower_expect", "TLSI", "lower", EXPECT, (d - 1) / (16 * m), c.failed)


# --------------------------------------------------------------------------
# TLSII lower bounds

def lower_prob_tlsii_statements(d: int, m: int, u: int, epsilon: float) -> tuple[BoundEvaluation, BoundEvaluation]:
    eps = float(epsilon)
    c1 = _Conditions()
    c1.need(d >= 2, "d >= 2")
    c1.need(m >= max((d - 1) / 2, 10), "m >= max((d-1)/2, 10)")
    c1.need(m <= (d - 1) * _inv(eps) / 21, "m <= (d-1)/(21 epsilon)")
    c1.need(m <= u, "m <= u")
    st1 = _make("tlsii_lower_prob_st1", "TLSII", "lower", PROB, 1 / 80, c1.failed)

    c2 = _Conditions()
    c2.need(d >= 2, "d >= 2")
    c2.need(0 < eps <= 1 / 32, "0 < epsilon <= 1/32")
    c2.need(m >= d - 1, "m >= d-1")
    st2 = _make("tlsii_lower_prob_st2", "TLSII", "lower", PROB, math.exp(-32 * m * eps) / 18, c2.failed)
    return st1, st2


def lower_prob_tlsii(d: int, m: int, u: int, epsilon: float) -> BoundEvaluation:
    return _best_of("tlsii_lower_prob", "TLSII", PROB, lower_prob_tlsii_statements(d, m, u, epsilon))


def sample_complexity_lower_tlsii(d: int, epsilon: float, delta: float) -> BoundEvaluation:
    eps, dl = float(epsilon), float(delta)
    c = _Conditions()
    c.need(0 < eps <= 1 / 32, "0 < epsilon <= 1/32")
    c.need(0 < dl <= 1 / 80, "0 < delta <= 1/80")
    value = max(_inv(eps) / 32 * math.log(1 / (80 * dl)), (d - 1) * _inv(eps) / 21)
    return _make("tlsii_sample_complexity_lower", "TLSII", "lower", SAMPLE, value, c.failed)


def sample_complexity_lower_tlsii_theta(d: int, epsilon: float, delta: float) -> BoundEvaluation:
    base = sample_complexity_lower_tlsii(d, epsilon, delta)
    eps = float(epsilon)
    value = _inv(eps) / 64 * math.log(1 / (80 * float(delta))) + (d - 1) * _inv(eps) / 42
    return _make("tlsii_sample_complexity_lower_theta", "TLSII", "lower", SAMPLE, value, list(base.failed_conditions))


def lower_expect_tlsii(d: int, m: int) -> BoundEvaluation:
    c = _Conditions()
    c.need(d >= 2, "d >= 2")
    c.need(m >= d - 1, "m >= d-1")
    return _make("tlsii_lower_expect", "TLSII", "lower", EXPECT,
                 (d - 1) / (2 * math.e * m) * (1 - 1 / m), c.failed)


# --------------------------------------------------------------------------
# upper bounds

def _vc_tail_term(d: int, m: int, u: int, delta: float) -> float:
    N = m + u
    return 2 * (d * math.log(N * math.e / d) + math.log(1 / delta)) / m


def erm_upper_tlsi(d: int, m: int, u: int, delta: float) -> tuple[BoundEvaluation, BoundEvaluation]:
    """High-probability and in-expectation ERM bounds in setting I."""
    _check_delta(delta)
    c = _Conditions()
    c.need(d >= 2, "d >= 2")
    c.need(u >= 4, "u >= 4")
    c.need(u >= m, "u >= m")
    c.need(m >= d - 1, "m >= d-1")
    N = m + u
    prob = _make("erm_upper_tlsi_prob", "TLSI", "upper", PROB, _vc_tail_term(d, m, u, delta), c.failed)
    expect = _make("erm_upper_tlsi_expect", "TLSI", "upper", EXPECT,
                   (2 * d * math.log(N * math.e / d) + 2) / m, list(c.failed))
    return prob, expect


def erm_upper_tlsi_corrected(d: int, m: int, u: int, delta: float) -> BoundEvaluation:
    """Tail bound with the ``sqrt(2)/u`` floor that repairs the original derivation."""
    _check_delta(delta)
    c = _Conditions()
    c.need(u >= 4, "u >= 4")
    c.need(m <= u, "m <= u")
    value = max(_vc_tail_term(d, m, u, delta), math.sqrt(2) / u)
    return _make("erm_upper_tlsi_corrected", "TLSI", "upper", PROB, value, c.failed)


class ErmUpperTlsii(NamedTuple):
    prob_direct: BoundEvaluation
    prob_via_reduction: BoundEvaluation
    expect: BoundEvaluation
    ratio: float   # direct / reduction, raw values


def erm_upper_tlsii(d: int, m: int, u: int, delta: float) -> ErmUpperTlsii:
    _check_delta(delta)
    l2d = math.log(2 / delta)
    direct_raw = (6 * d * math.log(m) + 3 * l2d + 3 * math.log(2)) / (2 * m) + 5 * l2d / (3 * u)
    direct = _make("erm_upper_tlsii_prob_direct", "TLSII", "upper", PROB, direct_raw, [])

    c = _Conditions()
    c.need(d >= 2, "d >= 2")
    c.need(u >= 4, "u >= 4")
    c.need(u >= m, "u >= m")
    c.need(m >= d - 1, "m >= d-1")
    reduction_raw = _vc_tail_term(d, m, u, delta)
    reduction = _make("erm_upper_tlsii_prob_reduction", "TLSII", "upper", PROB, reduction_raw, c.failed)

    expect = _make("erm_upper_tlsii_expect", "TLSII", "upper", EXPECT,
                   (2 * d * math.log(2 * m) + 4) / (m * math.log(2)), [])
    return ErmUpperTlsii(direct, reduction, expect, direct_raw / reduction_raw)


def hanneke_upper_tlsii(d: int, m: int, u: int, delta: float, C: float) -> tuple[BoundEvaluation, BoundEvaluation]:
    """Majority-vote bounds with a caller-chosen constant ``C`` (only the order is known)."""
    if not C > 0:
        raise DomainError(f"constant C must be positive, got {C}")
    _check_delta(delta)
    l2d = math.log(2 / delta)
    prob = _make("hanneke_upper_tlsii_prob", "TLSII", "upper", PROB,
                 C * (d + l2d) / m + 5 * l2d / (3 * u), [])
    expect = _make("hanneke_upper_tlsii_expect", "TLSII", "upper", EXPECT, C * d / m, [])
    return prob, expect


# --------------------------------------------------------------------------
# relations and the original-derivation check

def ssl_relations(mII_expect: float, mII_prob_at_2eps: float, u: int, epsilon: float) -> tuple[float, float]:
    """Semi-supervised lower bounds implied by the setting-II minimax values."""
    return float(mII_expect), max(0.0, float(mII_prob_at_2eps) - math.exp(-2 * u * float(epsilon) ** 2))


@dataclass(frozen=True)
class Cm06Check:
    lhs: float
    rhs: float
    holds: bool
    threshold: float


def cm06_flaw_check(m: int, u: int, epsilon) -> Cm06Check:
    """Evaluate both sides of the exponent inequality used by the original ERM bound.

    Both sides are rational in ``epsilon`` and compared exactly; ``holds`` is
    true iff ``epsilon >= (sqrt(m+u+2) - 1)/u``.
    """
    if m < 1 or u < 1:
        raise DomainError(f"need m, u >= 1, got m={m}, u={u}")
    eps = as_fraction(epsilon) if not isinstance(epsilon, float) else Fraction(epsilon)
    if not 0 < eps <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {float(eps)}")
    N = m + u
    scale = Fraction(-1, 2) * Fraction(m * u, N) * eps ** 2
    factor = Fraction(N + 2) / (N - u * eps + 1) * (u * eps) / (u * eps + 1)
    lhs, rhs = scale * factor, scale
    threshold = (math.sqrt(N + 2) - 1) / u
    return Cm06Check(float(lhs), float(rhs), lhs <= rhs, threshold)


# --------------------------------------------------------------------------
# batch evaluation

CSV_COLUMNS = ("name", "setting", "kind", "mode", "value", "applicable", "failed_conditions")


def evaluate_point(point: dict) -> list[BoundEvaluation]:
    """Every bound whose parameters are present in ``point``."""
    d, m, u = point.get("d"), point.get("m"), point.get("u")
    eps, delta, C = (None if point.get(k) is None else float(as_fraction(point[k])) for k in ("epsilon", "delta", "C"))
    out: list[BoundEvaluation] = []
    if None not in (d, m, u, eps):
        out += [lower_prob_tlsi(d, m, u, eps), lower_prob_tlsii(d, m, u, eps)]
    if None not in (d, m, u):
        out.append(lower_expect_tlsi(d, m, u))
    if None not in (d, m):
        out.append(lower_expect_tlsii(d, m))
    if None not in (d, eps, delta):
        out += [sample_complexity_lower_tlsi(d, eps, delta), sample_complexity_lower_tlsi_theta(d, eps, delta),
                sample_complexity_lower_tlsii(d, eps, delta), sample_complexity_lower_tlsii_theta(d, eps, delta)]
    if None not in (d, m, u, delta):
        out += list(erm_upper_tlsi(d, m, u, delta))
        out.append(erm_upper_tlsi_corrected(d, m, u, delta))
        out += list(erm_upper_tlsii(d, m, u, delta)[:3])
        if C is not None:
            out += list(hanneke_upper_tlsii(d, m, u, delta, C))
    wanted = point.get("bounds")
    if wanted:
        out = [b for b in out if b.name in set(wanted)]
    return out


def evaluate_batch_csv(points: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for point in points:
        for b in evaluate_point(point):
            writer.writerow(b.row())
    return buf.getvalue()


def evaluate_batch_file(path: str) -> str:
    with open(path) as fh:
        points = json.load(fh)
    if not isinstance(points, list):
        raise DomainError("bounds batch input must be a JSON array of parameter objects")
    return evaluate_batch_csv(points)
