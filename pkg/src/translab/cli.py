"""``translab``: run named bound-vs-simulation scenarios and write CSV or JSON lines.

Each scenario expands to parameter points; every point yields rows pairing
an estimate (Monte Carlo, exact, or a checked quantity) with a bound value
and a pass/fail verdict.  Lower bounds pass when ``estimate + 3 stderr``
reaches the bound, upper bounds when ``estimate - 3 stderr`` stays below
it.  Inapplicable bounds are reported with ``applicable=false`` and pass
vacuously.

Exit status: 0 all verdicts pass, 1 some verdict fails, 2 bad configuration,
3 exact search too large.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import bounds
from .checks import lemma_row, verify_lemma_binomial_ratio, verify_proof_constants
from .core import ConfigError, DomainError, ExperimentConfig, ResourceError, as_fraction
from .estimators import (InstanceFamily, McEstimate, exact_expected_error_erm_tlsi, mc_error_probability,
                         mc_exceedance, mc_expected_error, rate_fit, ssl_vs_sl_experiment)
from .instances import (DiscreteDistribution, PopulationSpec, all_labelings, tlsi_hard_counts_expect,
                        tlsi_hard_counts_prob)
from .learners import ERM, MAJORITY, LearnerSpec

SCHEMA_LINE = "# schema=1"
COLUMNS = ("scenario", "d", "m", "u", "epsilon", "delta", "trials", "seed", "estimate", "ci_low", "ci_high",
           "bound_name", "bound_value", "applicable", "verdict")
SLACK = 3.0

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class Row:
    scenario: str
    params: dict
    estimate: float | None
    ci_low: float | None
    ci_high: float | None
    bound_name: str
    bound_value: float | None
    applicable: bool
    verdict: bool

    def record(self) -> dict:
        p = self.params
        return {
            "scenario": self.scenario, "d": p.get("d"), "m": p.get("m"), "u": p.get("u"),
            "epsilon": p.get("epsilon"), "delta": p.get("delta"), "trials": p.get("trials"),
            "seed": p.get("seed"), "estimate": self.estimate, "ci_low": self.ci_low, "ci_high": self.ci_high,
            "bound_name": self.bound_name, "bound_value": self.bound_value,
            "applicable": self.applicable, "verdict": "pass" if self.verdict else "fail",
        }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, (float, Fraction)):
        return repr(float(x))
    return str(x)


def _json_value(x):
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def render(rows: list[Row], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(SCHEMA_LINE + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rows:
            rec = r.record()
            writer.writerow([_fmt(rec[c]) for c in COLUMNS])
    else:
        for r in rows:
            rec = {k: _json_value(v) for k, v in r.record().items()}
            buf.write(json.dumps({"schema": 1, **rec}) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# verdict helpers

def _lower_row(scenario, params, est: McEstimate | None, bound: bounds.BoundEvaluation) -> Row:
    if est is None:
        return Row(scenario, params, None, None, None, bound.name, bound.value, bound.applicable,
                   not bound.applicable)
    ok = (not bound.applicable) or est.mean + SLACK * est.stderr >= bound.value
    return Row(scenario, params, est.mean, est.ci_low, est.ci_high, bound.name, bound.value, bound.applicable, ok)


def _upper_row(scenario, params, est: McEstimate, name: str, value: float, applicable: bool) -> Row:
    ok = (not applicable) or est.mean - SLACK * est.stderr <= value
    return Row(scenario, params, est.mean, est.ci_low, est.ci_high, name, value, applicable, ok)


def _cfg(p: dict) -> ExperimentConfig:
    return ExperimentConfig(d=p["d"], m=p["m"], u=p["u"], epsilon=float(p.get("epsilon") or 0.0),
                            delta=float(p.get("delta") or 0.05), trials=p["trials"], master_seed=p["seed"])


def _learner(p: dict, default: LearnerSpec) -> LearnerSpec:
    spec = p.get("learner")
    if spec is None:
        return default
    if isinstance(spec, str) and spec.strip().startswith("{"):
        return LearnerSpec.from_json(spec)
    return LearnerSpec.from_dict(spec)


# --------------------------------------------------------------------------
# scenarios

def sc_tlsi_lower_prob(p: dict, threads: int) -> list[Row]:
    d, m, u, eps = p["d"], p["m"], p["u"], p["epsilon"]
    N = m + u
    learner = _learner(p, ERM)
    cfg = _cfg(p)
    st1, st2 = bounds.lower_prob_tlsi_statements(d, m, u, eps)
    rows = []
    for bound, override in ((st1, p.get("Delta")), (st2, N // m)):
        try:
            counts = tlsi_hard_counts_prob(N, d, eps, override)
        except DomainError:
            rows.append(_lower_row("tlsi-lower-prob", p, None, bound))
            continue
        est = mc_error_probability(learner, InstanceFamily.tlsi(counts), "TLSI", cfg, threads=threads)
        rows.append(_lower_row("tlsi-lower-prob", p, est, bound))
    return rows


def sc_tlsi_lower_expect(p: dict, threads: int) -> list[Row]:
    d, m, u = p["d"], p["m"], p["u"]
    learner = _learner(p, ERM)
    counts = tuple(p["i"]) if p.get("i") else tlsi_hard_counts_expect(m + u, d, m)
    family = InstanceFamily.tlsi(counts)
    est = mc_expected_error(learner, family, "TLSI", _cfg(p), threads=threads)
    rows = [_lower_row("tlsi-lower-expect", p, est, bounds.lower_expect_tlsi(d, m, u))]
    if learner.base.kind == "erm":
        exact = exact_expected_error_erm_tlsi(PopulationSpec((0,) * d, counts), m)
        ok = abs(est.mean - float(exact)) <= SLACK * est.stderr
        rows.append(Row("tlsi-lower-expect", p, est.mean, est.ci_low, est.ci_high, "erm_exact_expectation",
                        float(exact), True, ok))
    return rows


def sc_tlsii_lower_prob(p: dict, threads: int) -> list[Row]:
    d, m, u, eps = p["d"], p["m"], p["u"], p["epsilon"]
    learner = _learner(p, ERM)
    cfg = _cfg(p)
    st1, st2 = bounds.lower_prob_tlsii_statements(d, m, u, eps)
    rows = []
    for bound, mass in ((st1, Fraction(1, 2 * m)), (st2, 16 * as_fraction(eps) / (d - 1))):
        if not 0 < mass <= Fraction(1, d - 1):
            rows.append(_lower_row("tlsii-lower-prob", p, None, bound))
            continue
        family = InstanceFamily.tlsii([mass] * (d - 1) + [1 - (d - 1) * mass])
        est = mc_error_probability(learner, family, "TLSII", cfg, threads=threads)
        rows.append(_lower_row("tlsii-lower-prob", p, est, bound))
    return rows


def _p0_family(d: int, m: int) -> InstanceFamily:
    return InstanceFamily.tlsii([Fraction(1, m)] * (d - 1) + [1 - Fraction(d - 1, m)])


def sc_tlsii_lower_expect(p: dict, threads: int) -> list[Row]:
    d, m = p["d"], p["m"]
    est = mc_expected_error(_learner(p, ERM), _p0_family(d, m), "TLSII", _cfg(p), threads=threads)
    return [_lower_row("tlsii-lower-expect", p, est, bounds.lower_expect_tlsii(d, m))]


def sc_erm_upper_tlsi(p: dict, threads: int) -> list[Row]:
    d, m, u, delta = p["d"], p["m"], p["u"], p["delta"]
    learner = _learner(p, ERM)
    family = InstanceFamily.tlsi(tuple(p["i"]) if p.get("i") else tlsi_hard_counts_expect(m + u, d, m))
    cfg = _cfg(p)
    prob, expect = bounds.erm_upper_tlsi(d, m, u, delta)
    corrected = bounds.erm_upper_tlsi_corrected(d, m, u, delta)
    rows = []
    for b in (prob, corrected):
        freq = mc_exceedance(learner, family, cfg, b.value, threads=threads)
        rows.append(_upper_row("erm-upper-tlsi", p, freq, f"P(err>{b.name})", delta, b.applicable))
    est = mc_expected_error(learner, family, "TLSI", cfg, threads=threads)
    rows.append(_upper_row("erm-upper-tlsi", p, est, expect.name, expect.value, expect.applicable))
    return rows


def sc_erm_upper_tlsii(p: dict, threads: int) -> list[Row]:
    d, m, u, delta = p["d"], p["m"], p["u"], p["delta"]
    learner = _learner(p, ERM)
    family = _p0_family(d, m)
    cfg = _cfg(p)
    res = bounds.erm_upper_tlsii(d, m, u, delta)
    rows = []
    for b in (res.prob_direct, res.prob_via_reduction):
        freq = mc_exceedance(learner, family, cfg, b.value, threads=threads)
        rows.append(_upper_row("erm-upper-tlsii", p, freq, f"P(err>{b.name})", delta, b.applicable))
    est = mc_expected_error(learner, family, "TLSII", cfg, threads=threads)
    rows.append(_upper_row("erm-upper-tlsii", p, est, res.expect.name, res.expect.value, res.expect.applicable))
    return rows


def sc_hanneke_upper(p: dict, threads: int) -> list[Row]:
    d, m, u, delta = p["d"], p["m"], p["u"], p["delta"]
    learner = _learner(p, MAJORITY)
    family = _p0_family(d, m)
    cfg = _cfg(p)
    prob, expect = bounds.hanneke_upper_tlsii(d, m, u, delta, float(p.get("C", 1.0)))
    freq = mc_exceedance(learner, family, cfg, prob.value, threads=threads)
    est = mc_expected_error(learner, family, "TLSII", cfg, threads=threads)
    return [_upper_row("hanneke-upper", p, freq, f"P(err>{prob.name})", delta, prob.applicable),
            _upper_row("hanneke-upper", p, est, expect.name, expect.value, expect.applicable)]


def sc_ssl_chain(p: dict, threads: int) -> list[Row]:
    d, m, u = p["d"], p["m"], p["u"]
    masses = [as_fraction(w) for w in p["masses"]] if p.get("masses") else [Fraction(1, d)] * d
    family = [DiscreteDistribution(tuple((j, b[j], masses[j]) for j in range(d)), d) for b in all_labelings(d)]
    res = ssl_vs_sl_experiment(d, m, u, family)
    rows = []
    if res.m_ii is not None:
        rows.append(Row("ssl-chain", p, float(res.m_ii), None, None, "m_ssl", float(res.m_ssl), True,
                        res.m_ii <= res.m_ssl))
    rows.append(Row("ssl-chain", p, float(res.m_ssl), None, None, "m_sl", float(res.m_sl), True,
                    res.m_ssl <= res.m_sl))
    return rows


def sc_lemma_verify(p: dict, threads: int) -> list[Row]:
    n_max = int(p.get("n_max", 150))
    report = verify_lemma_binomial_ratio(n_max)
    failed = {(v.n, v.k, v.i) for v in report.violations}
    rows = []
    for n in range(n_max + 1):
        for k in range(n + 1):
            for i in range(k + 1):
                r = lemma_row(n, k, i)
                rows.append(Row("lemma-verify", {}, r.ratio, r.lower_max, r.upper_min,
                                f"lemma(n={n},k={k},i={i})", r.exp_term, True, (n, k, i) not in failed))
    return rows


def sc_rate_sweep(p: dict, threads: int) -> list[Row]:
    d = p["d"]
    learner = _learner(p, ERM)
    ms = [int(x) for x in p.get("ms", (16, 32, 64, 128))]
    rows, points = [], []
    for j, m in enumerate(ms):
        q = dict(p, m=m, u=m, seed=p["seed"] + j)
        est = mc_expected_error(learner, _p0_family(d, m), "TLSII", _cfg(q), threads=threads)
        points.append((m, est.mean))
        rows.append(_lower_row("rate-sweep", q, est, bounds.lower_expect_tlsii(d, m)))
    slope, _, r2 = rate_fit(points)
    lo, hi = p.get("slope_range", (-1.3, -0.8))
    rows.append(Row("rate-sweep", dict(p, m=None, u=None), slope, lo, hi, "rate_slope", -1.0, True, lo <= slope <= hi))
    rows.append(Row("rate-sweep", dict(p, m=None, u=None), r2, None, None, "rate_r2_min", 0.98, True, r2 >= 0.98))
    return rows


def sc_cm06_flaw(p: dict, threads: int) -> list[Row]:
    m, u, eps = p["m"], p["u"], p["epsilon"]
    res = bounds.cm06_flaw_check(m, u, eps)
    consistent = res.holds == (float(eps) >= res.threshold)
    return [Row("cm06-flaw", p, res.lhs, None, None, "cm06_rhs", res.rhs, True, consistent),
            Row("cm06-flaw", p, float(res.holds), None, None, "cm06_threshold", res.threshold, True, consistent)]


def sc_proof_constants(p: dict, threads: int) -> list[Row]:
    return [Row("proof-constants", {}, c.lhs, None, None, f"{c.name}", c.rhs, True, c.passed)
            for c in verify_proof_constants()]


SCENARIOS: dict[str, tuple[Callable, dict]] = {
    "tlsi-lower-prob": (sc_tlsi_lower_prob, dict(d=8, m=64, u=64, epsilon=Fraction(1, 1024), trials=10_000)),
    "tlsi-lower-expect": (sc_tlsi_lower_expect, dict(d=5, m=16, u=48, trials=100_000)),
    "tlsii-lower-prob": (sc_tlsii_lower_prob, dict(d=5, m=16, u=64, epsilon=Fraction(1, 256), trials=10_000)),
    "tlsii-lower-expect": (sc_tlsii_lower_expect, dict(d=5, m=16, u=64, trials=100_000)),
    "erm-upper-tlsi": (sc_erm_upper_tlsi, dict(d=4, m=256, u=256, trials=10_000)),
    "erm-upper-tlsii": (sc_erm_upper_tlsii, dict(d=4, m=256, u=256, trials=10_000)),
    "hanneke-upper": (sc_hanneke_upper, dict(d=4, m=64, u=64, trials=10_000, C=1.0)),
    "ssl-chain": (sc_ssl_chain, dict(d=2, m=2, u=2, trials=None, seed=None, delta=None)),
    "lemma-verify": (sc_lemma_verify, dict(n_max=150)),
    "rate-sweep": (sc_rate_sweep, dict(d=4, trials=20_000)),
    "cm06-flaw": (sc_cm06_flaw, dict(m=100, u=100, epsilon=Fraction(1, 100), trials=None, seed=None, delta=None)),
    "proof-constants": (sc_proof_constants, {}),
}
COMMON_DEFAULTS = dict(delta=0.05, seed=0)
NUMERIC_KEYS = ("d", "m", "u", "trials", "seed", "n_max", "Delta")


def _normalize(point: dict) -> dict:
    out = dict(point)
    for key in NUMERIC_KEYS:
        if out.get(key) is not None:
            out[key] = int(out[key])
    for key in ("epsilon", "delta"):
        if out.get(key) is not None:
            # keep strings like "1/1024" exact; the column shows the float value
            out[key] = float(as_fraction(out[key])) if not isinstance(out[key], Fraction) else out[key]
    return out


def resolve_points(scenario: str, config: dict, overrides: dict) -> list[dict]:
    """Scenario defaults, then the config file, then the point list, then flags."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; known: {', '.join(SCENARIOS)}")
    _, defaults = SCENARIOS[scenario]
    base = {**COMMON_DEFAULTS, **defaults, **{k: v for k, v in config.items() if k not in ("points", "scenario")}}
    points = config.get("points") or [{}]
    if not isinstance(points, list):
        raise ConfigError("config 'points' must be a list of objects")
    return [_normalize({**base, **pt, **overrides}) for pt in points]


def run_scenario(scenario: str, points: list[dict], threads: int = 1) -> list[Row]:
    fn, _ = SCENARIOS[scenario]
    rows: list[Row] = []
    for p in points:
        rows.extend(fn(p, threads))
    return rows


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="translab", description=__doc__.split("\n")[0])
    ap.add_argument("--scenario", help="one of: " + ", ".join(SCENARIOS))
    ap.add_argument("--config", help="JSON file with parameters and an optional 'points' list")
    ap.add_argument("--d", type=int)
    ap.add_argument("--m", type=int)
    ap.add_argument("--u", type=int)
    ap.add_argument("--epsilon", help="number or fraction such as 1/1024")
    ap.add_argument("--delta", help="number or fraction")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--learner", help="learner kind or JSON spec, e.g. majority_of_erms")
    ap.add_argument("--bounds-batch", metavar="PATH", help="evaluate bounds for a JSON array of points and exit")
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.bounds_batch:
            _emit(bounds.evaluate_batch_file(args.bounds_batch), args.out)
            return EXIT_OK
        config: dict = {}
        if args.config:
            with open(args.config) as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise ConfigError("config file must hold a JSON object")
        scenario = args.scenario or config.get("scenario")
        if not scenario:
            raise ConfigError("no scenario given (use --scenario or a 'scenario' key in --config)")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        overrides = {k: getattr(args, k) for k in ("d", "m", "u", "epsilon", "delta", "trials", "seed", "learner")
                     if getattr(args, k) is not None}
        points = resolve_points(scenario, config, overrides)
        rows = run_scenario(scenario, points, args.threads)
    except ResourceError as exc:
        print(f"translab: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, DomainError, KeyError, ValueError, OSError) as exc:
        print(f"translab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(render(rows, args.format), args.out)
    return EXIT_OK if all(r.verdict for r in rows) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
