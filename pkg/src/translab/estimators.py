"""Monte Carlo error estimates and an exact minimax oracle for toy instances.

Each Monte Carlo trial reads its own counter-based stream, so the trial
outcomes do not depend on how trials are split across worker threads.
Outcomes are integer mistake counts, aggregated with exact integer sums.
"""
from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np
from scipy import stats

from .core import (ConfigError, Dataset, DomainError, ExperimentConfig, ResourceError, as_fraction, draw_atoms,
                   empirical_error, sample_iid, split_without_replacement)
from .hypothesis import Hypothesis, HypothesisClass, full_class
from .instances import DiscreteDistribution, PopulationSpec, materialize_population
from .learners import LearnerSpec, has_batch_kernel, leaf_membership, predict_batch, run_learner
from .prob import hypergeometric_pmf_exact
from .rng import CounterRNG, batch_words, stream_keys, words_to_bits, words_to_uniforms

CONFIDENCE = 0.99
SEARCH_CAP = 10 ** 7
SETTINGS = ("TLSI", "TLSII")


# --------------------------------------------------------------------------
# estimates

@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    trials: int
    master_seed: int
    kind: str = "expectation"      # or "probability"

    def to_record(self, estimator: str, learner, instance) -> dict:
        return {
            "estimator": estimator, "learner": str(learner), "instance": instance,
            "mean": self.mean, "ci": [self.ci_low, self.ci_high],
            "trials": self.trials, "seed": self.master_seed,
        }


def _z(confidence: float) -> float:
    return float(stats.norm.ppf(0.5 + confidence / 2))


def proportion_estimate(successes: int, trials: int, master_seed: int, interval: str = "wilson",
                        confidence: float = CONFIDENCE) -> McEstimate:
    n, k = trials, successes
    p = k / n
    stderr = math.sqrt(p * (1 - p) / n)
    if interval == "wilson":
        z = _z(confidence)
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        lo, hi = centre - half, centre + half
    elif interval == "clopper-pearson":
        a = 1 - confidence
        lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
        hi = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    else:
        raise ConfigError(f"unknown interval {interval!r}")
    return McEstimate(p, stderr, max(0.0, min(lo, p)), min(1.0, max(hi, p)), n, master_seed, "probability")


def mean_estimate(total: int, total_sq: int, scale: int, trials: int, master_seed: int,
                  confidence: float = CONFIDENCE) -> McEstimate:
    """Mean of ``x / scale`` from exact integer sums of ``x`` and ``x**2``."""
    n = trials
    mean = Fraction(total, n * scale)
    if n > 1:
        var = Fraction(total_sq * n - total * total, n * (n - 1) * scale * scale)
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    half = _z(confidence) * stderr
    m = float(mean)
    return McEstimate(m, stderr, m - half, m + half, n, master_seed, "expectation")


# --------------------------------------------------------------------------
# instance families

@dataclass(frozen=True)
class InstanceFamily:
    """Hard-instance family: fixed point weights, labels fixed or uniform per trial.

    ``counts`` are TLSI copy counts; ``masses`` are TLSII point masses.
    """
    setting: str
    d: int
    counts: tuple[int, ...] | None = None
    masses: tuple[Fraction, ...] | None = None
    b: tuple[int, ...] | None = None
    hclass: HypothesisClass | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise DomainError(f"unknown setting {self.setting!r}")
        if self.setting == "TLSI":
            if self.counts is None or len(self.counts) != self.d or any(c < 0 for c in self.counts):
                raise DomainError("TLSI family needs d nonnegative copy counts")
            object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        else:
            if self.masses is None or len(self.masses) != self.d:
                raise DomainError("TLSII family needs d point masses")
            masses = tuple(as_fraction(w) for w in self.masses)
            if any(w < 0 for w in masses) or sum(masses) != 1:
                raise DomainError("TLSII masses must be nonnegative and sum to 1")
            object.__setattr__(self, "masses", masses)
        if self.b is not None:
            if len(self.b) != self.d or any(x not in (0, 1) for x in self.b):
                raise DomainError("b must be a bit vector of length d")
            object.__setattr__(self, "b", tuple(int(x) for x in self.b))
        hc = self.hclass if self.hclass is not None else full_class(self.d)
        if hc.d != self.d:
            raise DomainError(f"class has d={hc.d}, family has d={self.d}")
        if self.b is None and not hc.is_full:
            raise DomainError("uniform labelings need the full class on the domain")
        if self.b is not None and Hypothesis(self.b) not in hc:
            raise DomainError("fixed labeling is not realizable by the class")
        object.__setattr__(self, "hclass", hc)

    @classmethod
    def tlsi(cls, counts: Sequence[int], b=None, hclass=None) -> "InstanceFamily":
        return cls("TLSI", len(counts), counts=tuple(counts), b=b, hclass=hclass)

    @classmethod
    def tlsii(cls, masses: Sequence, b=None, hclass=None) -> "InstanceFamily":
        return cls("TLSII", len(masses), masses=tuple(masses), b=b, hclass=hclass)

    @property
    def N(self) -> int | None:
        return sum(self.counts) if self.counts is not None else None

    def cdf(self) -> np.ndarray:
        return np.cumsum([float(w) for w in self.masses])

    def describe(self) -> dict:
        out: dict = {"setting": self.setting, "d": self.d,
                     "b": list(self.b) if self.b is not None else "uniform"}
        if self.counts is not None:
            out["i"] = list(self.counts)
        else:
            out["masses"] = [str(w) for w in self.masses]
        return out


def _check(learner: LearnerSpec, family: InstanceFamily, setting: str | None, cfg: ExperimentConfig) -> None:
    if setting is not None and setting != family.setting:
        raise ConfigError(f"setting {setting} does not match family setting {family.setting}")
    if cfg.d != family.d:
        raise ConfigError(f"config d={cfg.d} but family d={family.d}")
    if family.setting == "TLSI" and family.N != cfg.N:
        raise ConfigError(f"population has {family.N} items but m + u = {cfg.N}")
    if not isinstance(learner, LearnerSpec):
        raise ConfigError("learner must be a LearnerSpec")


# --------------------------------------------------------------------------
# trial kernels

def _chunk_size(learner: LearnerSpec, family: InstanceFamily, cfg: ExperimentConfig) -> int:
    size = max(1, min(4096, 2_000_000 // cfg.N))
    if learner.base.kind == "majority_of_erms":
        leaves = leaf_membership(cfg.m, family.d).shape[0]
        size = max(1, min(size, 4_000_000 // (leaves * family.d)))
    return size


def _mistakes_chunk(learner, family: InstanceFamily, cfg: ExperimentConfig, t0: int, t1: int) -> np.ndarray:
    d, m, u, N = family.d, cfg.m, cfg.u, cfg.N
    keys = stream_keys(cfg.master_seed, np.arange(t0, t1))
    rows = np.arange(t1 - t0)[:, None]
    label_words = batch_words(keys, 0, d)
    if family.b is None:
        b = words_to_bits(label_words).astype(np.int8)
    else:
        b = np.broadcast_to(np.asarray(family.b, dtype=np.int8), (t1 - t0, d))
    if family.setting == "TLSI":
        owner = np.repeat(np.arange(d), family.counts)
        perm = np.argsort(batch_words(keys, d, N), axis=1, kind="stable")
        pts = owner[perm]
        test_pts, train_pts = pts[:, :u], pts[:, u:]
    else:
        pts = draw_atoms(family.cdf(), words_to_uniforms(batch_words(keys, d, N)))
        train_pts, test_pts = pts[:, :m], pts[:, m:]
    train_labels = b[rows, train_pts]
    pred = predict_batch(learner, family.hclass, train_pts, train_labels)
    wrong = (pred != b).astype(np.int64)
    return wrong[rows, test_pts].sum(axis=1)


def _mistakes_trial(learner, family: InstanceFamily, cfg: ExperimentConfig, t: int) -> int:
    rng = CounterRNG(cfg.master_seed, t)
    words = rng.words(family.d)
    b = family.b if family.b is not None else tuple(int(x) for x in words_to_bits(words))
    if family.setting == "TLSI":
        pop = materialize_population(PopulationSpec(b, family.counts))
        train, test = split_without_replacement(pop, cfg.m, rng)
    else:
        dist = DiscreteDistribution(tuple((j, b[j], family.masses[j]) for j in range(family.d)), family.d)
        sample = sample_iid(dist, cfg.N, rng)
        train, test = sample[:cfg.m], sample[cfg.m:]
    h = run_learner(learner, family.hclass, train, test.points, rng)
    return int(empirical_error(h, test) * cfg.u)


def trial_mistakes(learner: LearnerSpec, family: InstanceFamily, cfg: ExperimentConfig,
                   threads: int = 1, vectorized: bool | None = None) -> np.ndarray:
    """Test-set mistake count of every trial, in trial order."""
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    fast = has_batch_kernel(learner) and not learner.randomized
    if vectorized is None:
        vectorized = fast
    elif vectorized and not fast:
        raise ConfigError(f"learner {learner} has no batched kernel")
    if vectorized:
        size = _chunk_size(learner, family, cfg)
        bounds = [(t, min(t + size, cfg.trials)) for t in range(0, cfg.trials, size)]

        def work(span):
            return _mistakes_chunk(learner, family, cfg, *span)
    else:
        size = 256
        bounds = [(t, min(t + size, cfg.trials)) for t in range(0, cfg.trials, size)]

        def work(span):
            out = np.empty(span[1] - span[0], dtype=np.int64)
            for k, t in enumerate(range(*span)):
                try:
                    out[k] = _mistakes_trial(learner, family, cfg, t)
                except DomainError as exc:
                    raise DomainError(f"trial {t}: {exc}") from exc
            return out

    if threads == 1 or len(bounds) == 1:
        parts = [work(s) for s in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    return np.concatenate(parts)


def mc_error_probability(learner: LearnerSpec, family: InstanceFamily, setting: str | None,
                         cfg: ExperimentConfig, *, threads: int = 1, interval: str = "wilson",
                         vectorized: bool | None = None) -> McEstimate:
    """Estimate ``P{err >= epsilon}`` with a 99% Wilson (or Clopper-Pearson) interval."""
    _check(learner, family, setting, cfg)
    mistakes = trial_mistakes(learner, family, cfg, threads, vectorized)
    hits = int(np.count_nonzero(mistakes >= cfg.error_threshold))
    return proportion_estimate(hits, cfg.trials, cfg.master_seed, interval)


def mc_expected_error(learner: LearnerSpec, family: InstanceFamily, setting: str | None,
                      cfg: ExperimentConfig, *, threads: int = 1, vectorized: bool | None = None) -> McEstimate:
    """Estimate ``E[err]`` with a 99% normal interval."""
    _check(learner, family, setting, cfg)
    mistakes = trial_mistakes(learner, family, cfg, threads, vectorized)
    vals = [int(x) for x in mistakes]
    return mean_estimate(sum(vals), sum(x * x for x in vals), cfg.u, cfg.trials, cfg.master_seed)


def mc_exceedance(learner: LearnerSpec, family: InstanceFamily, cfg: ExperimentConfig, level: float,
                  *, threads: int = 1) -> McEstimate:
    """Frequency of ``err > level`` (strict), for checking upper bounds."""
    _check(learner, family, None, cfg)
    mistakes = trial_mistakes(learner, family, cfg, threads)
    hits = int(np.count_nonzero(mistakes > level * cfg.u))
    return proportion_estimate(hits, cfg.trials, cfg.master_seed)


# --------------------------------------------------------------------------
# closed-form ERM risk

def exact_expected_error_erm_tlsi(spec: PopulationSpec, m: int, hclass: HypothesisClass | None = None) -> Fraction:
    """Expected test error of ERM under a uniform random labeling (``spec.b`` is ignored).

    A point missing from training is guessed 0 and is wrong with probability
    1/2; a point seen in training is always right.
    """
    if hclass is not None and not hclass.is_full:
        raise DomainError("closed form needs the full class (absent points must be guessed independently)")
    N = spec.N
    u = N - m
    if not 1 <= m < N:
        raise DomainError(f"need 1 <= m < N, got m={m}, N={N}")
    total = Fraction(0)
    for ij in spec.i:
        if 0 < ij <= u:
            total += ij * hypergeometric_pmf_exact(N, ij, u, ij)
    return total / (2 * u)


# --------------------------------------------------------------------------
# exact enumeration

def _multiset_sequences(counts: list[int]):
    n = sum(counts)
    seq = [0] * n

    def rec(pos):
        if pos == n:
            yield tuple(seq)
            return
        for j, c in enumerate(counts):
            if c:
                counts[j] -= 1
                seq[pos] = j
                yield from rec(pos + 1)
                counts[j] += 1

    return rec(0)


def _realizations(instance, m: int, u: int, cap: int):
    """``(prob, train, test)`` triples with train/test as tuples of (point, label)."""
    if isinstance(instance, PopulationSpec):
        N = instance.N
        if N != m + u:
            raise DomainError(f"population has {N} items, m + u = {m + u}")
        count = math.factorial(N)
        for c in instance.i:
            count //= math.factorial(c)
        if count > cap:
            raise ResourceError(f"{count} distinct splits exceed cap {cap}")
        prob = Fraction(1, count)
        b = instance.b
        for seq in _multiset_sequences(list(instance.i)):
            items = tuple((x, b[x]) for x in seq)
            yield prob, items[u:], items[:u]
    elif isinstance(instance, DiscreteDistribution):
        atoms = [(x, y, w) for x, y, w in instance.atoms if w > 0]
        count = len(atoms) ** (m + u)
        if count > cap:
            raise ResourceError(f"{count} sample sequences exceed cap {cap}")
        for seq in product(atoms, repeat=m + u):
            prob = Fraction(1)
            for a in seq:
                prob *= a[2]
            items = tuple((x, y) for x, y, _ in seq)
            yield prob, items[:m], items[m:]
    else:
        raise DomainError(f"unsupported instance type {type(instance).__name__}")


def _setting_of(instance) -> str:
    return "TLSI" if isinstance(instance, PopulationSpec) else "TLSII"


def _population_risks(instance, hclass: HypothesisClass) -> list[Fraction]:
    """``L_P(h)`` of every member for a discrete law."""
    H = hclass.matrix
    out = [Fraction(0)] * len(hclass)
    for x, y, w in instance.atoms:
        if w > 0:
            for k in range(len(hclass)):
                if H[k, x] != y:
                    out[k] += w
    return out


def _loss_table(instance, hclass: HypothesisClass, m: int, u: int, objective: str, mode: str,
                epsilon: Fraction, cap: int):
    """Yield ``(prob, train, test, losses)`` where ``losses[k]`` is the loss of member ``k``."""
    H = hclass.matrix
    if objective == "population":
        base = _population_risks(instance, hclass)
        if mode == "probability":
            base = [Fraction(int(r >= epsilon)) for r in base]
    threshold = math.ceil(epsilon * u) if u else 0
    for prob, train, test in _realizations(instance, m, u, cap):
        if objective == "population":
            losses = base
        else:
            pts = np.fromiter((x for x, _ in test), dtype=np.int64, count=len(test))
            ys = np.fromiter((y for _, y in test), dtype=np.int8, count=len(test))
            mistakes = (H[:, pts] != ys[None, :]).sum(axis=1)
            if mode == "probability":
                losses = [Fraction(int(k >= threshold)) for k in mistakes.tolist()]
            else:
                losses = [Fraction(int(k), u) for k in mistakes.tolist()]
        yield prob, train, test, losses


@dataclass(frozen=True)
class ExactMinimaxResult:
    value: Fraction
    optimal_learner_table: dict
    instance_family_size: int
    search_size: int
    worst_instance: int
    learner_class: str = "deterministic"
    note: str = ("minimum over deterministic learner tables; randomized learners can only do better, "
                 "so this value upper-bounds the randomized minimax value")


def _observation(train, test, view: str):
    if view == "labeled":
        return (train,)
    return (train, tuple(x for x, _ in test))


def _solve(hclass: HypothesisClass, family: Sequence, m: int, u: int, *, objective: str, view: str,
           mode: str, epsilon, cap: int | None = None) -> ExactMinimaxResult:
    if not family:
        raise DomainError("instance family must be non-empty")
    if mode not in ("expectation", "probability"):
        raise ConfigError(f"unknown mode {mode!r}")
    cap = SEARCH_CAP if cap is None else cap
    eps = as_fraction(epsilon)
    n_inst, n_h = len(family), len(hclass)

    # contributions[obs][i] = vector over members of prob-weighted loss
    contributions: dict = {}
    for i, inst in enumerate(family):
        for prob, train, test, losses in _loss_table(inst, hclass, m, u, objective, mode, eps, cap):
            per = contributions.setdefault(_observation(train, test, view), {})
            vec = per.setdefault(i, [Fraction(0)] * n_h)
            for k in range(n_h):
                if losses[k]:
                    vec[k] += prob * losses[k]

    denom = 1
    for per in contributions.values():
        for vec in per.values():
            for q in vec:
                denom = math.lcm(denom, q.denominator)

    base = [0] * n_inst
    table: dict = {}
    open_obs = []   # (obs, touched instance indices, [(member, int vector)])
    for obs in sorted(contributions):
        per = contributions[obs]
        touched = sorted(per)
        seen: dict = {}
        for k in range(n_h):
            key = tuple(int(per[i][k] * denom) for i in touched)
            seen.setdefault(key, k)
        keys = list(seen)
        kept = [v for v in keys
                if not any(w != v and all(a <= b for a, b in zip(w, v)) for w in keys)]
        choices = [(seen[v], v) for v in kept]
        if len(choices) == 1:
            k, v = choices[0]
            table[obs] = hclass[k]
            for i, c in zip(touched, v):
                base[i] += c
        else:
            open_obs.append((obs, touched, choices))

    size = 1
    for _, _, choices in open_obs:
        size *= len(choices)
    if size > cap:
        raise ResourceError(f"learner search space has {size} tables, cap is {cap}")

    # suffix sums of per-instance minimum contributions, for the branch-and-bound bound
    n_open = len(open_obs)
    rest = [[0] * n_inst for _ in range(n_open + 1)]
    for j in range(n_open - 1, -1, -1):
        _, touched, choices = open_obs[j]
        rest[j] = list(rest[j + 1])
        for pos, i in enumerate(touched):
            rest[j][i] += min(v[pos] for _, v in choices)

    best = [math.inf, None]
    totals = list(base)
    picks = [0] * n_open

    def search(j: int) -> None:
        bound = max(t + r for t, r in zip(totals, rest[j]))
        if bound >= best[0]:
            return
        if j == n_open:
            best[0], best[1] = bound, list(picks)
            return
        _, touched, choices = open_obs[j]
        order = sorted(range(len(choices)),
                       key=lambda c: max(totals[i] + choices[c][1][p] for p, i in enumerate(touched)))
        for c in order:
            v = choices[c][1]
            for p, i in enumerate(touched):
                totals[i] += v[p]
            picks[j] = c
            search(j + 1)
            for p, i in enumerate(touched):
                totals[i] -= v[p]

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, n_open + 100))
    try:
        search(0)
    finally:
        sys.setrecursionlimit(limit)

    final = list(base)
    for j, (obs, touched, choices) in enumerate(open_obs):
        k, v = choices[best[1][j]]
        table[obs] = hclass[k]
        for p, i in enumerate(touched):
            final[i] += v[p]
    worst = max(range(n_inst), key=lambda i: final[i])
    return ExactMinimaxResult(Fraction(final[worst], denom), table, n_inst, size, worst)


def exact_minimax_tiny(setting: str, hclass: HypothesisClass, family: Sequence, m: int, u: int,
                       mode: str = "expectation", epsilon=0) -> ExactMinimaxResult:
    """Min over deterministic learner tables of the max over ``family`` of the exact risk.

    The learner observes the ordered labeled sample and the ordered test
    points; the risk is the error on the test sample.
    """
    if setting not in SETTINGS:
        raise DomainError(f"unknown setting {setting!r}")
    if any(_setting_of(inst) != setting for inst in family):
        raise DomainError(f"family members do not all belong to {setting}")
    if m < 1 or u < 1:
        raise DomainError(f"need m, u >= 1, got m={m}, u={u}")
    return _solve(hclass, family, m, u, objective="sample", view="transductive", mode=mode, epsilon=epsilon)


def exact_learner_risk(learner: LearnerSpec, hclass: HypothesisClass, instance, m: int, u: int,
                       mode: str = "expectation", epsilon=0, objective: str = "sample") -> Fraction:
    """Exact risk of a deterministic learner on one instance."""
    if learner.randomized:
        raise ConfigError("exact risk is only defined here for deterministic learners")
    eps = as_fraction(epsilon)
    H = hclass
    total = Fraction(0)
    cache: dict = {}
    for prob, train, test, losses in _loss_table(instance, hclass, m, u, objective, mode, eps, SEARCH_CAP):
        key = (train, tuple(x for x, _ in test))
        if key not in cache:
            h = run_learner(learner, H, Dataset(train), key[1])
            cache[key] = H.index_of(h)
        total += prob * losses[cache[key]]
    return total


@dataclass(frozen=True)
class SslChainResult:
    m_ii: Fraction | None
    m_ssl: Fraction
    m_sl: Fraction
    chain_holds: bool
    mode: str
    epsilon: Fraction


def ssl_vs_sl_experiment(d: int, m: int, u: int, family: Sequence[DiscreteDistribution],
                         hclass: HypothesisClass | None = None, mode: str = "expectation",
                         epsilon=0) -> SslChainResult:
    """Exact transductive, semi-supervised and supervised minimax values on one family.

    In expectation mode the chain is ``mII <= mSSL <= mSL``.  In probability
    mode the transductive value is taken at ``2 epsilon`` and the chain reads
    ``mII - exp(-2 u eps^2) <= mSSL <= mSL``.
    """
    hc = hclass if hclass is not None else full_class(d)
    if any(not isinstance(P, DiscreteDistribution) or P.d != d for P in family):
        raise DomainError("family must hold discrete laws on d points")
    eps = as_fraction(epsilon)
    m_sl = _solve(hc, family, m, 0, objective="population", view="labeled", mode=mode, epsilon=eps).value
    if u == 0:
        return SslChainResult(None, m_sl, m_sl, True, mode, eps)
    m_ssl = _solve(hc, family, m, u, objective="population", view="transductive", mode=mode, epsilon=eps).value
    if mode == "expectation":
        m_ii = _solve(hc, family, m, u, objective="sample", view="transductive", mode=mode, epsilon=eps).value
        holds = m_ii <= m_ssl <= m_sl
    else:
        m_ii = _solve(hc, family, m, u, objective="sample", view="transductive", mode=mode, epsilon=2 * eps).value
        holds = float(m_ii) - math.exp(-2 * u * float(eps) ** 2) <= float(m_ssl) and m_ssl <= m_sl
    return SslChainResult(m_ii, m_ssl, m_sl, holds, mode, eps)


# --------------------------------------------------------------------------
# rates

def rate_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares slope, intercept and r^2 of ``log(value)`` against ``log(m)``."""
    if len(points) < 3:
        raise DomainError(f"rate fit needs at least 3 points, got {len(points)}")
    ms = np.array([p[0] for p in points], dtype=float)
    vs = np.array([p[1] for p in points], dtype=float)
    if (ms <= 0).any() or (vs <= 0).any():
        raise DomainError("rate fit needs positive m and values")
    fit = stats.linregress(np.log(ms), np.log(vs))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)
