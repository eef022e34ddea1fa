"""Monte Carlo aggregation over independent, individually seeded trials.

Trial ``i`` always draws from ``TrialRng(master_seed, i)``, and every
statistic is folded from integer counts, so results do not depend on how
trials are split across worker processes.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

from ..error_model import ControlErrorProfile, DataBlerProfile, TrialRng, validate_profiles
from ..slot_grid import Direction, Mode, Numerology
from .protocol import _dl, _ul
from .types import ScenarioConfig, ScenarioError, validate_scenario

__all__ = [
    "McStats",
    "ModeComparison",
    "Tally",
    "compare_modes",
    "run_monte_carlo",
    "wilson_interval",
]

_Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


def _percentile(hist: Counter, q: float) -> Optional[int]:
    """Nearest-rank percentile of an integer histogram."""
    n = sum(hist.values())
    if n == 0:
        return None
    rank = max(1, math.ceil(q * n))
    seen = 0
    for value in sorted(hist):
        seen += hist[value]
        if seen >= rank:
            return value
    return max(hist)


def _mean(hist: Counter) -> Optional[float]:
    n = sum(hist.values())
    if n == 0:
        return None
    return math.fsum(v * k for v, k in hist.items()) / n


@dataclass
class Tally:
    """Additive per-batch counts; ``merge`` is associative and commutative."""

    trials: int = 0
    successes: int = 0
    latency: Counter = field(default_factory=Counter)
    affected_trials: int = 0
    affected_successes: int = 0
    affected_latency: Counter = field(default_factory=Counter)
    re_used: int = 0
    re_wasted: int = 0
    attempts: Counter = field(default_factory=Counter)

    def add(self, out) -> None:
        self.trials += 1
        self.re_used += out.re_used
        self.re_wasted += out.re_wasted
        self.attempts[out.attempts_data] += 1
        if out.affected:
            self.affected_trials += 1
        if out.success:
            self.successes += 1
            self.latency[out.latency_symbols] += 1
            if out.affected:
                self.affected_successes += 1
                self.affected_latency[out.latency_symbols] += 1

    def merge(self, other: Tally) -> Tally:
        return Tally(
            self.trials + other.trials,
            self.successes + other.successes,
            self.latency + other.latency,
            self.affected_trials + other.affected_trials,
            self.affected_successes + other.affected_successes,
            self.affected_latency + other.affected_latency,
            self.re_used + other.re_used,
            self.re_wasted + other.re_wasted,
            self.attempts + other.attempts,
        )

    def stats(self, numerology: Numerology) -> McStats:
        sym = numerology.symbol_duration_ms

        def ms(v):
            return None if v is None else v * sym

        return McStats(
            trials=self.trials,
            successes=self.successes,
            reliability_hat=self.successes / self.trials if self.trials else float("nan"),
            wilson_95=wilson_interval(self.successes, self.trials),
            latency_p50_ms=ms(_percentile(self.latency, 0.50)),
            latency_p95_ms=ms(_percentile(self.latency, 0.95)),
            latency_p99_ms=ms(_percentile(self.latency, 0.99)),
            latency_max_ms=ms(max(self.latency) if self.latency else None),
            latency_mean_ms=ms(_mean(self.latency)),
            affected_trials=self.affected_trials,
            affected_successes=self.affected_successes,
            affected_latency_p50_ms=ms(_percentile(self.affected_latency, 0.50)),
            affected_latency_mean_ms=ms(_mean(self.affected_latency)),
            mean_re_used=self.re_used / self.trials if self.trials else float("nan"),
            mean_re_wasted=self.re_wasted / self.trials if self.trials else float("nan"),
            attempt_histogram=dict(sorted(self.attempts.items())),
        )


@dataclass(frozen=True)
class McStats:
    """Aggregate over trials. Latencies cover successful trials only;
    the ``affected_*`` fields cover trials hit by the event the flexible
    slot structure reacts to (first grant missed in uplink, inappropriate
    MCS in downlink)."""

    trials: int
    successes: int
    reliability_hat: float
    wilson_95: tuple[float, float]
    latency_p50_ms: Optional[float]
    latency_p95_ms: Optional[float]
    latency_p99_ms: Optional[float]
    latency_max_ms: Optional[float]
    latency_mean_ms: Optional[float]
    affected_trials: int
    affected_successes: int
    affected_latency_p50_ms: Optional[float]
    affected_latency_mean_ms: Optional[float]
    mean_re_used: float
    mean_re_wasted: float
    attempt_histogram: dict[int, int]


def _check(cfg, c, d, n_trials):
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    validate_scenario(cfg)
    validate_profiles(c, d)


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, -(-n // (workers * 4)))
    return [(lo, min(n, lo + size)) for lo in range(0, n, size)]


def _batch(cfg, c, d, master_seed, lo, hi) -> Tally:
    trial = _ul if cfg.direction is Direction.UPLINK else _dl
    tally = Tally()
    add = tally.add
    for i in range(lo, hi):
        add(trial(cfg, c, d, TrialRng(master_seed, i), False))
    return tally


def _fold(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        results = [fn(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, *zip(*jobs)))
    total = results[0]
    for r in results[1:]:
        total = total.merge(r)
    return total


def run_monte_carlo(cfg: ScenarioConfig, c: ControlErrorProfile, d: DataBlerProfile,
                    n_trials: int, master_seed: int, workers: int = 1) -> McStats:
    """Run ``n_trials`` independent transactions and aggregate them."""
    _check(cfg, c, d, n_trials)
    jobs = [(cfg, c, d, master_seed, lo, hi) for lo, hi in _chunks(n_trials, max(1, workers))]
    return _fold(_batch, jobs, workers).stats(cfg.numerology)


@dataclass
class _PairTally:
    conventional: Tally = field(default_factory=Tally)
    flexible: Tally = field(default_factory=Tally)
    dominance_violations: int = 0
    attempt_violations: int = 0
    violating_trials: tuple[int, ...] = ()

    def merge(self, other: _PairTally) -> _PairTally:
        return _PairTally(
            self.conventional.merge(other.conventional),
            self.flexible.merge(other.flexible),
            self.dominance_violations + other.dominance_violations,
            self.attempt_violations + other.attempt_violations,
            tuple(sorted(self.violating_trials + other.violating_trials)),
        )


def _pair_batch(cfg, c, d, master_seed, lo, hi) -> _PairTally:
    trial = _ul if cfg.direction is Direction.UPLINK else _dl
    conv_cfg = cfg.with_mode(Mode.CONVENTIONAL)
    flex_cfg = cfg.with_mode(Mode.FLEXIBLE)
    out = _PairTally()
    violating = []
    for i in range(lo, hi):
        a = trial(conv_cfg, c, d, TrialRng(master_seed, i), False)
        b = trial(flex_cfg, c, d, TrialRng(master_seed, i), False)
        out.conventional.add(a)
        out.flexible.add(b)
        if a.success and not b.success:
            out.dominance_violations += 1
            violating.append(i)
        if b.attempts_data < a.attempts_data:
            out.attempt_violations += 1
    out.violating_trials = tuple(violating)
    return out


@dataclass(frozen=True)
class ModeComparison:
    conventional: McStats
    flexible: McStats
    deltas: dict[str, Optional[float]]
    dominance_violations: int
    attempt_violations: int
    violating_trials: tuple[int, ...]


_DELTA_FIELDS = (
    "reliability_hat",
    "latency_p50_ms",
    "latency_p95_ms",
    "latency_p99_ms",
    "latency_max_ms",
    "latency_mean_ms",
    "affected_latency_p50_ms",
    "affected_latency_mean_ms",
    "mean_re_used",
    "mean_re_wasted",
)


def compare_modes(cfg_base: ScenarioConfig, c: ControlErrorProfile, d: DataBlerProfile,
                  n_trials: int, master_seed: int, workers: int = 1) -> ModeComparison:
    """Conventional vs flexible on identical trial seeds (common random numbers).

    Deltas are ``flexible - conventional``. A dominance violation is a trial
    that the conventional structure delivers and the flexible one does not.
    """
    for mode in Mode:
        _check(cfg_base.with_mode(mode), c, d, n_trials)
    jobs = [(cfg_base, c, d, master_seed, lo, hi)
            for lo, hi in _chunks(n_trials, max(1, workers))]
    pair = _fold(_pair_batch, jobs, workers)
    conv = pair.conventional.stats(cfg_base.numerology)
    flex = pair.flexible.stats(cfg_base.numerology)
    deltas = {}
    for name in _DELTA_FIELDS:
        a, b = getattr(conv, name), getattr(flex, name)
        deltas[name] = None if a is None or b is None else b - a
    return ModeComparison(conv, flex, deltas, pair.dominance_violations,
                          pair.attempt_violations, pair.violating_trials)
