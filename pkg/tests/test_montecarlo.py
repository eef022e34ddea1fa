import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from urllc_control.analytics import enumerate_dl, enumerate_ul
from urllc_control.error_model import ControlErrorProfile, DataBlerProfile, TrialRng
from urllc_control.sim import EventKind, ScenarioConfig, compare_modes, run_monte_carlo, run_trial
from urllc_control.sim.montecarlo import Tally, _batch, _percentile, wilson_interval
from urllc_control.slot_grid import Direction, Mode

UL, DL = Direction.UPLINK, Direction.DOWNLINK
SCALED_UL = (ControlErrorProfile(eps_sr=0.01, eps_rg=0.01),
             DataBlerProfile(p1=0.1, p2=0.1, p12=1e-3))
SCALED_DL = (ControlErrorProfile.tied_feedback(eps_rg=0.01, eps_and=0.01),
             DataBlerProfile(p1=0.1, p12=1e-3, p2d=1e-3, p2n=0.1))


def test_wilson_reference_values():
    # 8 of 10 at 95 %: textbook Wilson score interval.
    lo, hi = wilson_interval(8, 10)
    assert lo == pytest.approx(0.4902, abs=1e-4) and hi == pytest.approx(0.9433, abs=1e-4)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


@given(st.integers(1, 10**7), st.data())
def test_wilson_brackets_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_nearest_rank_percentile():
    h = Counter({14: 90, 28: 10})
    assert _percentile(h, 0.5) == 14
    assert _percentile(h, 0.9) == 14
    assert _percentile(h, 0.95) == 28
    assert _percentile(Counter(), 0.5) is None


def test_single_error_free_trial():
    s = run_monte_carlo(ScenarioConfig(), ControlErrorProfile(), DataBlerProfile(), 1, 7)
    assert (s.trials, s.successes, s.reliability_hat) == (1, 1, 1.0)
    assert s.latency_p50_ms == s.latency_max_ms == pytest.approx(1.0)
    assert s.attempt_histogram == {1: 1}


def test_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_monte_carlo(ScenarioConfig(), ControlErrorProfile(), DataBlerProfile(), 0, 1)


@given(st.lists(st.integers(1, 60), min_size=1, max_size=5))
def test_chunking_does_not_matter(cuts):
    cfg = ScenarioConfig(direction=DL, mode=Mode.FLEXIBLE, p_mismatch=0.3)
    c, d = SCALED_DL
    n = 200
    edges = sorted({0, n, *[x % n for x in cuts]})
    parts = [_batch(cfg, c, d, 3, lo, hi) for lo, hi in zip(edges, edges[1:])]
    merged = parts[0]
    for p in parts[1:]:
        merged = merged.merge(p)
    rev = parts[-1]
    for p in reversed(parts[:-1]):
        rev = rev.merge(p)
    whole = _batch(cfg, c, d, 3, 0, n)
    assert merged == whole == rev


def test_worker_count_does_not_matter():
    cfg = ScenarioConfig(direction=UL, mode=Mode.FLEXIBLE)
    c, d = SCALED_UL
    one = run_monte_carlo(cfg, c, d, 5000, 11, workers=1)
    three = run_monte_carlo(cfg, c, d, 5000, 11, workers=3)
    assert one == three


def _within_4_sigma(stats, p):
    sigma = math.sqrt(p * (1 - p) / stats.trials)
    return abs(stats.reliability_hat - p) <= 4 * sigma


@pytest.mark.parametrize("direction,pair,enum", [(UL, SCALED_UL, enumerate_ul),
                                                 (DL, SCALED_DL, enumerate_dl)])
def test_matches_enumeration_at_1e5(direction, pair, enum):
    c, d = pair
    stats = run_monte_carlo(ScenarioConfig(direction=direction), c, d, 100_000, 5)
    assert _within_4_sigma(stats, enum(c, d).success)
    lo, hi = stats.wilson_95
    assert lo <= stats.reliability_hat <= hi


def test_rare_feedback_branches_match_enumeration():
    # Heavy confusion rates exercise every feedback branch of the tree.
    c = ControlErrorProfile(eps_rg=0.2, eps_na=0.1, eps_nd=0.3, eps_da=0.25, eps_dn=0.35)
    d = DataBlerProfile(p1=0.6, p12=0.3, p2d=0.2, p2n=0.7)
    stats = run_monte_carlo(ScenarioConfig(direction=DL), c, d, 100_000, 8)
    assert _within_4_sigma(stats, enumerate_dl(c, d).success)


def test_uplink_long_sr_period_and_deadline_diverge_from_tree():
    # Outside the tree's assumptions the simulator is allowed to differ; this pins
    # that a longer SR period only removes the second SR chance.
    c = ControlErrorProfile(eps_sr=0.3)
    d = DataBlerProfile()
    stats = run_monte_carlo(ScenarioConfig(sr_period_slots=2), c, d, 20_000, 2)
    assert _within_4_sigma(stats, 0.7)


def test_compare_zero_errors_has_zero_deltas():
    for direction in Direction:
        cmp = compare_modes(ScenarioConfig(direction=direction), ControlErrorProfile(),
                            DataBlerProfile(), 2000, 1)
        assert all(v == 0 for v in cmp.deltas.values() if v is not None)
        assert cmp.dominance_violations == 0


def test_compare_uplink_dominance():
    c = ControlErrorProfile(eps_sr=0.01, eps_rg=0.05)
    d = DataBlerProfile(p1=0.1, p2=0.1, p12=1e-3)
    for seed in range(3):
        cmp = compare_modes(ScenarioConfig(direction=UL), c, d, 20_000, seed)
        assert cmp.flexible.reliability_hat >= cmp.conventional.reliability_hat
        assert cmp.dominance_violations == 0 and cmp.attempt_violations == 0


def test_compare_downlink_mismatch_halves_affected_latency():
    c, d = SCALED_DL
    cmp = compare_modes(ScenarioConfig(direction=DL, p_mismatch=0.2), c, d, 20_000, 4)
    ratio = cmp.flexible.affected_latency_p50_ms / cmp.conventional.affected_latency_p50_ms
    assert ratio == pytest.approx(0.5, abs=0.07)
    mean_ratio = cmp.flexible.affected_latency_mean_ms / cmp.conventional.affected_latency_mean_ms
    assert mean_ratio == pytest.approx(0.5, abs=0.07)
    assert cmp.deltas["mean_re_wasted"] > 0


def _recovery_grant_missed(cfg, c, d, seed, i):
    out = run_trial(cfg.with_mode(Mode.FLEXIBLE), c, d, TrialRng(seed, i))
    kinds = [ev.kind for ev in out.trace]
    if EventKind.DCI_RETX not in kinds:
        return False
    return EventKind.DCI_MISSED in kinds[kinds.index(EventKind.DCI_RETX):]


def test_downlink_violations_only_after_missed_recovery_grant():
    c, d = SCALED_DL
    cfg = ScenarioConfig(direction=DL, p_mismatch=0.3)
    cmp = compare_modes(cfg, c, d, 50_000, 6)
    assert cmp.dominance_violations == len(cmp.violating_trials)
    assert all(_recovery_grant_missed(cfg, c, d, 6, i) for i in cmp.violating_trials)


def test_tally_stats_affected_fields():
    t = Tally()
    cfg = ScenarioConfig(direction=DL, mode=Mode.FLEXIBLE, forced_events=("inappropriate_mcs",))
    for i in range(10):
        t.add(run_trial(cfg, ControlErrorProfile(), DataBlerProfile(), TrialRng(0, i), record=False))
    s = t.stats(cfg.numerology)
    assert s.affected_trials == s.affected_successes == 10
    assert s.affected_latency_p50_ms == pytest.approx(11 / 14)
    assert s.mean_re_wasted == 16
