from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import profiles
from urllc_control.config import (
    ConfigError,
    ScenarioFile,
    SweepConfig,
    dump_scenario_file,
    load_scenario_file,
    parse_scenario_text,
)
from urllc_control.sim import ScenarioConfig, TimingPlan
from urllc_control.slot_grid import FORMAT_CATALOG, Direction, Mode

SCENARIOS = sorted((Path(__file__).parent.parent / "scenarios").glob("*.ini"))


def test_bundled_scenarios_exist():
    names = {p.stem for p in SCENARIOS}
    assert {"uplink_region", "downlink_region",
            "uplink_dci_miss", "downlink_mcs_mismatch"} <= names


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_bundled_scenarios_round_trip(path):
    sf = load_scenario_file(path)
    text = dump_scenario_file(sf)
    assert parse_scenario_text(text) == sf
    assert dump_scenario_file(parse_scenario_text(text)) == text


def test_full_example():
    sf = parse_scenario_text("""
[errors]
eps_sr = 1e-2
eps_rg = 0.05   # scaled up
[blers]
p1 = 0.1
p12 = 1e-3
[scenario]
direction = Downlink
mode = flexible
mu = 1
slot_format = DDFFFFFFFFFFUU
forced_events = inappropriate MCS, miss-first-dci
trials = 500
seed = 9
[timing]
early_nack_span = 5..6
abort_symbol = 7
dci_retx_span = 8, 8
recovery_data_span = 9..11
[profile a]
eps_rg = 0.1
[profile b]
p1 = 0.2
""")
    cfg = sf.scenario
    assert cfg.direction is Direction.DOWNLINK and cfg.mode is Mode.FLEXIBLE
    assert cfg.numerology.slot_duration_ms == 0.5
    assert cfg.forced_events == ("inappropriate_mcs", "miss_first_dci")
    assert cfg.timing.early_nack_span == (5, 6) and cfg.timing.dci_retx_span == (8, 8)
    assert (sf.trials, sf.seed) == (500, 9)
    named = {name: (c, d) for name, c, d in sf.profiles()}
    assert named["a"][0].eps_rg == 0.1 and named["a"][1].p1 == 0.1
    assert named["b"][0].eps_rg == 0.05 and named["b"][1].p1 == 0.2


def test_defaults_without_sections():
    sf = parse_scenario_text("")
    assert sf == ScenarioFile()
    assert sf.profiles() == [("base", sf.errors, sf.blers)]


@pytest.mark.parametrize("text,key", [
    ("[errors]\neps_xx = 0.1\n", "eps_xx"),
    ("[blers]\np3 = 0.1\n", "p3"),
    ("[scenario]\nspeed = 3\n", "speed"),
    ("[timing]\nfoo_span = 1..2\n", "foo_span"),
    ("[sweep]\nx_grid = 0.1\ncolour = red\n", "colour"),
    ("[extras]\na = 1\n", "extras"),
    ("[errors]\neps_rg = lots\n", "eps_rg"),
    ("[errors]\neps_rg = nan\n", "eps_rg"),
    ("[errors]\neps_rg = 1.5\n", "eps_rg"),
    ("[errors]\neps_na = 0.6\neps_nd = 0.6\n", "eps_na + eps_nd"),
    ("[blers]\np1 = 0.01\np12 = 0.1\n", "p12"),
    ("[scenario]\nslot_format = nosuchformat\n", "slot_format"),
    ("[scenario]\ndirection = sideways\n", "direction"),
    ("[scenario]\nmu = 9\n", "mu"),
    ("[scenario]\ntrials = 0\n", "trials"),
    ("[scenario]\nforced_events = meteor strike\n", "forced_events"),
    ("[scenario]\nearly_nack_errors = maybe\n", "early_nack_errors"),
    ("[scenario]\nmode = flexible\n[timing]\ndci_retx_span = 4..5\n", "dci_retx_span"),
    ("[timing]\ndci_span = 0-1\n", "dci_span"),
    ("[sweep]\ntarget = 0.9\n", "x_grid"),
    ("[sweep]\nx_grid = 0.2, 0.1\n", "x_grid"),
    ("[sweep]\nx_grid = 0, 0.1\n", "x_grid"),
    ("[sweep]\nx_min = 1e-6\nx_max = 1e-3\n", "x_points"),
    ("[sweep]\nx_grid = 0.1\nx_min = 1e-6\n", "x_min"),
    ("[sweep]\nx_grid = 0.1\ntying = loose\n", "tying"),
    ("[sweep]\nx_grid = 0.1\ndl_formula = fancy\n", "dl_formula"),
    ("[profile x]\neps_q = 1\n", "eps_q"),
    ("no section header\n", "unreadable"),
])
def test_rejections_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key.replace("+", r"\+")):
        parse_scenario_text(text)


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario_file("/nonexistent/scenario.ini")


def test_log_spaced_grid():
    sf = parse_scenario_text("[sweep]\nx_min = 1e-6\nx_max = 1e-2\nx_points = 5\n")
    assert sf.sweep.x_grid == pytest.approx((1e-6, 1e-5, 1e-4, 1e-3, 1e-2), rel=1e-12)
    assert sf.sweep.formulas == ("coherent",)
    assert SweepConfig(dl_formula="both").formulas == ("coherent", "verbatim")


names = st.text("abcdefghijklmnopqrstuvwxyz0123456789_-", min_size=1, max_size=8)
scenario_files = st.builds(
    ScenarioFile,
    errors=st.just(None), blers=st.just(None),
    scenario=st.builds(
        ScenarioConfig,
        direction=st.sampled_from(list(Direction)),
        mode=st.sampled_from(list(Mode)),
        mu=st.integers(0, 4),
        slot_format=st.sampled_from(["D2F10U2", "DDFFFFFFFFFFUU"]),
        deadline_slots=st.integers(1, 5),
        sr_period_slots=st.integers(1, 4),
        p_mismatch=st.floats(0, 1),
        robustness_multiplier=st.floats(1, 10),
        freq_units=st.integers(1, 100),
        forced_events=st.sets(st.sampled_from(["miss_first_sr", "miss_first_dci"])).map(tuple),
        early_nack_errors=st.booleans(),
    ),
    trials=st.none() | st.integers(1, 10**7),
    seed=st.none() | st.integers(0, 2**63),
    sweep=st.none() | st.builds(
        SweepConfig,
        directions=st.sampled_from([("uplink",), ("downlink",), ("uplink", "downlink")]),
        p1_values=st.lists(st.floats(1e-4, 0.5), min_size=1, max_size=3).map(tuple),
        target=st.floats(0.5, 1.0),
        x_grid=st.lists(st.floats(1e-9, 0.99), min_size=1, max_size=6).map(lambda xs: tuple(sorted(xs))),
        tying=st.sampled_from(["tied", "none"]),
        dl_formula=st.sampled_from(["coherent", "verbatim", "both"]),
    ),
)


@given(scenario_files, profiles(), st.lists(st.tuples(names, st.floats(0, 1e-3)), max_size=3,
                                            unique_by=lambda t: t[0]))
def test_round_trip_property(sf, pair, extra):
    c, d = pair
    overrides = tuple((name, (("eps_rg", v),)) for name, v in extra)
    sf = ScenarioFile(c, d, sf.scenario, sf.trials, sf.seed, sf.sweep, overrides)
    text = dump_scenario_file(sf)
    back = parse_scenario_text(text)
    assert back.scenario == sf.scenario
    assert back == sf


def test_timing_defaults_follow_direction():
    sf = parse_scenario_text("[scenario]\ndirection = downlink\n[timing]\nprocessing_gap_symbols = 1\n")
    assert sf.scenario.timing == TimingPlan.for_direction(Direction.DOWNLINK, processing_gap_symbols=1)
    assert set(FORMAT_CATALOG) >= {"D2F10U2"}
