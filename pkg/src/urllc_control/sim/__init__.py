"""Protocol simulation: scenarios, trial state machines and Monte Carlo."""

from .montecarlo import McStats, ModeComparison, compare_modes, run_monte_carlo, wilson_interval
from .protocol import MAX_ROUNDS, run_dl_trial, run_trial, run_ul_trial
from .trace import format_trace, re_conserved, ue_half_duplex_ok
from .types import (
    FORCEABLE_EVENTS,
    Actor,
    ChannelState,
    EventKind,
    ScenarioConfig,
    ScenarioError,
    TimingPlan,
    TraceEvent,
    TransactionOutcome,
    validate_scenario,
)

__all__ = [
    "FORCEABLE_EVENTS",
    "MAX_ROUNDS",
    "Actor",
    "ChannelState",
    "EventKind",
    "McStats",
    "ModeComparison",
    "ScenarioConfig",
    "ScenarioError",
    "TimingPlan",
    "TraceEvent",
    "TransactionOutcome",
    "compare_modes",
    "format_trace",
    "re_conserved",
    "run_dl_trial",
    "run_monte_carlo",
    "run_trial",
    "run_ul_trial",
    "ue_half_duplex_ok",
    "validate_scenario",
]
