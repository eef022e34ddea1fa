from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from typing import Optional

from ..error_model import FeedbackSignal
from ..slot_grid import (
    SYMBOLS_PER_SLOT,
    Allocation,
    Direction,
    Mode,
    Numerology,
    get_format,
    numerology_from_mu,
    validate_usage,
)

__all__ = [
    "FORCEABLE_EVENTS",
    "Actor",
    "ChannelState",
    "EventKind",
    "ScenarioConfig",
    "ScenarioError",
    "TimingPlan",
    "TraceEvent",
    "TransactionOutcome",
    "normalize_forced",
    "validate_scenario",
]

Span = tuple[int, int]

FORCEABLE_EVENTS = frozenset({
    "miss_first_sr",
    "miss_first_dci",
    "inappropriate_mcs",
    "fail_first_decode",
})


class ScenarioError(ValueError):
    """Scenario or timing plan inconsistent with the slot format."""


def normalize_forced(names) -> tuple[str, ...]:
    out = []
    for name in names:
        key = "_".join(str(name).strip().lower().replace("-", " ").split())
        if key not in FORCEABLE_EVENTS:
            raise ScenarioError(f"unknown forced event {name!r}; known: {sorted(FORCEABLE_EVENTS)}")
        out.append(key)
    return tuple(sorted(set(out)))


@dataclass(frozen=True)
class TimingPlan:
    """Slot-relative symbol positions (0..13) of every scheduled activity.

    A dependent transmission may start ``processing_gap_symbols`` after the
    last symbol it depends on (``start - end >= gap``).
    """

    dci_span: Span = (0, 1)
    ul_data_span: Span = (4, 13)
    dl_data_span: Span = (2, 11)
    feedback_span: Span = (13, 13)
    sr_symbol: int = 13
    dtx_check_symbol: int = 5
    dci_retx_span: Span = (6, 7)
    recovery_data_span: Span = (9, 13)
    early_nack_span: Span = (4, 5)
    abort_symbol: int = 6
    processing_gap_symbols: int = 2

    @classmethod
    def for_direction(cls, direction: Direction, **overrides) -> TimingPlan:
        if direction is Direction.DOWNLINK:
            base = {"dci_retx_span": (7, 7), "recovery_data_span": (8, 11)}
        else:
            base = {}
        return cls(**{**base, **overrides})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ScenarioConfig:
    direction: Direction = Direction.UPLINK
    mode: Mode = Mode.CONVENTIONAL
    mu: int = 0
    slot_format: str = "D2F10U2"
    deadline_slots: int = 2
    sr_period_slots: int = 1
    timing: Optional[TimingPlan] = None
    p_mismatch: float = 0.0
    robustness_multiplier: float = 1.0
    freq_units: int = 4
    forced_events: tuple[str, ...] = ()
    early_nack_errors: bool = False

    def __post_init__(self) -> None:
        if self.timing is None:
            object.__setattr__(self, "timing", TimingPlan.for_direction(self.direction))
        object.__setattr__(self, "forced_events", normalize_forced(self.forced_events))

    @property
    def numerology(self) -> Numerology:
        return numerology_from_mu(self.mu)

    def with_mode(self, mode: Mode) -> ScenarioConfig:
        return replace(self, mode=mode)


@dataclass(frozen=True)
class ChannelState:
    supportable_mcs: int
    granted_mcs: int

    @property
    def inappropriate(self) -> bool:
        return self.granted_mcs > self.supportable_mcs


class Actor(enum.Enum):
    UE = "UE"
    GNB = "gNB"

    def __str__(self) -> str:
        return self.value


class EventKind(enum.Enum):
    SR_SENT = "SrSent"
    SR_MISSED = "SrMissed"
    DCI_SENT = "DciSent"
    DCI_MISSED = "DciMissed"
    DCI_RETX = "DciRetx"
    UL_DATA_TX = "UlDataTx"
    DL_DATA_TX = "DlDataTx"
    DATA_DECODE_OK = "DataDecodeOk"
    DATA_DECODE_FAIL = "DataDecodeFail"
    FEEDBACK_SENT = "FeedbackSent"
    FEEDBACK_DETECTED = "FeedbackDetected"
    DTX_DECLARED = "DtxDeclared"
    EARLY_NACK = "EarlyNack"
    TX_ABORTED = "TxAborted"
    DEADLINE_EXPIRED = "DeadlineExpired"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TraceEvent:
    """One timeline entry; times are symbols since the start of slot 0."""

    global_symbol_time: int
    actor: Actor
    kind: EventKind
    end_time: Optional[int] = None
    allocation: Optional[Allocation] = None
    signal: Optional[FeedbackSignal] = None

    @property
    def last_symbol(self) -> int:
        return self.global_symbol_time if self.end_time is None else self.end_time

    @property
    def slot(self) -> int:
        return self.global_symbol_time // SYMBOLS_PER_SLOT


@dataclass
class TransactionOutcome:
    success: bool
    start_time: int
    latency_symbols: Optional[int]
    latency_ms: Optional[float]
    re_used: int
    re_wasted: int
    attempts_data: int
    affected: bool
    trace: list[TraceEvent] = field(default_factory=list)


def _span_ok(span: Span) -> bool:
    a, b = span
    return 0 <= a <= b < SYMBOLS_PER_SLOT


@lru_cache(maxsize=256)
def validate_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    """Reject timing plans that the slot format or duplex rules cannot carry."""
    if cfg.deadline_slots < 1:
        raise ScenarioError("deadline_slots must be >= 1")
    if cfg.sr_period_slots < 1:
        raise ScenarioError("sr_period_slots must be >= 1")
    if not 0.0 <= cfg.p_mismatch <= 1.0:
        raise ScenarioError("p_mismatch must lie in [0, 1]")
    if cfg.robustness_multiplier < 1.0:
        raise ScenarioError("robustness_multiplier must be >= 1")
    if cfg.freq_units < 1:
        raise ScenarioError("freq_units must be >= 1")
    try:
        cfg.numerology
        fmt = get_format(cfg.slot_format)
    except (KeyError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None

    t = cfg.timing
    gap = t.processing_gap_symbols
    if gap < 0:
        raise ScenarioError("processing_gap_symbols must be >= 0")
    flexible = cfg.mode is Mode.FLEXIBLE
    dl, ul = Direction.DOWNLINK, Direction.UPLINK

    def usable(name: str, span: Span, direction: Direction) -> None:
        if not _span_ok(span):
            raise ScenarioError(f"{name}={span} is not a span within 0..13")
        for i in range(span[0], span[1] + 1):
            if not validate_usage(fmt, i, direction, cfg.mode, flexible_as=cfg.direction):
                raise ScenarioError(
                    f"{name} symbol {i} ({fmt.symbols[i].value}) cannot carry "
                    f"{direction.value} in {cfg.mode.value} mode with format {fmt.name}")

    def after(name: str, start: int, prev_end: int, need: int) -> None:
        if start - prev_end < need:
            raise ScenarioError(f"{name} starts at {start}, needs >= {prev_end + need}")

    usable("dci_span", t.dci_span, dl)
    if cfg.direction is ul:
        usable("ul_data_span", t.ul_data_span, ul)
        usable("sr_symbol", (t.sr_symbol, t.sr_symbol), ul)
        after("ul_data_span", t.ul_data_span[0], t.dci_span[1], gap)
        if flexible:
            first, last = t.ul_data_span
            if not first < t.dtx_check_symbol <= last:
                raise ScenarioError("dtx_check_symbol must fall after the uplink start, inside the uplink span")
            usable("dci_retx_span", t.dci_retx_span, dl)
            after("dci_retx_span", t.dci_retx_span[0], t.dtx_check_symbol, 1)
            usable("recovery_data_span", t.recovery_data_span, ul)
            after("recovery_data_span", t.recovery_data_span[0], t.dci_retx_span[1], gap)
            if t.recovery_data_span[1] > last:
                raise ScenarioError("recovery_data_span must end within the uplink data span")
    else:
        usable("dl_data_span", t.dl_data_span, dl)
        usable("feedback_span", t.feedback_span, ul)
        after("dl_data_span", t.dl_data_span[0], t.dci_span[1], 1)
        after("feedback_span", t.feedback_span[0], t.dl_data_span[1], gap)
        if flexible:
            first, last = t.dl_data_span
            usable("early_nack_span", t.early_nack_span, ul)
            after("early_nack_span", t.early_nack_span[0], t.dci_span[1], gap)
            if not (first <= t.early_nack_span[0] and t.early_nack_span[1] < last):
                raise ScenarioError("early_nack_span must lie inside the downlink data span")
            after("abort_symbol", t.abort_symbol, t.early_nack_span[1], 1)
            usable("dci_retx_span", t.dci_retx_span, dl)
            after("dci_retx_span", t.dci_retx_span[0], t.abort_symbol, 1)
            usable("recovery_data_span", t.recovery_data_span, dl)
            if t.recovery_data_span[0] < t.dci_retx_span[0]:
                raise ScenarioError("recovery_data_span cannot start before its DCI")
            if t.recovery_data_span[1] > last:
                raise ScenarioError("recovery_data_span must end within the downlink data span")
    return cfg
