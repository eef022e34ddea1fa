"""Symbol-level schedule-based HARQ transactions.

One call runs one packet through the uplink or downlink procedure, in either
the conventional slot structure or the flexible one (in-slot DCI
retransmission for uplink, early NACK with same-slot recovery for downlink).

Each kind of random event draws from its own sub-stream of the trial's
``TrialRng`` (SR, DCI, in-slot DCI, data decode, feedback, MCS, early NACK).
The k-th decode of a trial therefore sees the same uniform in both modes,
which is what makes paired mode comparisons pathwise.
"""

from __future__ import annotations

from ..error_model import (
    ControlErrorProfile,
    DataBlerProfile,
    FeedbackSignal,
    TrialRng,
    detect_feedback,
    validate_profiles,
)
from ..slot_grid import SYMBOLS_PER_SLOT, Allocation, Direction, Mode, expand_frequency, resource_elements
from .types import (
    Actor,
    ChannelState,
    EventKind,
    ScenarioConfig,
    ScenarioError,
    TraceEvent,
    TransactionOutcome,
    validate_scenario,
)

__all__ = ["MAX_ROUNDS", "run_dl_trial", "run_trial", "run_ul_trial"]

# Initial transmission plus at most one retransmission.
MAX_ROUNDS = 2

_SR, _DCI, _DCI_RETX, _DATA, _FEEDBACK, _MCS, _EARLY_NACK = range(1, 8)
_FORCED_BY_STREAM = {
    _SR: "miss_first_sr",
    _DCI: "miss_first_dci",
    _MCS: "inappropriate_mcs",
    _DATA: "fail_first_decode",
}

UE, GNB = Actor.UE, Actor.GNB
K = EventKind
_ACK, _NACK, _DTX = FeedbackSignal.ACK, FeedbackSignal.NACK, FeedbackSignal.DTX
S = SYMBOLS_PER_SLOT
# The MCS the channel supports; a mismatch grants one index above it.
_NOMINAL_MCS = 10


class _Trial:
    __slots__ = ("rng", "forced", "streams", "trace", "re_used", "re_wasted", "tx_count")

    def __init__(self, rng: TrialRng, forced: tuple[str, ...], record: bool) -> None:
        self.rng = rng
        self.forced = forced
        self.streams: dict[int, TrialRng] = {}
        self.trace: list[TraceEvent] | None = [] if record else None
        self.re_used = 0
        self.re_wasted = 0
        self.tx_count = 0

    def stream(self, sid: int) -> TrialRng:
        s = self.streams.get(sid)
        if s is None:
            s = self.streams[sid] = self.rng.spawn(sid)
        return s

    def event(self, p: float, sid: int) -> bool:
        """Bernoulli(p) on sub-stream ``sid``; forced events override the first draw only."""
        s = self.streams.get(sid)
        first = s is None
        if first:
            s = self.streams[sid] = self.rng.spawn(sid)
        hit = s.uniform() < p
        if first and self.forced and _FORCED_BY_STREAM.get(sid) in self.forced:
            return True
        return hit

    def emit(self, time: int, actor: Actor, kind: EventKind, end: int | None = None,
             allocation: Allocation | None = None, signal: FeedbackSignal | None = None) -> None:
        if self.trace is not None:
            self.trace.append(TraceEvent(time, actor, kind, end, allocation, signal))

    def transmitted(self, alloc: Allocation, wasted: bool = False) -> None:
        self.tx_count += 1
        if wasted:
            self.re_wasted += resource_elements(alloc)
        else:
            self.re_used += resource_elements(alloc)


def _outcome(cfg: ScenarioConfig, tr: _Trial, start: int, decoded_at: int | None,
             affected: bool) -> TransactionOutcome:
    if decoded_at is None:
        latency_sym, latency_ms = None, None
    else:
        latency_sym = decoded_at - start
        latency_ms = latency_sym * cfg.numerology.symbol_duration_ms
    return TransactionOutcome(
        success=decoded_at is not None,
        start_time=start,
        latency_symbols=latency_sym,
        latency_ms=latency_ms,
        re_used=tr.re_used,
        re_wasted=tr.re_wasted,
        attempts_data=tr.tx_count,
        affected=affected,
        trace=tr.trace if tr.trace is not None else [],
    )


def run_ul_trial(cfg: ScenarioConfig, c: ControlErrorProfile, d: DataBlerProfile,
                 rng: TrialRng, record: bool = True) -> TransactionOutcome:
    """Uplink: SR, grant, data, and gNB-side decode with one retransmission.

    Latency runs from the SR symbol of slot 0 to the last symbol of the
    decoded transmission; data must complete within ``deadline_slots`` slots
    of that SR.
    """
    if cfg.direction is not Direction.UPLINK:
        raise ScenarioError("run_ul_trial needs an uplink scenario")
    validate_scenario(cfg)
    validate_profiles(c, d)
    return _ul(cfg, c, d, rng, record)


def _ul(cfg, c, d, rng, record):
    tr = _Trial(rng, cfg.forced_events, record)
    t = cfg.timing
    flexible = cfg.mode is Mode.FLEXIBLE
    start = t.sr_symbol
    limit = start + cfg.deadline_slots * S
    dci0, dci1 = t.dci_span
    ul0, ul1 = t.ul_data_span
    planned = Allocation(ul0, ul1, cfg.freq_units)
    recovery = (expand_frequency(planned, *t.recovery_data_span, cfg.robustness_multiplier)
                if flexible else None)
    period = cfg.sr_period_slots
    eps_rg = c.eps_rg

    serving = False        # gNB detected the SR
    ue_granted = False     # UE decoded at least one grant, so stops sending SR
    grant_slot = -1
    rounds = 0
    decodes = 0
    robust = False         # gNB saw the UE miss a grant before any data arrived
    affected = False
    decoded_at = None
    slot = 0
    while True:
        base = slot * S
        if slot == grant_slot:
            rounds += 1
            tr.emit(base + dci0, GNB, K.DCI_SENT, base + dci1)
            alloc = None
            if tr.event(eps_rg, _DCI):
                affected = affected or rounds == 1
                tr.emit(base + dci0, UE, K.DCI_MISSED, base + dci1)
                tr.emit(base + t.dtx_check_symbol, GNB, K.DTX_DECLARED)
                if decodes == 0:
                    robust = True
                if flexible:
                    r0, r1 = t.dci_retx_span
                    tr.emit(base + r0, GNB, K.DCI_RETX, base + r1)
                    if tr.event(eps_rg, _DCI_RETX):
                        tr.emit(base + r0, UE, K.DCI_MISSED, base + r1)
                    else:
                        alloc = recovery.shifted(base)
            else:
                alloc = planned.shifted(base)
            if alloc is not None:
                ue_granted = True
                tr.transmitted(alloc)
                tr.emit(alloc.first_symbol, UE, K.UL_DATA_TX, alloc.last_symbol, alloc)
                bler = d.p12 if decodes else (d.p2 if robust else d.p1)
                decodes += 1
                if tr.event(bler, _DATA):
                    tr.emit(alloc.last_symbol, GNB, K.DATA_DECODE_FAIL)
                else:
                    tr.emit(alloc.last_symbol, GNB, K.DATA_DECODE_OK)
                    decoded_at = alloc.last_symbol
                    break
            if rounds >= MAX_ROUNDS:
                tr.emit(max(limit, base + S - 1), GNB, K.DEADLINE_EXPIRED)
                break
            grant_slot = slot + 1

        if not ue_granted and slot % period == 0:
            tr.emit(base + t.sr_symbol, UE, K.SR_SENT)
            if not serving:
                if tr.event(c.eps_sr, _SR):
                    tr.emit(base + t.sr_symbol, GNB, K.SR_MISSED)
                else:
                    serving = True
                    grant_slot = slot + 1

        if grant_slot > slot:
            next_data_slot = grant_slot
        else:
            next_sr = (slot // period + 1) * period
            next_data_slot = next_sr + 1
        if next_data_slot * S + ul1 > limit:
            tr.emit(limit, GNB, K.DEADLINE_EXPIRED)
            break
        slot += 1
    return _outcome(cfg, tr, start, decoded_at, affected)


def run_dl_trial(cfg: ScenarioConfig, c: ControlErrorProfile, d: DataBlerProfile,
                 rng: TrialRng, record: bool = True) -> TransactionOutcome:
    """Downlink: grant, data, HARQ feedback, and one retransmission.

    After a detected NACK the retransmission is non-adaptive: a UE holding
    the HARQ context receives it without decoding a new grant, while a UE
    that missed the first grant must decode the new one. After a detected
    DTX the retransmission is adaptive and robust, so its grant can be missed.
    """
    if cfg.direction is not Direction.DOWNLINK:
        raise ScenarioError("run_dl_trial needs a downlink scenario")
    validate_scenario(cfg)
    validate_profiles(c, d)
    return _dl(cfg, c, d, rng, record)


_INITIAL, _NACK_RETX, _ADAPTIVE = range(3)


def _dl(cfg, c, d, rng, record):
    tr = _Trial(rng, cfg.forced_events, record)
    t = cfg.timing
    flexible = cfg.mode is Mode.FLEXIBLE
    start = t.dci_span[0]
    limit = start + cfg.deadline_slots * S
    dci0, dci1 = t.dci_span
    dl0, dl1 = t.dl_data_span
    fb0, fb1 = t.feedback_span
    planned = Allocation(dl0, dl1, cfg.freq_units)
    recovery = (expand_frequency(planned, *t.recovery_data_span, cfg.robustness_multiplier)
                if flexible else None)
    eps_rg = c.eps_rg

    ue_context = False     # UE holds undecoded soft bits of the latest transmission
    decoded_at = None
    affected = False
    decodes = 0
    action = _INITIAL
    rounds = 0
    slot = 0
    while True:
        base = slot * S
        rounds += 1
        heard = True       # UE decoded the grant of this round's (last) transmission

        def receive(alloc: Allocation, bler: float) -> None:
            nonlocal decoded_at, ue_context, decodes
            decodes += 1
            if tr.event(bler, _DATA):
                ue_context = True
                tr.emit(alloc.last_symbol, UE, K.DATA_DECODE_FAIL)
            else:
                ue_context = False
                decoded_at = alloc.last_symbol
                tr.emit(alloc.last_symbol, UE, K.DATA_DECODE_OK)

        data = planned.shifted(base)
        tr.emit(base + dci0, GNB, K.DCI_SENT, base + dci1)
        if action == _INITIAL:
            if tr.event(eps_rg, _DCI):
                heard = False
                tr.emit(base + dci0, UE, K.DCI_MISSED, base + dci1)
                tr.transmitted(data)
                tr.emit(data.first_symbol, GNB, K.DL_DATA_TX, data.last_symbol, data)
            else:
                state = ChannelState(_NOMINAL_MCS, _NOMINAL_MCS + tr.event(cfg.p_mismatch, _MCS))
                mismatch = affected = state.inappropriate
                if flexible and mismatch:
                    e0, e1 = base + t.early_nack_span[0], base + t.early_nack_span[1]
                    lost = cfg.early_nack_errors and tr.event(c.eps_nd, _EARLY_NACK)
                    if lost:
                        tr.transmitted(data)
                        tr.emit(data.first_symbol, GNB, K.DL_DATA_TX, data.last_symbol, data)
                        tr.emit(e0, UE, K.EARLY_NACK, e1, signal=_NACK)
                        # The UE left reception to send the early NACK; decoding cannot succeed.
                        decodes += 1
                        ue_context = True
                        tr.emit(data.last_symbol, UE, K.DATA_DECODE_FAIL)
                    else:
                        cut = Allocation(data.first_symbol, base + t.abort_symbol - 1, cfg.freq_units)
                        tr.transmitted(cut, wasted=True)
                        tr.emit(cut.first_symbol, GNB, K.DL_DATA_TX, cut.last_symbol, cut)
                        tr.emit(e0, UE, K.EARLY_NACK, e1, signal=_NACK)
                        tr.emit(base + t.abort_symbol, GNB, K.TX_ABORTED)
                        r0, r1 = t.dci_retx_span
                        tr.emit(base + r0, GNB, K.DCI_RETX, base + r1)
                        rec = recovery.shifted(base)
                        missed = tr.event(eps_rg, _DCI_RETX)
                        tr.transmitted(rec)
                        if missed:
                            heard = False
                            ue_context = False
                            tr.emit(base + r0, UE, K.DCI_MISSED, base + r1)
                            tr.emit(rec.first_symbol, GNB, K.DL_DATA_TX, rec.last_symbol, rec)
                        else:
                            tr.emit(rec.first_symbol, GNB, K.DL_DATA_TX, rec.last_symbol, rec)
                            receive(rec, d.p2d)
                else:
                    tr.transmitted(data)
                    tr.emit(data.first_symbol, GNB, K.DL_DATA_TX, data.last_symbol, data)
                    receive(data, d.p_bad if mismatch else d.p1)
        else:
            adaptive = action == _ADAPTIVE
            # A UE holding the HARQ context (or already done) follows a
            # non-adaptive retransmission without decoding its grant.
            needs_grant = adaptive or not (ue_context or decoded_at is not None)
            if needs_grant and tr.event(eps_rg, _DCI):
                heard = False
                tr.emit(base + dci0, UE, K.DCI_MISSED, base + dci1)
            unnecessary = decoded_at is not None
            tr.transmitted(data, wasted=unnecessary)
            tr.emit(data.first_symbol, GNB, K.DL_DATA_TX, data.last_symbol, data)
            if heard and not unnecessary:
                if adaptive:
                    bler = d.p2d
                else:
                    bler = d.p12 if ue_context else d.p2n
                receive(data, bler)

        if not heard:
            sent = _DTX
        else:
            sent = _ACK if decoded_at is not None else _NACK
            tr.emit(base + fb0, UE, K.FEEDBACK_SENT, base + fb1, signal=sent)

        if rounds >= MAX_ROUNDS or (slot + 1) * S + dl1 > limit:
            if decoded_at is None:
                tr.emit(max(limit, base + fb1), GNB, K.DEADLINE_EXPIRED)
            break
        detected = detect_feedback(sent, c, tr.stream(_FEEDBACK))
        tr.emit(base + fb1, GNB, K.FEEDBACK_DETECTED, signal=detected)
        if detected is _ACK:
            break
        action = _NACK_RETX if detected is _NACK else _ADAPTIVE
        slot += 1
    return _outcome(cfg, tr, start, decoded_at, affected)


def run_trial(cfg: ScenarioConfig, c: ControlErrorProfile, d: DataBlerProfile,
              rng: TrialRng, record: bool = True) -> TransactionOutcome:
    if cfg.direction is Direction.UPLINK:
        return run_ul_trial(cfg, c, d, rng, record)
    return run_dl_trial(cfg, c, d, rng, record)
