"""Readable trace dumps and whole-trace consistency checks."""

from __future__ import annotations

from ..slot_grid import SYMBOLS_PER_SLOT, Numerology, resource_elements
from .types import Actor, EventKind, TraceEvent, TransactionOutcome

__all__ = ["format_trace", "re_conserved", "ue_half_duplex_ok"]

_UE_TX = {EventKind.SR_SENT, EventKind.UL_DATA_TX, EventKind.FEEDBACK_SENT, EventKind.EARLY_NACK}
_GNB_TO_UE_CONTROL = {EventKind.DCI_SENT, EventKind.DCI_RETX}
_DATA_TX = {EventKind.UL_DATA_TX, EventKind.DL_DATA_TX}


def format_trace(outcome: TransactionOutcome, numerology: Numerology) -> str:
    sym = numerology.symbol_duration_ms
    lines = []
    for ev in outcome.trace:
        slot, s = divmod(ev.global_symbol_time, SYMBOLS_PER_SLOT)
        span = "" if ev.end_time is None else f"..{ev.end_time}"
        extra = []
        if ev.signal is not None:
            extra.append(str(ev.signal))
        if ev.allocation is not None:
            a = ev.allocation
            extra.append(f"{a.n_symbols} sym x {a.freq_units} = {resource_elements(a)} RE")
        lines.append(
            f"t={ev.global_symbol_time:>3}{span:<5} slot {slot} sym {s:>2} "
            f"{ev.global_symbol_time * sym:8.5f} ms  {str(ev.actor):<3} {ev.kind.value}"
            + (f" ({', '.join(extra)})" if extra else ""))
    if outcome.success:
        lines.append(f"=> delivered, latency {outcome.latency_symbols} sym = {outcome.latency_ms:.5f} ms, "
                     f"RE used {outcome.re_used}, wasted {outcome.re_wasted}")
    else:
        lines.append(f"=> failed, RE used {outcome.re_used}, wasted {outcome.re_wasted}")
    return "\n".join(lines)


def _symbols(ev: TraceEvent) -> set[int]:
    return set(range(ev.global_symbol_time, ev.last_symbol + 1))


def ue_half_duplex_ok(trace: list[TraceEvent]) -> bool:
    """No UE transmission overlaps a symbol in which the UE must receive.

    The UE must receive every DCI and every downlink data symbol, except the
    remainder of a downlink transmission it rejected with an early NACK.
    """
    tx: set[int] = set()
    for ev in trace:
        if ev.actor is Actor.UE and ev.kind in _UE_TX:
            tx |= _symbols(ev)
    rejected: set[int] = set()
    for ev in trace:
        if ev.kind is EventKind.EARLY_NACK:
            for data in trace:
                if data.kind is EventKind.DL_DATA_TX and data.global_symbol_time <= ev.global_symbol_time <= data.last_symbol:
                    rejected |= set(range(ev.global_symbol_time, data.last_symbol + 1))
    for ev in trace:
        if ev.actor is Actor.GNB and ev.kind in _GNB_TO_UE_CONTROL and _symbols(ev) & tx:
            return False
        if ev.kind is EventKind.DL_DATA_TX and (_symbols(ev) - rejected) & tx:
            return False
    return True


def re_conserved(outcome: TransactionOutcome) -> bool:
    total = sum(resource_elements(ev.allocation) for ev in outcome.trace
                if ev.kind in _DATA_TX and ev.allocation is not None)
    return total == outcome.re_used + outcome.re_wasted
