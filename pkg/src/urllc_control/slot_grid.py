"""NR numerology, 14-symbol slot formats and resource-element accounting."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

__all__ = [
    "FORMAT_CATALOG",
    "SYMBOLS_PER_SLOT",
    "Allocation",
    "Direction",
    "Mode",
    "Numerology",
    "SlotFormat",
    "SymbolType",
    "expand_frequency",
    "get_format",
    "numerology_from_mu",
    "resource_elements",
    "validate_usage",
]

SYMBOLS_PER_SLOT = 14


class Direction(enum.Enum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"


class Mode(enum.Enum):
    CONVENTIONAL = "conventional"
    FLEXIBLE = "flexible"


class SymbolType(enum.Enum):
    DOWNLINK = "D"
    UPLINK = "U"
    FLEXIBLE = "F"


@dataclass(frozen=True)
class Numerology:
    mu: int
    scs_khz: int
    slot_duration_ms: float
    symbol_duration_ms: float


@lru_cache(maxsize=None, typed=True)
def numerology_from_mu(mu: int) -> Numerology:
    if not isinstance(mu, int) or isinstance(mu, bool) or not 0 <= mu <= 4:
        raise ValueError(f"numerology mu must be an integer in 0..4, got {mu!r}")
    slot = 1.0 / (1 << mu)
    return Numerology(mu=mu, scs_khz=15 << mu, slot_duration_ms=slot,
                      symbol_duration_ms=slot / SYMBOLS_PER_SLOT)


@dataclass(frozen=True)
class SlotFormat:
    name: str
    symbols: tuple[SymbolType, ...]

    def __post_init__(self) -> None:
        if len(self.symbols) != SYMBOLS_PER_SLOT:
            raise ValueError(f"slot format {self.name!r} has {len(self.symbols)} symbols, need 14")

    @classmethod
    def from_pattern(cls, pattern: str, name: str | None = None) -> SlotFormat:
        """Build from a 14-letter string of ``D``/``U``/``F``."""
        try:
            symbols = tuple(SymbolType(ch) for ch in pattern.strip().upper())
        except ValueError:
            raise ValueError(f"slot pattern {pattern!r} may only contain D, U and F") from None
        return cls(name or pattern, symbols)

    @property
    def pattern(self) -> str:
        return "".join(s.value for s in self.symbols)


def _schematic(name: str, n_dl: int, n_ul: int) -> SlotFormat:
    # Leading downlink, flexible middle, trailing uplink.
    n_flex = SYMBOLS_PER_SLOT - n_dl - n_ul
    return SlotFormat.from_pattern("D" * n_dl + "F" * n_flex + "U" * n_ul, name)


# Schematic formats named by run length. Exact 3GPP format tables are not
# modelled.
FORMAT_CATALOG: dict[str, SlotFormat] = {
    f.name: f
    for f in (
        _schematic("D14", 14, 0),
        _schematic("U14", 0, 14),
        _schematic("F14", 0, 0),
        _schematic("D12F2", 12, 0),
        _schematic("F2U12", 0, 12),
        _schematic("D10F2U2", 10, 2),
        _schematic("D2F2U10", 2, 10),
        _schematic("D2F10U2", 2, 2),
    )
}


def get_format(name: str) -> SlotFormat:
    """Catalog lookup; a literal 14-letter ``D/U/F`` pattern is accepted too."""
    if name in FORMAT_CATALOG:
        return FORMAT_CATALOG[name]
    if len(name) == SYMBOLS_PER_SLOT and set(name.upper()) <= set("DUF"):
        return SlotFormat.from_pattern(name)
    raise KeyError(f"unknown slot format {name!r}; known: {', '.join(FORMAT_CATALOG)}")


def validate_usage(
    fmt: SlotFormat,
    symbol_index: int,
    direction: Direction,
    mode: Mode,
    flexible_as: Direction | None = None,
) -> bool:
    """Whether ``direction`` may use symbol ``symbol_index`` of ``fmt``.

    In conventional mode a flexible symbol serves only ``flexible_as`` (the
    direction the scenario configured it to); in flexible mode it serves
    both directions.
    """
    if not 0 <= symbol_index < SYMBOLS_PER_SLOT:
        raise IndexError(f"symbol index {symbol_index} outside 0..13")
    kind = fmt.symbols[symbol_index]
    if kind is SymbolType.FLEXIBLE:
        return mode is Mode.FLEXIBLE or flexible_as is direction
    if kind is SymbolType.DOWNLINK:
        return direction is Direction.DOWNLINK
    return direction is Direction.UPLINK


@dataclass(frozen=True)
class Allocation:
    first_symbol: int
    last_symbol: int
    freq_units: int

    def __post_init__(self) -> None:
        if not 0 <= self.first_symbol <= self.last_symbol:
            raise ValueError(f"bad symbol span {self.first_symbol}..{self.last_symbol}")
        if self.freq_units < 1:
            raise ValueError("freq_units must be >= 1")

    @property
    def n_symbols(self) -> int:
        return self.last_symbol - self.first_symbol + 1

    def shifted(self, offset: int) -> Allocation:
        return Allocation(self.first_symbol + offset, self.last_symbol + offset, self.freq_units)


def resource_elements(a: Allocation) -> int:
    return (a.last_symbol - a.first_symbol + 1) * a.freq_units


def expand_frequency(
    original: Allocation, new_first: int, new_last: int, multiplier: float = 1.0
) -> Allocation:
    """Move ``original`` onto a shorter span, widening it to keep its RE count.

    ``freq_units = ceil(original_RE / new_span)``, then scaled by
    ``multiplier`` (rounded up) for extra robustness.
    """
    span = new_last - new_first + 1
    if span < 1:
        raise ValueError(f"empty span {new_first}..{new_last}")
    if span > original.n_symbols:
        raise ValueError("expand_frequency only shortens: new span is longer than the original")
    if multiplier < 1.0:
        raise ValueError("multiplier must be >= 1")
    units = -(-resource_elements(original) // span)
    if multiplier != 1.0:
        units = math.ceil(units * multiplier)
    return Allocation(new_first, new_last, units)
