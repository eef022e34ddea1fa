"""Stochastic error events of the control and data channels.

Every error rate is an input probability; a trial realizes each one as an
independent Bernoulli draw from a per-trial random stream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

__all__ = [
    "ControlErrorProfile",
    "DataBlerProfile",
    "FeedbackSignal",
    "ProfileError",
    "TrialRng",
    "detect_feedback",
    "mix64",
    "sample_event",
    "validate_profiles",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD1B54A32D192ED03
_INV_2_53 = 1.0 / (1 << 53)


class ProfileError(ValueError):
    """Raised when an error/BLER profile violates its invariants."""


@dataclass(frozen=True)
class ControlErrorProfile:
    """Control-channel error probabilities.

    The feedback confusion rates follow the ``eps_<sent><detected>`` naming:
    ``eps_na`` is a NACK detected as ACK, ``eps_dn`` a DTX detected as NACK,
    and so on. ``eps_an`` never enters the closed forms; the simulator uses it
    to account for unnecessary retransmissions.
    """

    eps_sr: float = 0.0
    eps_rg: float = 0.0
    eps_na: float = 0.0
    eps_nd: float = 0.0
    eps_da: float = 0.0
    eps_dn: float = 0.0
    eps_an: float = 0.0

    def replace(self, **changes: float) -> ControlErrorProfile:
        return ControlErrorProfile(**{**self.as_dict(), **changes})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def tied_feedback(cls, eps_rg: float, eps_and: float, eps_sr: float = 0.0) -> ControlErrorProfile:
        """Profile with all four NACK/DTX confusion rates set to ``eps_and``."""
        return cls(eps_sr=eps_sr, eps_rg=eps_rg, eps_na=eps_and, eps_nd=eps_and,
                   eps_da=eps_and, eps_dn=eps_and)


@dataclass(frozen=True)
class DataBlerProfile:
    """Data-channel block error rates per transmission round.

    ``p1`` initial attempt, ``p12`` after soft-combining initial and
    retransmission, ``p2`` a single robust uplink attempt after a missed grant,
    ``p2d`` robust downlink retransmission after a detected DTX, ``p2n``
    retransmission that wrongly assumes soft combining, ``p_bad`` initial
    attempt under an inappropriate MCS (simulator only).
    """

    p1: float = 0.0
    p12: float = 0.0
    p2: float = 0.0
    p2d: float = 0.0
    p2n: float = 0.0
    p_bad: float = 0.9

    def replace(self, **changes: float) -> DataBlerProfile:
        return DataBlerProfile(**{**self.as_dict(), **changes})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class FeedbackSignal(enum.Enum):
    ACK = "Ack"
    NACK = "Nack"
    DTX = "Dtx"

    def __str__(self) -> str:
        return self.value


def validate_profiles(
    c: ControlErrorProfile, d: DataBlerProfile
) -> tuple[ControlErrorProfile, DataBlerProfile]:
    """Return ``(c, d)`` unchanged if every invariant holds, else raise ``ProfileError``."""
    for profile in (c, d):
        for name, value in profile.as_dict().items():
            if not isinstance(value, (int, float)) or value != value:
                raise ProfileError(f"{name} must be a number, got {value!r}")
            if not 0.0 <= value <= 1.0:
                raise ProfileError(f"{name}={value!r} is outside [0, 1]")
    if c.eps_na + c.eps_nd > 1.0:
        raise ProfileError("confusion row sum > 1: eps_na + eps_nd")
    if c.eps_da + c.eps_dn > 1.0:
        raise ProfileError("confusion row sum > 1: eps_da + eps_dn")
    if d.p12 > d.p1:
        raise ProfileError(f"p12={d.p12!r} exceeds p1={d.p1!r}; combining never hurts")
    return c, d


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class TrialRng:
    """Counter-based random stream owned by a single trial.

    The initial state is derived from ``(master_seed, trial_index, stream)``::

        key   = mix64(master_seed mod 2**64)
        key   = mix64(key ^ ((trial_index + 1) * GOLDEN mod 2**64))
        state = mix64(key ^ ((stream + 1) * SALT mod 2**64))

    and each step advances ``state += GOLDEN`` and emits ``mix64(state)``
    (SplitMix64). ``stream`` selects an independent sub-stream of the same
    trial, which the simulator uses to pin each kind of event to its own
    sequence of draws.
    """

    __slots__ = ("master_seed", "trial_index", "stream", "_key", "_state")

    def __init__(self, master_seed: int, trial_index: int, stream: int = 0) -> None:
        if trial_index < 0 or stream < 0:
            raise ValueError("trial_index and stream must be non-negative")
        self.master_seed = master_seed
        self.trial_index = trial_index
        self.stream = stream
        key = mix64(master_seed & MASK64)
        self._key = key = mix64(key ^ (((trial_index + 1) * _GOLDEN) & MASK64))
        self._state = mix64(key ^ (((stream + 1) * _STREAM_SALT) & MASK64))

    def spawn(self, stream: int) -> TrialRng:
        if stream < 0:
            raise ValueError("trial_index and stream must be non-negative")
        # Same result as TrialRng(master_seed, trial_index, stream), reusing the trial key.
        child = TrialRng.__new__(TrialRng)
        child.master_seed = self.master_seed
        child.trial_index = self.trial_index
        child.stream = stream
        child._key = self._key
        child._state = mix64(self._key ^ (((stream + 1) * _STREAM_SALT) & MASK64))
        return child

    def next_u64(self) -> int:
        self._state = s = (self._state + _GOLDEN) & MASK64
        s = ((s ^ (s >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        s = ((s ^ (s >> 27)) * 0x94D049BB133111EB) & MASK64
        return s ^ (s >> 31)

    def uniform(self) -> float:
        """One stream step mapped to a double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53


def sample_event(p: float, rng: TrialRng) -> bool:
    """Bernoulli(p) realization consuming exactly one stream step."""
    return rng.uniform() < p


def detect_feedback(
    sent: FeedbackSignal, c: ControlErrorProfile, rng: TrialRng
) -> FeedbackSignal:
    """What the gNB detects when the UE emitted ``sent`` (one stream step)."""
    u = rng.uniform()
    if sent is FeedbackSignal.NACK:
        if u < c.eps_na:
            return FeedbackSignal.ACK
        if u < c.eps_na + c.eps_nd:
            return FeedbackSignal.DTX
        return FeedbackSignal.NACK
    if sent is FeedbackSignal.DTX:
        if u < c.eps_da:
            return FeedbackSignal.ACK
        if u < c.eps_da + c.eps_dn:
            return FeedbackSignal.NACK
        return FeedbackSignal.DTX
    return FeedbackSignal.NACK if u < c.eps_an else FeedbackSignal.ACK
