"""Closed-form delivery success probabilities and their event-tree oracles.

The closed forms are transcribed term by term. The enumerators build the
branch tree of the schedule-based procedures explicitly and never reuse the
closed-form expressions, so the two routes check each other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Literal, Sequence, Union

from .error_model import ControlErrorProfile, DataBlerProfile, validate_profiles

__all__ = [
    "Enumeration",
    "InfeasibleError",
    "OutcomeLeaf",
    "RegionPoint",
    "ReliabilityWarning",
    "boundary_bisect",
    "dl_tied_profiles",
    "enumerate_dl",
    "enumerate_ul",
    "p_dl_coherent",
    "p_dl_verbatim",
    "p_ul",
    "region_curve",
    "ul_tied_profiles",
    "verbatim_excess",
]

BISECT_FLOOR = 1e-9


class InfeasibleError(ValueError):
    """The target cannot be met even with a near-perfect control channel."""


class ReliabilityWarning(UserWarning):
    """A transcribed expression evaluated outside [0, 1]."""


@dataclass(frozen=True)
class OutcomeLeaf:
    path_label: str
    probability: float
    success: bool


@dataclass(frozen=True)
class Enumeration:
    leaves: tuple[OutcomeLeaf, ...]

    @property
    def success(self) -> float:
        return math.fsum(leaf.probability for leaf in self.leaves if leaf.success)

    @property
    def total(self) -> float:
        return math.fsum(leaf.probability for leaf in self.leaves)


@dataclass(frozen=True)
class RegionPoint:
    x: float
    y_boundary: float
    feasible: bool = True


def p_ul(c: ControlErrorProfile, d: DataBlerProfile) -> float:
    validate_profiles(c, d)
    sr, rg = c.eps_sr, c.eps_rg
    p1, p12, p2 = d.p1, d.p12, d.p2
    return (
        (1 - sr) * (1 - rg) * ((1 - p1) + p1 * (1 - rg) * (1 - p12))
        + sr * (1 - sr) * (1 - rg) * (1 - p1)
        + (1 - sr) * rg * (1 - rg) * (1 - p2)
    )


def _p_dl(c: ControlErrorProfile, d: DataBlerProfile, scale_nd_by_p1: bool) -> float:
    rg, na, nd, da, dn = c.eps_rg, c.eps_na, c.eps_nd, c.eps_da, c.eps_dn
    p1, p12, p2d, p2n = d.p1, d.p12, d.p2d, d.p2n
    nd_term = nd * (1 - rg) * (1 - p2d)
    if scale_nd_by_p1:
        nd_term *= p1
    return (
        (1 - rg) * ((1 - p1) + p1 * (1 - na - nd) * (1 - p12) + nd_term)
        + rg * (1 - rg) * (dn * (1 - p2n) + (1 - dn - da) * (1 - p2d))
    )


def p_dl_coherent(c: ControlErrorProfile, d: DataBlerProfile) -> float:
    """Downlink success probability with the NACK-as-DTX branch weighted by ``p1``.

    A NACK exists only after a failed initial decode, so that recovery branch
    carries the ``p1`` factor; with it the branches partition the sample space.
    """
    validate_profiles(c, d)
    return _p_dl(c, d, scale_nd_by_p1=True)


def p_dl_verbatim(c: ControlErrorProfile, d: DataBlerProfile) -> tuple[float, bool]:
    """Verbatim downlink expression, with its unscaled NACK-as-DTX term.

    Returns ``(value, exceeds_one)``. The value is not clamped; a
    ``ReliabilityWarning`` is emitted when it exceeds 1.
    """
    validate_profiles(c, d)
    value = _p_dl(c, d, scale_nd_by_p1=False)
    exceeds = value > 1.0
    if exceeds:
        warnings.warn(f"verbatim downlink expression evaluates to {value!r} > 1",
                      ReliabilityWarning, stacklevel=2)
    return value, exceeds


def verbatim_excess(c: ControlErrorProfile, d: DataBlerProfile) -> float:
    """``p_dl_verbatim - p_dl_coherent`` in closed form."""
    return (1 - c.eps_rg) ** 2 * (1 - d.p1) * c.eps_nd * (1 - d.p2d)


# A tree node is either a terminal success flag or a list of
# (label, probability, subtree) branches.
_Tree = Union[bool, list]


def _flatten(tree: _Tree, prefix: tuple[str, ...] = (), prob: float = 1.0) -> Iterable[OutcomeLeaf]:
    if isinstance(tree, bool):
        yield OutcomeLeaf(" / ".join(prefix), prob, tree)
        return
    for label, p, sub in tree:
        yield from _flatten(sub, prefix + (label,), prob * p)


def _decode(p_fail: float, label: str, on_fail: _Tree = False) -> list:
    return [(f"{label} ok", 1 - p_fail, True), (f"{label} fail", p_fail, on_fail)]


def _grant(eps_rg: float, label: str, on_ok: _Tree, on_miss: _Tree = False) -> list:
    return [(f"{label} ok", 1 - eps_rg, on_ok), (f"{label} miss", eps_rg, on_miss)]


def enumerate_ul(c: ControlErrorProfile, d: DataBlerProfile) -> Enumeration:
    """Every branch of the uplink procedure with at most one retransmission.

    SR, first grant, first decode; a failed decode needs a second grant and a
    combined decode. A missed first grant is followed by a second grant and a
    robust single decode. A missed first SR leaves time for a second SR with a
    single grant and decode.
    """
    validate_profiles(c, d)
    rg = c.eps_rg
    after_tx1_fail = _grant(rg, "RG2", _decode(d.p12, "retx"))
    first_round = _grant(rg, "RG", _decode(d.p1, "tx1", after_tx1_fail),
                         on_miss=_grant(rg, "RG2", _decode(d.p2, "robust tx")))
    late_round = _grant(rg, "RG", _decode(d.p1, "tx1"))
    tree = [
        ("SR ok", 1 - c.eps_sr, first_round),
        ("SR miss", c.eps_sr, [("SR2 ok", 1 - c.eps_sr, late_round),
                               ("SR2 miss", c.eps_sr, False)]),
    ]
    return Enumeration(tuple(_flatten(tree)))


def _feedback(row: dict[str, float], branches: dict[str, _Tree]) -> list:
    return [(label, row[label], branches[label]) for label in ("ACK", "NACK", "DTX")]


def enumerate_dl(c: ControlErrorProfile, d: DataBlerProfile) -> Enumeration:
    """Every branch of the downlink procedure with at most one retransmission.

    A NACK detected as NACK triggers a non-adaptive retransmission that the UE,
    holding the HARQ context, receives without decoding a new grant. Every
    other retransmission is announced by a grant that can be missed.
    """
    validate_profiles(c, d)
    rg = c.eps_rg
    nack_row = {"ACK": c.eps_na, "DTX": c.eps_nd, "NACK": 1 - c.eps_na - c.eps_nd}
    dtx_row = {"ACK": c.eps_da, "NACK": c.eps_dn, "DTX": 1 - c.eps_da - c.eps_dn}
    after_nack = _feedback(nack_row, {
        "ACK": False,
        "NACK": [("RG2 implicit", 1.0, _decode(d.p12, "retx"))],
        "DTX": _grant(rg, "RG2", _decode(d.p2d, "robust retx")),
    })
    after_missed_grant = _feedback(dtx_row, {
        "ACK": False,
        "NACK": _grant(rg, "RG2", _decode(d.p2n, "retx w/o combining")),
        "DTX": _grant(rg, "RG2", _decode(d.p2d, "robust retx")),
    })
    tree = _grant(rg, "RG", _decode(d.p1, "tx1", after_nack), on_miss=after_missed_grant)
    return Enumeration(tuple(_flatten(tree)))


def boundary_bisect(
    reliability_fn: Callable[[float], float],
    target: float,
    *,
    lo: float = BISECT_FLOOR,
    hi: float = 1.0,
    rtol: float = 1e-3,
) -> float:
    """Largest control error rate whose success probability still meets ``target``.

    Bisects on ``log10(eps)`` over ``[lo, hi]`` for a non-increasing
    ``reliability_fn`` and returns the feasible end of the final bracket, whose
    width is below ``rtol`` in relative terms. Returns ``hi`` when the whole
    domain is feasible.
    """
    if reliability_fn(lo) < target:
        raise InfeasibleError(
            f"target {target!r} unreachable even at eps={lo!r} "
            f"(success {reliability_fn(lo)!r})")
    if reliability_fn(hi) >= target:
        return hi
    a, b = math.log10(lo), math.log10(hi)
    width = math.log10(1.0 + rtol)
    while b - a > width:
        mid = 0.5 * (a + b)
        if reliability_fn(10.0 ** mid) >= target:
            a = mid
        else:
            b = mid
    return 10.0 ** a


Direction = Literal["uplink", "downlink"]
Formula = Literal["coherent", "verbatim"]


def ul_tied_profiles(x: float, y: float, d: DataBlerProfile, tie: bool = True):
    """Uplink sweep point: ``x`` is the SR error rate, ``y`` the RG error rate."""
    blers = d.replace(p2=d.p1) if tie else d
    return ControlErrorProfile(eps_sr=x, eps_rg=y), blers


def dl_tied_profiles(x: float, y: float, d: DataBlerProfile, tie: bool = True):
    """Downlink sweep point: ``x`` is the RG error rate, ``y`` every feedback confusion rate."""
    blers = d.replace(p2n=d.p1) if tie else d
    return ControlErrorProfile.tied_feedback(eps_rg=x, eps_and=y), blers


def _reliability(direction: Direction, formula: Formula) -> Callable:
    if direction == "uplink":
        return lambda c, d: p_ul(c, d)
    if formula == "coherent":
        return lambda c, d: p_dl_coherent(c, d)
    # Sweeps evaluate the raw expression; the >1 warning is reported per point instead.
    return lambda c, d: (validate_profiles(c, d), _p_dl(c, d, scale_nd_by_p1=False))[1]


def region_curve(
    direction: Direction,
    fixed: DataBlerProfile,
    x_grid: Sequence[float],
    target: float,
    *,
    tie: bool = True,
    formula: Formula = "coherent",
) -> list[RegionPoint]:
    """Boundary of the companion error rate for each swept control error rate.

    Uplink sweeps the SR error rate and bisects the RG error rate; downlink
    sweeps the RG error rate and bisects the common feedback confusion rate
    (capped at 0.5 so each confusion row stays a distribution). Points whose
    target is unreachable are returned with ``y_boundary=0`` and
    ``feasible=False``.
    """
    xs = list(x_grid)
    if any(not 0.0 < x < 1.0 for x in xs):
        raise ValueError("x_grid values must lie in (0, 1)")
    if any(b < a for a, b in zip(xs, xs[1:])):
        raise ValueError("x_grid must be sorted ascending")
    build = ul_tied_profiles if direction == "uplink" else dl_tied_profiles
    hi = 1.0 if direction == "uplink" else 0.5
    rel = _reliability(direction, formula)
    points = []
    for x in xs:
        fn = lambda y, x=x: rel(*build(x, y, fixed, tie))
        try:
            y = boundary_bisect(fn, target, hi=hi)
        except InfeasibleError:
            points.append(RegionPoint(x, 0.0, False))
        else:
            points.append(RegionPoint(x, y, True))
    return points
