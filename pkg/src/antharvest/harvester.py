"""Table-driven model of the Powercast harvester receivers.

Maps transmitter-receiver distance to harvested power, charging current
and battery recharge time for the four measured receiver/antenna pairs
(P2110 and P1110, each with a dipole or a patch antenna). Distances are
kept in feet, the unit the measurements were taken in; callers convert
at their own boundary (see sim.METERS_PER_FOOT).

Between measured knots the curves are interpolated log-linearly (linear
in distance, logarithmic in power and current): harvested power falls by
three-plus orders of magnitude over a few tens of feet, so linear
interpolation would badly overestimate mid-knot values. Beyond the last
knot the harvest is zero; below the first knot values clamp to the first
knot.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

RECEIVERS = ("P2110", "P1110")
ANTENNAS = ("dipole", "patch")

# Fraction of the per-curve mean that each knot's charge product
# (current_uA * recharge_h) may deviate by. The measured tables replenish
# a fixed charge per curve, so the product is nearly constant.
CHARGE_PRODUCT_TOLERANCE = 0.10


class NoHarvestError(ValueError):
    """Raised when a recharge time is requested with no charging current."""


@dataclass(frozen=True)
class Knot:
    """One measured table row."""

    distance_ft: float
    power_uw: float
    current_ua: float
    recharge_h: float


@dataclass(frozen=True)
class HarvestCurve:
    """Measured distance-to-harvest curve for one receiver/antenna pair."""

    receiver: str
    antenna: str
    knots: tuple

    def __post_init__(self):
        validate_curve(self)

    @property
    def max_distance_ft(self) -> float:
        return self.knots[-1].distance_ft

    def charge_products_uah(self) -> list:
        """current_uA * recharge_h per knot; nearly constant within a curve."""
        return [k.current_ua * k.recharge_h for k in self.knots]


def validate_curve(curve: HarvestCurve) -> None:
    """Check the structural invariants of a curve; raise ValueError if broken."""
    if curve.receiver not in RECEIVERS:
        raise ValueError(f"unknown receiver {curve.receiver!r}, expected one of {RECEIVERS}")
    if curve.antenna not in ANTENNAS:
        raise ValueError(f"unknown antenna {curve.antenna!r}, expected one of {ANTENNAS}")
    if len(curve.knots) < 2:
        raise ValueError(f"{curve.receiver}/{curve.antenna}: need at least 2 knots, got {len(curve.knots)}")
    for prev, cur in zip(curve.knots, curve.knots[1:]):
        if not cur.distance_ft > prev.distance_ft:
            raise ValueError(
                f"{curve.receiver}/{curve.antenna}: distances must be strictly increasing "
                f"({prev.distance_ft} then {cur.distance_ft})")
        if cur.power_uw > prev.power_uw or cur.current_ua > prev.current_ua:
            raise ValueError(
                f"{curve.receiver}/{curve.antenna}: power and current must not increase with distance")
        if cur.recharge_h < prev.recharge_h:
            raise ValueError(
                f"{curve.receiver}/{curve.antenna}: recharge time must not decrease with distance")
    for k in curve.knots:
        if k.power_uw <= 0 or k.current_ua <= 0 or k.recharge_h <= 0:
            raise ValueError(f"{curve.receiver}/{curve.antenna}: non-positive knot values")
    products = curve.charge_products_uah()
    center = sum(products) / len(products)
    worst = max(abs(p - center) / center for p in products)
    if worst > CHARGE_PRODUCT_TOLERANCE:
        raise ValueError(
            f"{curve.receiver}/{curve.antenna}: charge product varies {worst:.1%} from its mean, "
            f"above {CHARGE_PRODUCT_TOLERANCE:.0%}")


def _curve(receiver: str, antenna: str, rows: Iterable[tuple]) -> HarvestCurve:
    return HarvestCurve(receiver, antenna, tuple(Knot(*row) for row in rows))


# Measured harvest tables: (distance ft, power uW, current uA, recharge h).
_P2110_DIPOLE = (
    (2, 3687, 3073, 22.08),
    (5, 523, 436, 155.04),
    (10, 135, 112, 602.64),
    (12, 85, 71, 952.32),
    (15, 37, 31, 2169.12),
    (18, 11, 9, 7360.56),
    (20, 1, 1, 68339.28),
)
_P2110_PATCH = (
    (5, 1925, 1604, 42.24),
    (10, 386, 322, 210.50),
    (15, 189, 158, 429.40),
    (18, 131, 109, 618.5),
    (20, 102, 85, 797.50),
    (25, 50, 41, 1639.00),
    (30, 19, 16, 4353.00),
    (35, 5, 4, 15517.00),
    (36, 1, 1, 70019.00),
)
_P1110_DIPOLE = (
    (2, 3688, 922, 62.40),
    (4, 1085, 271, 211.92),
    (6, 259, 65, 888.72),
    (7, 86, 22, 2659.92),
)
_P1110_PATCH = (
    (2, 16115, 4029, 14.16),
    (4, 3070, 768, 74.88),
    (6, 1551, 388, 148.30),
    (8, 810, 203, 283.90),
    (10, 366, 92, 627.60),
    (12, 93, 23, 2475.00),
    (13, 26, 7, 8750.00),
)


def default_curves() -> dict:
    """The four embedded measurement curves, keyed by (receiver, antenna)."""
    return {
        ("P2110", "dipole"): _curve("P2110", "dipole", _P2110_DIPOLE),
        ("P2110", "patch"): _curve("P2110", "patch", _P2110_PATCH),
        ("P1110", "dipole"): _curve("P1110", "dipole", _P1110_DIPOLE),
        ("P1110", "patch"): _curve("P1110", "patch", _P1110_PATCH),
    }


def load_curves(text: str) -> dict:
    """Parse harvest curves from the documented override file format.

    The format is line oriented:

        # curve: receiver=P2110 antenna=dipole
        distance_ft,power_uW,current_uA,recharge_h
        2,3687,3073,22.08
        ...

    Several curves may follow each other in one file. Returns a dict
    keyed by (receiver, antenna). Raises ValueError on malformed input,
    including any curve that breaks the HarvestCurve invariants.
    """
    curves = {}
    tag = None
    header_seen = False
    rows = []

    def finish():
        nonlocal tag, rows, header_seen
        if tag is None:
            return
        receiver, antenna = tag
        curve = _curve(receiver, antenna, rows)
        curves[(receiver, antenna)] = curve
        tag, rows, header_seen = None, [], False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if not body.startswith("curve:"):
                continue  # plain comment
            finish()
            fields = dict(part.split("=", 1) for part in body[len("curve:"):].split())
            try:
                tag = (fields["receiver"], fields["antenna"])
            except KeyError as exc:
                raise ValueError(f"line {lineno}: curve tag needs receiver= and antenna=") from exc
            continue
        if tag is None:
            raise ValueError(f"line {lineno}: data before any '# curve:' tag")
        if not header_seen:
            cols = [c.strip() for c in line.split(",")]
            if cols != ["distance_ft", "power_uW", "current_uA", "recharge_h"]:
                raise ValueError(f"line {lineno}: bad header {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 columns, got {len(parts)}")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric value in {line!r}") from exc
    finish()
    if not curves:
        raise ValueError("no curves found in input")
    return curves


def harvest_at(curve: HarvestCurve, distance_ft: float) -> tuple:
    """Harvested (power uW, current uA) at a distance in feet.

    Exact at the measured knots, log-linear between them, clamped to the
    first knot below the measured range, and zero past the last knot.
    """
    if not (distance_ft > 0.0 and math.isfinite(distance_ft)):
        raise ValueError(f"distance must be positive, got {distance_ft!r}")
    knots = curve.knots
    if distance_ft <= knots[0].distance_ft:
        return (knots[0].power_uw, knots[0].current_ua)
    if distance_ft > knots[-1].distance_ft:
        return (0.0, 0.0)
    dists = [k.distance_ft for k in knots]
    i = int(np.searchsorted(dists, distance_ft))
    lo, hi = knots[i - 1], knots[i]
    if distance_ft == hi.distance_ft:
        return (hi.power_uw, hi.current_ua)
    t = (distance_ft - lo.distance_ft) / (hi.distance_ft - lo.distance_ft)
    power = math.exp(math.log(lo.power_uw) + t * (math.log(hi.power_uw) - math.log(lo.power_uw)))
    current = math.exp(math.log(lo.current_ua) + t * (math.log(hi.current_ua) - math.log(lo.current_ua)))
    return (power, current)


def recharge_time(capacity_drawn_mah: float, charging_current_ua: float) -> float:
    """Hours to replenish a drawn charge at a constant charging current.

    Raises NoHarvestError when the charging current is zero: the charge
    will never be replenished and there is no meaningful number to return.
    """
    if capacity_drawn_mah < 0:
        raise ValueError(f"drawn capacity must be non-negative, got {capacity_drawn_mah!r}")
    if charging_current_ua < 0:
        raise ValueError(f"charging current must be non-negative, got {charging_current_ua!r}")
    if capacity_drawn_mah == 0:
        return 0.0
    if charging_current_ua == 0:
        raise NoHarvestError("charging current is zero; the drawn charge is never replenished")
    return capacity_drawn_mah * 1000.0 / charging_current_ua


@dataclass
class HarvestSource:
    """A placed RF power transmitter feeding one harvest curve.

    position_m is the (x, y) location inside the deployment area; every
    node charges at the current given by the curve at its distance from
    this point.
    """

    position_m: tuple
    curve: HarvestCurve
    enabled: bool = True
