"""Per-node battery and radio consumption accounting.

A Battery holds charge in mAh, drains through radio states at the
currents of a ConsumptionProfile, recharges from a harvesting current,
and reports its residual fraction. Discharge above the 1C rate is
penalized by the Peukert exponent; at or below 1C the nominal charge is
drawn (capacity gains at low rates are not modeled).
"""

import math
from dataclasses import dataclass
from enum import Enum


class RadioState(Enum):
    """The four mutually exclusive things a node can do with its radio."""

    SLEEP = "sleep"
    IDLE = "idle"
    TX = "tx"
    RX = "rx"


@dataclass(frozen=True)
class ConsumptionProfile:
    """Current draws per radio state.

    Defaults are the Waspmote figures: 62 uA deep sleep, 9 mA active
    processor, 50.26 mA transmit and 49.56 mA receive. Transmit and
    receive include the processor current on top of the radio current;
    sleep does not.
    """

    sleep_ua: float = 62.0
    idle_ma: float = 9.0
    tx_ma: float = 50.26
    rx_ma: float = 49.56

    def __post_init__(self):
        if min(self.sleep_ua, self.idle_ma, self.tx_ma, self.rx_ma) <= 0:
            raise ValueError("all currents must be positive")
        if not (self.tx_ma >= self.rx_ma >= self.sleep_ua / 1000.0):
            raise ValueError("expected tx >= rx >= sleep current ordering")

    def current_ma(self, state: RadioState) -> float:
        """Total draw in mA while in a state (processor included for idle/tx/rx)."""
        if state is RadioState.SLEEP:
            return self.sleep_ua / 1000.0
        if state is RadioState.IDLE:
            return self.idle_ma
        if state is RadioState.TX:
            return self.tx_ma + self.idle_ma
        return self.rx_ma + self.idle_ma


class Battery:
    """A rechargeable cell tracked in mAh.

    Charge stays within [0, rated capacity]: draining floors at zero
    (the battery is then depleted) and charging saturates at the rated
    capacity. drain() and charge() return the charge actually moved, so
    callers can keep an exact energy ledger.
    """

    __slots__ = ("rated_capacity_mah", "voltage_v", "charge_mah", "peukert_n")

    def __init__(self, rated_capacity_mah: float, voltage_v: float = 3.7,
                 charge_mah: float = None, peukert_n: float = 1.0):
        if rated_capacity_mah <= 0:
            raise ValueError(f"capacity must be positive, got {rated_capacity_mah!r}")
        if peukert_n < 1.0:
            raise ValueError(f"Peukert number must be >= 1, got {peukert_n!r}")
        if charge_mah is None:
            charge_mah = rated_capacity_mah
        if not 0.0 <= charge_mah <= rated_capacity_mah:
            raise ValueError(f"charge {charge_mah!r} outside [0, {rated_capacity_mah!r}]")
        self.rated_capacity_mah = rated_capacity_mah
        self.voltage_v = voltage_v
        self.charge_mah = charge_mah
        self.peukert_n = peukert_n

    def copy(self) -> "Battery":
        return Battery(self.rated_capacity_mah, self.voltage_v, self.charge_mah, self.peukert_n)

    def __eq__(self, other):
        if not isinstance(other, Battery):
            return NotImplemented
        return (self.rated_capacity_mah, self.voltage_v, self.charge_mah, self.peukert_n) == \
            (other.rated_capacity_mah, other.voltage_v, other.charge_mah, other.peukert_n)

    @property
    def depleted(self) -> bool:
        return self.charge_mah <= 0.0

    @property
    def residual_fraction(self) -> float:
        """Remaining charge as a fraction of rated capacity, in [0, 1]."""
        return self.charge_mah / self.rated_capacity_mah

    def peukert_runtime(self, draw_a: float) -> float:
        """Hours a full battery lasts at a constant draw: C / I^n.

        C is the rated capacity in ampere-hours and I the draw in amperes.
        """
        if not (draw_a > 0.0 and math.isfinite(draw_a)):
            raise ValueError(f"draw must be positive, got {draw_a!r}")
        capacity_ah = self.rated_capacity_mah / 1000.0
        return capacity_ah / draw_a ** self.peukert_n

    def drain_current(self, current_ma: float, duration_s: float) -> float:
        """Drain at a constant current for a duration; returns mAh removed.

        Above the 1C reference rate (a current in mA equal to the rated
        capacity in mAh) the drawn charge is scaled by (I/1C)^(n-1); at
        or below 1C no penalty applies.
        """
        if duration_s < 0:
            raise ValueError(f"duration must be non-negative, got {duration_s!r}")
        if current_ma < 0:
            raise ValueError(f"current must be non-negative, got {current_ma!r}")
        drawn = current_ma * duration_s / 3600.0
        if self.peukert_n > 1.0 and current_ma > self.rated_capacity_mah:
            drawn *= (current_ma / self.rated_capacity_mah) ** (self.peukert_n - 1.0)
        actual = min(drawn, self.charge_mah)
        self.charge_mah -= actual
        return actual

    def drain(self, profile: ConsumptionProfile, state: RadioState, duration_s: float) -> float:
        """Drain for time spent in one radio state; returns mAh removed."""
        return self.drain_current(profile.current_ma(state), duration_s)

    def charge(self, current_ua: float, duration_s: float) -> float:
        """Charge at a constant current, saturating at capacity; returns mAh added."""
        if duration_s < 0:
            raise ValueError(f"duration must be non-negative, got {duration_s!r}")
        if current_ua < 0:
            raise ValueError(f"current must be non-negative, got {current_ua!r}")
        added = current_ua * duration_s / 3600.0 / 1000.0
        actual = min(added, self.rated_capacity_mah - self.charge_mah)
        self.charge_mah += actual
        return actual

    def __repr__(self):
        return (f"Battery({self.charge_mah:.3f}/{self.rated_capacity_mah:g} mAh, "
                f"{self.voltage_v:g} V, n={self.peukert_n:g})")
