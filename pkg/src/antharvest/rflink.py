"""Free-space RF link-budget math.

Pure functions over SI units (watts, meters, hertz). Decibel and other
non-SI conversions happen only at the edges of this module.

Functions:
- dbi_to_linear / linear_to_dbi: antenna gain conversions.
- wavelength: carrier wavelength from frequency.
- friis_received_power: received power over a free-space link.
- isotropic_power_density / directional_power_density: W/m^2 at range.
- gain_from_intensities: gain as a ratio of radiation intensities.

The far-field (Friis) formula is applied as-is at any positive range;
no near-field validity check is performed, so very short ranges return
the ideal free-space value, which upper-bounds what a real receiver
sees.
"""

import math
from dataclasses import dataclass

# Propagation speed used for wavelength, m/s. Rounded engineering value,
# kept exact so derived figures are reproducible.
SPEED_OF_LIGHT = 3.0e8


def dbi_to_linear(gain_dbi: float) -> float:
    """Convert an antenna gain in dBi to a linear power ratio (10^(dB/10))."""
    if not math.isfinite(gain_dbi):
        raise ValueError(f"gain must be finite, got {gain_dbi!r}")
    return 10.0 ** (gain_dbi / 10.0)


def linear_to_dbi(ratio: float) -> float:
    """Convert a linear power ratio back to dBi. Ratio must be positive."""
    if not (ratio > 0.0 and math.isfinite(ratio)):
        raise ValueError(f"power ratio must be positive and finite, got {ratio!r}")
    return 10.0 * math.log10(ratio)


@dataclass(frozen=True)
class AntennaGain:
    """Antenna gain on the decibels-isotropic scale."""

    value_dbi: float

    def __post_init__(self):
        if not math.isfinite(self.value_dbi):
            raise ValueError(f"gain must be finite, got {self.value_dbi!r}")

    @property
    def linear(self) -> float:
        """Gain as a linear power ratio; always strictly positive."""
        return dbi_to_linear(self.value_dbi)

    @classmethod
    def from_linear(cls, ratio: float) -> "AntennaGain":
        return cls(linear_to_dbi(ratio))


ISOTROPIC = AntennaGain(0.0)


def _gain_ratio(gain) -> float:
    """Accept an AntennaGain or a plain linear ratio."""
    if isinstance(gain, AntennaGain):
        return gain.linear
    ratio = float(gain)
    if not (ratio > 0.0 and math.isfinite(ratio)):
        raise ValueError(f"linear gain must be positive and finite, got {gain!r}")
    return ratio


def wavelength(frequency_hz: float) -> float:
    """Wavelength in meters for a carrier frequency in Hz."""
    if not (frequency_hz > 0.0 and math.isfinite(frequency_hz)):
        raise ValueError(f"frequency must be positive, got {frequency_hz!r}")
    return SPEED_OF_LIGHT / frequency_hz


@dataclass(frozen=True)
class LinkBudget:
    """One transmitter-receiver pair in free space.

    tx_power_w: transmit power in watts.
    tx_gain, rx_gain: antenna gains (AntennaGain or linear ratio).
    frequency_hz: carrier frequency.
    distance_m: antenna separation.
    """

    tx_power_w: float
    tx_gain: AntennaGain = ISOTROPIC
    rx_gain: AntennaGain = ISOTROPIC
    frequency_hz: float = 915e6
    distance_m: float = 1.0

    def __post_init__(self):
        if not (self.tx_power_w > 0.0 and math.isfinite(self.tx_power_w)):
            raise ValueError(f"tx power must be positive, got {self.tx_power_w!r}")
        if not (self.frequency_hz > 0.0 and math.isfinite(self.frequency_hz)):
            raise ValueError(f"frequency must be positive, got {self.frequency_hz!r}")
        if not (self.distance_m > 0.0 and math.isfinite(self.distance_m)):
            raise ValueError(f"distance must be positive, got {self.distance_m!r}")

    @property
    def eirp_w(self) -> float:
        return self.tx_power_w * _gain_ratio(self.tx_gain)


def friis_received_power(link: LinkBudget) -> float:
    """Received power in watts: Pt * Gt * Gr * (lambda / (4 pi R))^2."""
    lam = wavelength(link.frequency_hz)
    path = lam / (4.0 * math.pi * link.distance_m)
    return link.tx_power_w * _gain_ratio(link.tx_gain) * _gain_ratio(link.rx_gain) * path * path


def isotropic_power_density(tx_power_w: float, distance_m: float) -> float:
    """Power density in W/m^2 at distance from an isotropic radiator: Pt / (4 pi R^2)."""
    if not (distance_m > 0.0 and math.isfinite(distance_m)):
        raise ValueError(f"distance must be positive, got {distance_m!r}")
    if not (tx_power_w > 0.0 and math.isfinite(tx_power_w)):
        raise ValueError(f"tx power must be positive, got {tx_power_w!r}")
    return tx_power_w / (4.0 * math.pi * distance_m * distance_m)


def directional_power_density(tx_power_w: float, tx_gain, distance_m: float) -> float:
    """Power density of a directional radiator: Pt * Gt / (4 pi R^2).

    Reduces bit-for-bit to isotropic_power_density when the gain is unity.
    """
    return isotropic_power_density(tx_power_w * _gain_ratio(tx_gain), distance_m)


def gain_from_intensities(actual_intensity: float, isotropic_intensity: float) -> float:
    """Gain as the ratio of peak radiation intensity to the isotropic reference."""
    if not (isotropic_intensity > 0.0 and math.isfinite(isotropic_intensity)):
        raise ValueError(f"isotropic intensity must be positive, got {isotropic_intensity!r}")
    if not (actual_intensity > 0.0 and math.isfinite(actual_intensity)):
        raise ValueError(f"actual intensity must be positive, got {actual_intensity!r}")
    return actual_intensity / isotropic_intensity


def watts_to_dbm(power_w: float) -> float:
    """Power in dBm (decibels relative to one milliwatt)."""
    if not (power_w > 0.0 and math.isfinite(power_w)):
        raise ValueError(f"power must be positive, got {power_w!r}")
    return 10.0 * math.log10(power_w * 1e3)
