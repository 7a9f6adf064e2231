"""Resource conversion and cost annualization.

Wind speeds are extrapolated to hub height with a power-law shear profile and
mapped through a cut-in / rated / cut-out turbine curve. Solar output is a
flat-efficiency conversion of irradiance capped at the array rating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class WindTurbineCurve:
    cut_in: float = 4.0  # m/s
    rated_speed: float = 12.0
    cut_out: float = 25.0
    rated_power: float = 1800.0  # kW
    hub_height: float = 80.0  # m
    measurement_height: float = 10.0
    shear_exponent: float = 1.0 / 7.0
    interpolation: str = "cubic"  # or "linear"

    def __post_init__(self):
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise DomainError("require 0 < cut_in < rated_speed < cut_out")
        if not self.rated_power > 0:
            raise DomainError("rated_power must be positive")
        if not (self.hub_height > 0 and self.measurement_height > 0):
            raise DomainError("heights must be positive")
        if self.interpolation not in ("cubic", "linear"):
            raise DomainError(f"unknown interpolation {self.interpolation!r}")


@dataclass(frozen=True)
class SolarArrayModel:
    efficiency: float = 0.10
    area: float = 20_000.0  # m^2
    rated_power: float = 1800.0  # kW

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise DomainError("efficiency must lie in (0, 1]")
        if not self.area > 0:
            raise DomainError("area must be positive")
        if not self.rated_power > 0:
            raise DomainError("rated_power must be positive")


@dataclass(frozen=True)
class CostModel:
    capital_cost: float  # currency per MW
    interest_rate: float
    lifetime_years: int

    def __post_init__(self):
        if not self.interest_rate > 0:
            raise DomainError("interest_rate must be positive")
        if self.lifetime_years < 1:
            raise DomainError("lifetime_years must be >= 1")
        if self.capital_cost < 0:
            raise DomainError("capital_cost must be non-negative")


def crf(interest_rate: float, lifetime_years: float) -> float:
    """Capital recovery factor i(1+i)^y / ((1+i)^y - 1)."""
    if not interest_rate > 0:
        raise DomainError(f"interest rate must be positive, got {interest_rate}")
    if lifetime_years < 1:
        raise DomainError(f"lifetime must be >= 1 year, got {lifetime_years}")
    growth = (1.0 + interest_rate) ** lifetime_years
    return interest_rate * growth / (growth - 1.0)


def annualize(cost_model: CostModel, capacity_mw: float) -> float:
    """Equivalent annual payment for ``capacity_mw`` of the technology."""
    return cost_model.capital_cost * crf(cost_model.interest_rate,
                                         cost_model.lifetime_years) * capacity_mw


def hub_speed(speed, curve: WindTurbineCurve):
    ratio = curve.hub_height / curve.measurement_height
    return np.asarray(speed, dtype=float) * ratio ** curve.shear_exponent


def power_at_hub_speed(v_hub, curve: WindTurbineCurve):
    v = np.asarray(v_hub, dtype=float)
    if curve.interpolation == "cubic":
        ramp = (v ** 3 - curve.cut_in ** 3) / (curve.rated_speed ** 3 - curve.cut_in ** 3)
    else:
        ramp = (v - curve.cut_in) / (curve.rated_speed - curve.cut_in)
    out = np.where(v < curve.cut_in, 0.0,
                   np.where(v < curve.rated_speed, curve.rated_power * ramp,
                            np.where(v < curve.cut_out, curve.rated_power, 0.0)))
    return float(out) if out.ndim == 0 else out


def wind_power(speed_at_measurement, curve: WindTurbineCurve):
    """Turbine output in kW for wind speed(s) measured at ``measurement_height``."""
    s = np.asarray(speed_at_measurement, dtype=float)
    if np.any(s < 0):
        raise DomainError("wind speed must be non-negative")
    return power_at_hub_speed(hub_speed(s, curve), curve)


def solar_power(irradiance, model: SolarArrayModel):
    """Array output in kW for irradiance in W/m^2."""
    g = np.asarray(irradiance, dtype=float)
    if np.any(g < 0):
        raise DomainError("irradiance must be non-negative")
    out = np.minimum(model.rated_power, model.efficiency * model.area * g / 1000.0)
    return float(out) if out.ndim == 0 else out


def capacity_factor(availability) -> float:
    a = np.asarray(availability, dtype=float)
    if a.size == 0:
        raise DomainError("empty availability series")
    if np.any(a < 0) or np.any(a > 1):
        raise DomainError("availability values must lie in [0, 1]")
    return float(a.mean())


def wind_availability(speeds, curve: WindTurbineCurve) -> np.ndarray:
    return np.asarray(wind_power(speeds, curve), dtype=float) / curve.rated_power


def solar_availability(irradiance, model: SolarArrayModel) -> np.ndarray:
    return np.asarray(solar_power(irradiance, model), dtype=float) / model.rated_power
