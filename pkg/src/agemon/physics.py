"""Transistor-level timing model.

Maps operating temperature and ageing state to carrier mobility, drain
current, gate propagation delay, and the resulting maximum switching
frequency. All quantities are SI (K, V, F, m, s, Hz); pure functions over
immutable value types, safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

ZERO_CELSIUS_K = 273.15

# Range over which configured scattering terms must stay positive.
SCATTERING_CHECK_RANGE_K = (250.0, 400.0)


def celsius_to_kelvin(t_celsius: float) -> float:
    return t_celsius + ZERO_CELSIUS_K


class PhysicsDomainError(ValueError):
    """An input outside the physical domain of a model equation."""


class TransistorInoperableError(PhysicsDomainError):
    """Effective threshold voltage reached or exceeded the supply rail."""


@dataclass(frozen=True)
class TransistorParams:
    oxide_capacitance: float  # F/m^2
    channel_width: float  # m
    channel_length: float  # m
    supply_voltage: float  # V
    threshold_voltage_fresh: float  # V

    def __post_init__(self) -> None:
        for name in (
            "oxide_capacitance",
            "channel_width",
            "channel_length",
            "supply_voltage",
            "threshold_voltage_fresh",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.supply_voltage <= self.threshold_voltage_fresh:
            raise ValueError(
                "supply_voltage must exceed threshold_voltage_fresh "
                "(fresh device must be operable)"
            )

    @property
    def aspect_ratio(self) -> float:
        return self.channel_width / self.channel_length


ScatteringTerm = Tuple[str, Callable[[float], float]]


@dataclass(frozen=True)
class MobilityModel:
    """Effective-mobility model: phonon term plus optional scattering terms.

    ``scattering_terms`` holds labelled mobility-valued functions of
    temperature (surface roughness, bulk coulombic, interface coulombic).
    By default none are configured and the model is phonon-limited.
    """

    mu_ph0: float  # m^2/(V*s) at reference_temperature
    reference_temperature: float  # K
    theta: float  # dimensionless exponent
    alpha: float = 1.0  # dimensionless scaling constant
    scattering_terms: Tuple[ScatteringTerm, ...] = ()

    def __post_init__(self) -> None:
        for name in ("mu_ph0", "reference_temperature", "theta", "alpha"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        lo, hi = SCATTERING_CHECK_RANGE_K
        for label, term in self.scattering_terms:
            for t in (lo, hi):
                if term(t) <= 0:
                    raise ValueError(
                        f"scattering term {label!r} non-positive at {t} K"
                    )


@dataclass(frozen=True)
class AgeingState:
    threshold_voltage_shift: float = 0.0  # V, >= 0
    mobility_degradation_factor: float = 1.0  # in (0, 1]

    def __post_init__(self) -> None:
        if self.threshold_voltage_shift < 0:
            raise ValueError("threshold_voltage_shift must be >= 0")
        if not 0 < self.mobility_degradation_factor <= 1:
            raise ValueError("mobility_degradation_factor must be in (0, 1]")

    @property
    def is_fresh(self) -> bool:
        return (
            self.threshold_voltage_shift == 0.0
            and self.mobility_degradation_factor == 1.0
        )


FRESH = AgeingState()


@dataclass(frozen=True)
class GateLoad:
    load_capacitance: float  # F

    def __post_init__(self) -> None:
        if self.load_capacitance <= 0:
            raise ValueError("load_capacitance must be strictly positive")


def phonon_mobility(model: MobilityModel, temperature: float) -> float:
    """Phonon-limited mobility: mu_ph0 * (T0 / T) ** theta."""
    if temperature <= 0:
        raise PhysicsDomainError(f"temperature must be > 0 K, got {temperature}")
    return model.mu_ph0 * (model.reference_temperature / temperature) ** model.theta


def effective_mobility(model: MobilityModel, temperature: float) -> float:
    """Harmonic combination of the phonon term and configured scattering terms,
    scaled by alpha. Reduces to alpha * phonon_mobility with no optional terms.
    """
    inverse_sum = 1.0 / phonon_mobility(model, temperature)
    for label, term in model.scattering_terms:
        mu = term(temperature)
        if mu <= 0:
            raise PhysicsDomainError(
                f"scattering term {label!r} evaluated non-positive at {temperature} K"
            )
        inverse_sum += 1.0 / mu
    return model.alpha / inverse_sum


def drain_current(
    params: TransistorParams, mobility: float, ageing: AgeingState = FRESH
) -> float:
    """Saturation drain current with ageing applied to mobility and threshold."""
    v_th_eff = params.threshold_voltage_fresh + ageing.threshold_voltage_shift
    overdrive = params.supply_voltage - v_th_eff
    if overdrive <= 0:
        raise TransistorInoperableError(
            f"effective threshold {v_th_eff} V >= supply {params.supply_voltage} V"
        )
    mu = mobility * ageing.mobility_degradation_factor
    return 0.5 * mu * params.oxide_capacitance * params.aspect_ratio * overdrive**2


def propagation_time(load: GateLoad, params: TransistorParams, current: float) -> float:
    """Gate propagation time C_L * V_DD / I_D."""
    if current <= 0:
        raise PhysicsDomainError(f"drain current must be > 0 A, got {current}")
    return load.load_capacitance * params.supply_voltage / current


def max_frequency(propagation: float) -> float:
    """Maximum switching frequency 1 / (2 * t_p)."""
    if propagation <= 0:
        raise PhysicsDomainError(f"propagation time must be > 0 s, got {propagation}")
    return 1.0 / (2.0 * propagation)


def gate_delay(
    model: MobilityModel,
    params: TransistorParams,
    load: GateLoad,
    ageing: AgeingState,
    temperature_k: float,
) -> float:
    """Single-gate propagation time from temperature and ageing state."""
    mu = effective_mobility(model, temperature_k)
    current = drain_current(params, mu, ageing)
    return propagation_time(load, params, current)
