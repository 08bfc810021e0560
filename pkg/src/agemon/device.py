"""Simulated microcontroller: critical paths, memories, clocking, ageing.

A device owns a set of named critical signal paths whose delays follow the
transistor model in :mod:`agemon.physics`, an SRAM with injectable faults,
an immutable flash image, and power-cycle semantics. A SimulatedDevice is
single-owner mutable state; distinct devices may be simulated in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional

import numpy as np

from .memory import ConfigurationError, FaultableMemory, MemoryFault
from . import physics
from .physics import (
    AgeingState,
    GateLoad,
    MobilityModel,
    TransistorParams,
    celsius_to_kelvin,
)

SUPPORTED_TEMPERATURE_RANGE_C = (-40.0, 125.0)

# Bound the per-path process variation factors must respect.
PROCESS_VARIATION_BOUNDS = (0.9, 1.1)
# Default draw range for per-device variation (uniform, seeded).
PROCESS_VARIATION_DRAW = (0.95, 1.05)


class Subsystem(Enum):
    FLASH = "flash"
    SRAM = "sram"
    ALU = "alu"
    PIPELINE = "pipeline"


class FlashBuffering(Enum):
    BUFFERED = "buffered"
    UNBUFFERED = "unbuffered"


@dataclass(frozen=True)
class DeviceConfig:
    flash_buffering: FlashBuffering
    wait_states: int

    def __post_init__(self) -> None:
        if self.flash_buffering is FlashBuffering.UNBUFFERED and self.wait_states != 0:
            raise ValueError("unbuffered configuration requires wait_states = 0")
        if self.flash_buffering is FlashBuffering.BUFFERED and self.wait_states < 1:
            raise ValueError("buffered configuration requires wait_states >= 1")

    @classmethod
    def buffered(cls, wait_states: int = 2) -> "DeviceConfig":
        return cls(FlashBuffering.BUFFERED, wait_states)

    @classmethod
    def unbuffered(cls) -> "DeviceConfig":
        return cls(FlashBuffering.UNBUFFERED, 0)


@dataclass(frozen=True)
class CriticalPath:
    id: str
    subsystem: Subsystem
    gate_chain_length: int
    gate_load: GateLoad
    transistor: TransistorParams

    def __post_init__(self) -> None:
        if self.gate_chain_length < 1:
            raise ValueError("gate_chain_length must be >= 1")


class SimulatedDevice:
    """One device under test, with analytic timing and functional memories."""

    def __init__(
        self,
        device_id: str,
        paths: List[CriticalPath],
        mobility_model: MobilityModel,
        sram_bytes: int,
        flash_content: bytes,
        guard_band_frequency: float,
        process_variation: Dict[str, float],
        temperature_c: float = 20.0,
        ageing: AgeingState = physics.FRESH,
    ):
        if not paths:
            raise ConfigurationError("device needs at least one critical path")
        lo, hi = PROCESS_VARIATION_BOUNDS
        for path in paths:
            factor = process_variation.get(path.id)
            if factor is None:
                raise ConfigurationError(f"missing process variation for path {path.id}")
            if not lo <= factor <= hi:
                raise ConfigurationError(
                    f"process variation {factor} for {path.id} outside [{lo}, {hi}]"
                )
        self.device_id = device_id
        self.paths = list(paths)
        self.mobility_model = mobility_model
        self.sram = FaultableMemory(sram_bytes)
        self.flash = bytes(flash_content)
        self.guard_band_frequency = guard_band_frequency
        self.process_variation = dict(process_variation)
        self.ageing = ageing
        self.temperature_c = temperature_c
        self.clock = guard_band_frequency  # standby clock
        self.volatile_state: dict = {}
        # Memoized functional-body outcomes; valid while the fault set is
        # unchanged (bodies are deterministic and write before they read).
        self.body_cache: dict = {}
        self._delay_cache: dict = {}
        self._check_guard_band()

    def _check_guard_band(self) -> None:
        # Guard bands are conservative: below every fresh path f_max at 20 C.
        t_k = celsius_to_kelvin(20.0)
        for path in self.paths:
            delay = (
                path.gate_chain_length
                * physics.gate_delay(
                    self.mobility_model, path.transistor, path.gate_load,
                    physics.FRESH, t_k,
                )
                * self.process_variation[path.id]
            )
            if self.guard_band_frequency >= physics.max_frequency(delay):
                raise ConfigurationError(
                    f"guard band {self.guard_band_frequency} Hz is not below the "
                    f"fresh f_max of path {path.id}"
                )

    # -- state transitions -------------------------------------------------

    def set_temperature(self, temperature_c: float) -> None:
        lo, hi = SUPPORTED_TEMPERATURE_RANGE_C
        if not lo <= temperature_c <= hi:
            raise ConfigurationError(
                f"temperature {temperature_c} C outside supported range [{lo}, {hi}]"
            )
        self.temperature_c = temperature_c
        self._delay_cache.clear()

    def set_ageing(self, ageing: AgeingState) -> None:
        self.ageing = ageing
        self._delay_cache.clear()

    def inject_fault(self, fault: MemoryFault) -> None:
        self.sram.inject(fault)
        self.body_cache.clear()

    def power_cycle(self) -> None:
        """Clear SRAM and run-scratch state; ageing, faults, flash persist."""
        self.sram.clear()
        self.volatile_state = {}
        self.clock = self.guard_band_frequency

    # -- timing ------------------------------------------------------------

    def path_delay(self, path: CriticalPath, config: DeviceConfig) -> float:
        lo, hi = SUPPORTED_TEMPERATURE_RANGE_C
        if not lo <= self.temperature_c <= hi:
            raise ConfigurationError(
                f"temperature {self.temperature_c} C outside supported range"
            )
        key = (path.id, config.flash_buffering, config.wait_states)
        cached = self._delay_cache.get(key)
        if cached is not None:
            return cached
        delay = (
            path.gate_chain_length
            * physics.gate_delay(
                self.mobility_model,
                path.transistor,
                path.gate_load,
                self.ageing,
                celsius_to_kelvin(self.temperature_c),
            )
            * self.process_variation[path.id]
        )
        if (
            path.subsystem is Subsystem.FLASH
            and config.flash_buffering is FlashBuffering.BUFFERED
        ):
            # Wait states plus pre-fetch hide flash access latency.
            delay /= 1 + config.wait_states
        self._delay_cache[key] = delay
        return delay

    def mef_oracle(
        self, activated_subsystems: FrozenSet[Subsystem], config: DeviceConfig
    ) -> float:
        """Analytic maximum error-free frequency over the activated paths."""
        if not activated_subsystems:
            raise ConfigurationError("activated_subsystems must be non-empty")
        delays = [
            self.path_delay(path, config)
            for path in self.paths
            if path.subsystem in activated_subsystems
        ]
        if not delays:
            raise ConfigurationError(
                f"device has no path for subsystems {activated_subsystems}"
            )
        return physics.max_frequency(max(delays))


# -- module-level operation surface ---------------------------------------


def effective_path_delay(
    device: SimulatedDevice, path: CriticalPath, config: DeviceConfig
) -> float:
    return device.path_delay(path, config)


def device_mef_oracle(
    device: SimulatedDevice,
    activated_subsystems: Iterable[Subsystem],
    config: DeviceConfig,
) -> float:
    return device.mef_oracle(frozenset(activated_subsystems), config)


def violates_timing(
    device: SimulatedDevice,
    path: CriticalPath,
    config: DeviceConfig,
    clock: float,
) -> bool:
    """True iff the clock period is shorter than the path's full transition
    cycle. The boundary is closed: a period exactly equal to 2*t_p passes."""
    if clock <= 0:
        raise ConfigurationError("clock must be > 0 Hz")
    return 1.0 / clock < 2.0 * device.path_delay(path, config)


def inject_fault(device: SimulatedDevice, fault: MemoryFault) -> SimulatedDevice:
    device.inject_fault(fault)
    return device


def power_cycle(device: SimulatedDevice) -> SimulatedDevice:
    device.power_cycle()
    return device


def draw_process_variation(
    path_ids: Iterable[str], seed_sequence: np.random.SeedSequence
) -> Dict[str, float]:
    """Per-path multiplicative delay factors, uniform over the draw range."""
    rng = np.random.Generator(np.random.PCG64(seed_sequence))
    lo, hi = PROCESS_VARIATION_DRAW
    return {pid: float(rng.uniform(lo, hi)) for pid in sorted(path_ids)}
