"""Test controller: frequency batches, MEF bisection, transition sweeps.

One controller drives one device sequentially, mirroring the physical
protocol: switch to the test clock, run the payload N times, return to
standby between runs, power-cycle on hangs. Time is simulated, advanced by
the execution-time model and watchdog charges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .device import DeviceConfig, SimulatedDevice
from .payloads import (
    DEFAULT_TRANSITION,
    ErrorTransitionModel,
    Payload,
    Status,
    execute,
    execution_time,
    run_functional_body,
)


class DeviceBelowMinimumError(RuntimeError):
    """The payload fails at f_min: degradation below minimum operability."""


@dataclass(frozen=True)
class SearchConfig:
    f_min: float
    f_max: float
    step: float  # bisection termination granularity
    runs_per_frequency: int
    watchdog_timeout: float = 0.01  # seconds charged per hang

    def __post_init__(self) -> None:
        if self.f_min >= self.f_max:
            raise ValueError("f_min must be below f_max")
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.runs_per_frequency < 1:
            raise ValueError("runs_per_frequency must be >= 1")

    @property
    def probe_budget(self) -> int:
        """Standard bisection bound on distinct probed frequencies."""
        return math.ceil(math.log2((self.f_max - self.f_min) / self.step)) + 2


@dataclass(frozen=True)
class FrequencyResult:
    frequency: float
    passes: int
    compute_errors: int
    hangs: int
    virtual_time_s: float

    @property
    def runs(self) -> int:
        return self.passes + self.compute_errors + self.hangs

    @property
    def error_free(self) -> bool:
        return self.compute_errors == 0 and self.hangs == 0

    @property
    def error_fraction(self) -> float:
        return (self.compute_errors + self.hangs) / self.runs

    @property
    def hang_fraction(self) -> float:
        return self.hangs / self.runs


@dataclass
class SearchOutcome:
    mef: float
    mof: Optional[float]
    trace: List[FrequencyResult]
    total_test_executions: int
    range_exhausted: bool = False
    virtual_time_s: float = 0.0


def run_at_frequency(
    device: SimulatedDevice,
    payload: Payload,
    config: DeviceConfig,
    frequency: float,
    n: int,
    rng: np.random.Generator,
    transition: ErrorTransitionModel = DEFAULT_TRANSITION,
    watchdog_timeout: float = 0.01,
) -> FrequencyResult:
    """Execute the payload ``n`` times at the test clock and count outcomes.

    Equivalent to ``n`` sequential :func:`agemon.payloads.execute` calls on
    the same rng stream; the all-pass and all-hang regimes are batched and
    the stochastic transition region draws its uniforms vectorized.
    """
    mef = device.mef_oracle(payload.activated_subsystems, config)
    per_run = execution_time(payload, frequency, config)
    passes = compute_errors = hangs = 0
    elapsed = 0.0

    if frequency <= mef:
        result = run_functional_body(payload, device)
        if result.ok:
            passes = n
        else:
            compute_errors = n
        elapsed = n * per_run
    elif payload.has_error_transition(config):
        mof = mef * transition.onset_fraction
        if frequency > mof:
            hangs = n
            elapsed = n * watchdog_timeout
            device.power_cycle()
        else:
            position = (frequency - mef) / (mof - mef) if mof > mef else 1.0
            p = transition.shape(position)
            compute_errors = int(np.count_nonzero(rng.random(n) < p))
            passes = n - compute_errors
            elapsed = n * per_run
    else:
        hangs = n
        elapsed = n * watchdog_timeout
        device.power_cycle()

    device.clock = device.guard_band_frequency
    return FrequencyResult(frequency, passes, compute_errors, hangs, elapsed)


def find_mef(
    device: SimulatedDevice,
    payload: Payload,
    config: DeviceConfig,
    search: SearchConfig,
    rng: np.random.Generator,
    transition: ErrorTransitionModel = DEFAULT_TRANSITION,
) -> SearchOutcome:
    """Locate the maximum error-free frequency by iterative bisection.

    Invariant: ``lo`` is the highest known error-free frequency and ``hi``
    the lowest known erroneous one; the midpoint is probed until the
    interval closes to the step granularity.
    """
    trace: List[FrequencyResult] = []

    def probe(frequency: float) -> FrequencyResult:
        result = run_at_frequency(
            device, payload, config, frequency, search.runs_per_frequency,
            rng, transition, search.watchdog_timeout,
        )
        trace.append(result)
        return result

    first = probe(search.f_min)
    if not first.error_free:
        raise DeviceBelowMinimumError(
            f"payload {payload.name.value} fails at f_min={search.f_min} Hz "
            f"on device {device.device_id}: severe degradation"
        )

    top = probe(search.f_max)
    if top.error_free:
        return _finish(search.f_max, trace, search, range_exhausted=True)

    lo, hi = search.f_min, search.f_max
    while hi - lo > search.step:
        mid = 0.5 * (lo + hi)
        if probe(mid).error_free:
            lo = mid
        else:
            hi = mid
    return _finish(lo, trace, search)


def _finish(
    mef: float,
    trace: List[FrequencyResult],
    search: SearchConfig,
    range_exhausted: bool = False,
) -> SearchOutcome:
    return SearchOutcome(
        mef=mef,
        mof=detect_mof(trace),
        trace=trace,
        total_test_executions=sum(r.runs for r in trace),
        range_exhausted=range_exhausted,
        virtual_time_s=sum(r.virtual_time_s for r in trace),
    )


def sweep(
    device: SimulatedDevice,
    payload: Payload,
    config: DeviceConfig,
    start: float,
    stop: float,
    step: float,
    n: int,
    rng: np.random.Generator,
    transition: ErrorTransitionModel = DEFAULT_TRANSITION,
    watchdog_timeout: float = 0.01,
) -> List[FrequencyResult]:
    """Profile the error transition on an inclusive frequency grid."""
    if start >= stop:
        raise ValueError("sweep requires start < stop")
    if step <= 0:
        raise ValueError("sweep step must be > 0")
    results = []
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    for i in range(count):
        frequency = start + i * step
        results.append(
            run_at_frequency(
                device, payload, config, frequency, n, rng, transition,
                watchdog_timeout,
            )
        )
    return results


def detect_mof(trace: List[FrequencyResult]) -> Optional[float]:
    """Lowest probed frequency at which every execution failed."""
    if not trace:
        raise ValueError("trace must be non-empty")
    failed = [r.frequency for r in trace if r.passes == 0]
    return min(failed) if failed else None


def trace_record(
    device: SimulatedDevice,
    payload: Payload,
    config: DeviceConfig,
    temperature_c: float,
    result: FrequencyResult,
) -> dict:
    """One JSON-lines record of the per-search trace."""
    return {
        "device_id": device.device_id,
        "payload": payload.name.value,
        "config": config.flash_buffering.value,
        "temperature": temperature_c,
        "frequency_hz": result.frequency,
        "passes": result.passes,
        "compute_errors": result.compute_errors,
        "hangs": result.hangs,
        "virtual_time_s": result.virtual_time_s,
    }
