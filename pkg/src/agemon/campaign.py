"""Campaign configuration and runner.

Parses the flat INI campaign file, builds the simulated device fleet,
executes the temperature ladder across payloads and flash configurations,
and aggregates results into a :class:`agemon.analytics.CampaignReport`.
Fully deterministic for a given master seed.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import analytics, controller, payloads
from .analytics import CampaignReport, MefSeries, PayloadFeatures
from .controller import SearchConfig, find_mef, sweep, trace_record
from .device import (
    CriticalPath,
    DeviceConfig,
    FlashBuffering,
    SimulatedDevice,
    Subsystem,
    draw_process_variation,
)
from .memory import ConfigurationError
from .payloads import (
    DEFAULT_PAYLOADS,
    ErrorTransitionModel,
    Payload,
    PayloadName,
    build_flash_image,
    execution_time,
)
from .physics import AgeingState, GateLoad, MobilityModel, TransistorParams

OUTPUT_DIR_ENV = "AGEMON_OUTPUT_DIR"

CI_RUNS_PER_FREQUENCY = 50
CI_MIN_SWEEP_STEP_HZ = 2.0e6

SWEEP_WINDOW = (0.90, 1.15)  # sweep window relative to the located MEF

# Matrix staging needs 2*64 operand bytes plus 128 product bytes.
MIN_TEST_REGION_BYTES = 384
MAX_TEST_REGION_BYTES = 4096

_SUBSYSTEM_ORDER = (Subsystem.FLASH, Subsystem.SRAM, Subsystem.ALU, Subsystem.PIPELINE)


@dataclass
class CampaignConfig:
    # [campaign]
    device_count: int = 8
    temperatures_c: Tuple[float, ...] = (20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
    payloads: Tuple[str, ...] = (
        "matrix", "flash_read", "ram_rw", "ram_march_c", "cpu_test",
    )
    configs: Tuple[str, ...] = ("buffered", "unbuffered")
    master_seed: int = 20260823
    output_dir: str = "campaign_out"
    sweep_profiles: bool = True
    sweep_step_hz: float = 5.0e5
    ageing_dvth_v: Tuple[float, ...] = (0.0,)
    ageing_mobility_factor: Tuple[float, ...] = (1.0,)
    # [search]
    f_min_hz: float = 1.0e6
    f_max_hz: float = 200.0e6
    step_hz: float = 1.0e4
    runs_per_frequency: int = 500
    watchdog_timeout_s: float = 0.01
    # [physics]
    mu_ph0: float = 0.04
    reference_temperature_k: float = 293.15
    theta: float = 0.8
    alpha: float = 1.0
    oxide_capacitance_f_m2: float = 0.01
    channel_width_m: float = 1.3e-6
    channel_length_m: float = 1.3e-7
    supply_voltage_v: float = 3.3
    threshold_voltage_v: float = 0.7
    load_capacitance_f: float = 4.3e-13
    transition_onset_fraction: float = 1.06
    # [device]
    chain_flash: int = 40
    chain_sram: int = 28
    chain_alu: int = 26
    chain_pipeline: int = 34
    sram_bytes: int = 20480
    flash_bytes: int = 131072
    test_region_bytes: int = 1024
    guard_band_hz: float = 72.0e6
    wait_states: int = 2

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            f_min=self.f_min_hz,
            f_max=self.f_max_hz,
            step=self.step_hz,
            runs_per_frequency=self.runs_per_frequency,
            watchdog_timeout=self.watchdog_timeout_s,
        )

    def mobility_model(self) -> MobilityModel:
        return MobilityModel(
            mu_ph0=self.mu_ph0,
            reference_temperature=self.reference_temperature_k,
            theta=self.theta,
            alpha=self.alpha,
        )

    def transistor_params(self) -> TransistorParams:
        return TransistorParams(
            oxide_capacitance=self.oxide_capacitance_f_m2,
            channel_width=self.channel_width_m,
            channel_length=self.channel_length_m,
            supply_voltage=self.supply_voltage_v,
            threshold_voltage_fresh=self.threshold_voltage_v,
        )

    def transition_model(self) -> ErrorTransitionModel:
        return ErrorTransitionModel(onset_fraction=self.transition_onset_fraction)

    def device_configs(self) -> List[DeviceConfig]:
        mapping = {
            "buffered": DeviceConfig.buffered(self.wait_states),
            "unbuffered": DeviceConfig.unbuffered(),
        }
        return [mapping[name] for name in self.configs]

    def payload_objects(self) -> List[Payload]:
        by_value = {p.value: p for p in PayloadName}
        return [DEFAULT_PAYLOADS[by_value[name]] for name in self.payloads]

    def ageing_for_step(self, temp_index: int) -> AgeingState:
        def pick(values: Tuple[float, ...]) -> float:
            return values[0] if len(values) == 1 else values[temp_index]

        return AgeingState(
            threshold_voltage_shift=pick(self.ageing_dvth_v),
            mobility_degradation_factor=pick(self.ageing_mobility_factor),
        )

    def as_sections(self) -> Dict[str, Dict[str, str]]:
        def fmt(value) -> str:
            if isinstance(value, tuple):
                return ",".join(fmt(v) for v in value)
            if isinstance(value, bool):
                return "true" if value else "false"
            return repr(value) if isinstance(value, float) else str(value)

        sections: Dict[str, Dict[str, str]] = {}
        for section, keys in _SCHEMA.items():
            sections[section] = {key: fmt(getattr(self, key)) for key in keys}
        return sections

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.read_dict(self.as_sections())
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    def as_dict(self) -> dict:
        return {
            section: dict(keys) for section, keys in self.as_sections().items()
        }


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_str_list(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


_PARSERS = {
    int: lambda text: int(text, 0),
    float: float,
    str: str.strip,
    bool: _parse_bool,
}

# section -> keys; key types come from the CampaignConfig annotations
_SCHEMA: Dict[str, Tuple[str, ...]] = {
    "campaign": (
        "device_count", "temperatures_c", "payloads", "configs", "master_seed",
        "output_dir", "sweep_profiles", "sweep_step_hz", "ageing_dvth_v",
        "ageing_mobility_factor",
    ),
    "search": (
        "f_min_hz", "f_max_hz", "step_hz", "runs_per_frequency",
        "watchdog_timeout_s",
    ),
    "physics": (
        "mu_ph0", "reference_temperature_k", "theta", "alpha",
        "oxide_capacitance_f_m2", "channel_width_m", "channel_length_m",
        "supply_voltage_v", "threshold_voltage_v", "load_capacitance_f",
        "transition_onset_fraction",
    ),
    "device": (
        "chain_flash", "chain_sram", "chain_alu", "chain_pipeline",
        "sram_bytes", "flash_bytes", "test_region_bytes", "guard_band_hz",
        "wait_states",
    ),
}

_FIELD_TYPES = {f.name: f.type for f in dataclass_fields(CampaignConfig)}


def _convert(key: str, text: str):
    annotation = _FIELD_TYPES[key]
    if annotation.startswith("Tuple[float"):
        return _parse_float_list(text)
    if annotation.startswith("Tuple[str"):
        return _parse_str_list(text)
    if annotation == "bool":
        return _parse_bool(text)
    if annotation == "int":
        return _PARSERS[int](text)
    if annotation == "float":
        return float(text)
    return text.strip()  # pragma: no cover


def validate_config(source) -> Tuple[Optional[CampaignConfig], List[str]]:
    """Parse and validate a campaign file, collecting every error.

    ``source`` is a path or raw INI text. Returns (config, []) on success or
    (None, errors) with one message per offending key.
    """
    text = source
    path = Path(str(source))
    if "\n" not in str(source) and (path.suffix or path.exists()):
        try:
            text = path.read_text()
        except OSError as exc:
            return None, [f"cannot read config file {source}: {exc}"]

    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        return None, [f"config syntax error: {exc}"]

    errors: List[str] = []
    values: Dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                errors.append(f"unknown key {key!r} in section [{section}]")
                continue
            try:
                values[key] = _convert(key, raw)
            except ValueError as exc:
                errors.append(f"[{section}] {key}: {exc}")

    if errors:
        return None, errors

    config = CampaignConfig(**values)
    errors.extend(_semantic_errors(config))
    if errors:
        return None, errors

    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        config.output_dir = env_out
    return config, []


def _semantic_errors(config: CampaignConfig) -> List[str]:
    errors = []
    if config.device_count < 1:
        errors.append("device_count: must be >= 1")
    temps = config.temperatures_c
    if len(temps) < 1:
        errors.append("temperatures_c: must be non-empty")
    if any(b <= a for a, b in zip(temps, temps[1:])):
        errors.append("temperatures_c: must be strictly increasing")
    valid_payloads = {p.value for p in PayloadName}
    for name in config.payloads:
        if name not in valid_payloads:
            errors.append(f"payloads: unknown payload {name!r}")
    for name in config.configs:
        if name not in ("buffered", "unbuffered"):
            errors.append(f"configs: unknown configuration {name!r}")
    if not config.configs:
        errors.append("configs: must be non-empty")
    if config.f_min_hz >= config.f_max_hz:
        errors.append("f_min_hz/f_max_hz: f_min_hz must be below f_max_hz")
    if config.step_hz <= 0:
        errors.append("step_hz: must be > 0")
    if config.runs_per_frequency < 1:
        errors.append("runs_per_frequency: must be >= 1")
    if config.sweep_step_hz <= 0:
        errors.append("sweep_step_hz: must be > 0")
    for key in (
        "mu_ph0", "reference_temperature_k", "theta", "alpha",
        "oxide_capacitance_f_m2", "channel_width_m", "channel_length_m",
        "supply_voltage_v", "threshold_voltage_v", "load_capacitance_f",
        "watchdog_timeout_s", "guard_band_hz",
    ):
        if getattr(config, key) <= 0:
            errors.append(f"{key}: must be > 0")
    if config.supply_voltage_v <= config.threshold_voltage_v:
        errors.append(
            "supply_voltage_v/threshold_voltage_v: supply must exceed threshold"
        )
    if config.transition_onset_fraction < 1.0:
        errors.append("transition_onset_fraction: must be >= 1.0")
    for key in ("chain_flash", "chain_sram", "chain_alu", "chain_pipeline"):
        if getattr(config, key) < 1:
            errors.append(f"{key}: must be >= 1")
    if config.wait_states < 1:
        errors.append("wait_states: must be >= 1 for the buffered configuration")
    if not MIN_TEST_REGION_BYTES <= config.test_region_bytes <= MAX_TEST_REGION_BYTES:
        errors.append(
            f"test_region_bytes: must be in "
            f"[{MIN_TEST_REGION_BYTES}, {MAX_TEST_REGION_BYTES}]"
        )
    if config.test_region_bytes > config.sram_bytes:
        errors.append("test_region_bytes: exceeds sram_bytes")
    for key in ("ageing_dvth_v", "ageing_mobility_factor"):
        schedule = getattr(config, key)
        if len(schedule) not in (1, len(temps)):
            errors.append(
                f"{key}: schedule length must be 1 or match temperatures_c"
            )
    for value in config.ageing_dvth_v:
        if value < 0:
            errors.append("ageing_dvth_v: shifts must be >= 0")
            break
    for value in config.ageing_mobility_factor:
        if not 0 < value <= 1:
            errors.append("ageing_mobility_factor: factors must be in (0, 1]")
            break
    return errors


def build_devices(config: CampaignConfig) -> List[SimulatedDevice]:
    """Construct the fleet; per-device seeds are spawned from the master seed
    so adding devices never perturbs earlier devices' streams."""
    transistor = config.transistor_params()
    load = GateLoad(config.load_capacitance_f)
    chains = {
        Subsystem.FLASH: config.chain_flash,
        Subsystem.SRAM: config.chain_sram,
        Subsystem.ALU: config.chain_alu,
        Subsystem.PIPELINE: config.chain_pipeline,
    }
    paths = [
        CriticalPath(
            id=f"{subsystem.value}_path",
            subsystem=subsystem,
            gate_chain_length=chains[subsystem],
            gate_load=load,
            transistor=transistor,
        )
        for subsystem in _SUBSYSTEM_ORDER
    ]
    image = build_flash_image(config.master_seed, config.flash_bytes)
    devices = []
    for index in range(config.device_count):
        variation = draw_process_variation(
            [p.id for p in paths],
            np.random.SeedSequence([config.master_seed, index, 0x5EED]),
        )
        device = SimulatedDevice(
            device_id=f"dev{index:02d}",
            paths=paths,
            mobility_model=config.mobility_model(),
            sram_bytes=config.sram_bytes,
            flash_content=image.raw,
            guard_band_frequency=config.guard_band_hz,
            process_variation=variation,
        )
        device.flash_image = image
        device.test_region = (0, config.test_region_bytes)
        devices.append(device)
    return devices


def _cell_rng(
    config: CampaignConfig, device_index: int, temp_index: int,
    payload_index: int, config_index: int, purpose: int,
) -> np.random.Generator:
    seed = np.random.SeedSequence(
        [config.master_seed, device_index, temp_index, payload_index,
         config_index, purpose]
    )
    return np.random.Generator(np.random.PCG64(seed))


def run_campaign(
    config: CampaignConfig, ci_mode: bool = False
) -> CampaignReport:
    """Execute the full device x temperature x payload x configuration grid.

    ``ci_mode`` lowers runs-per-frequency and coarsens the sweep grid for
    continuous integration; results remain deterministic for a seed.
    """
    if ci_mode:
        config = CampaignConfig(**{
            f.name: getattr(config, f.name) for f in dataclass_fields(CampaignConfig)
        })
        config.runs_per_frequency = min(
            config.runs_per_frequency, CI_RUNS_PER_FREQUENCY
        )
        config.sweep_step_hz = max(config.sweep_step_hz, CI_MIN_SWEEP_STEP_HZ)

    search = config.search_config()
    transition = config.transition_model()
    device_configs = config.device_configs()
    payload_list = config.payload_objects()
    devices = build_devices(config)
    image = devices[0].flash_image

    series: List[MefSeries] = []
    sweep_rows: List[dict] = []
    trace_rows: List[dict] = []
    mef_at_first_temp: Dict[Tuple[str, str], List[float]] = {}
    measured_transitions: Dict[str, set] = {p.name.value: set() for p in payload_list}
    virtual_time = 0.0

    for device_index, device in enumerate(devices):
        for payload_index, payload in enumerate(payload_list):
            for config_index, device_config in enumerate(device_configs):
                points = []
                for temp_index, temperature in enumerate(config.temperatures_c):
                    device.set_temperature(temperature)
                    device.set_ageing(config.ageing_for_step(temp_index))
                    rng = _cell_rng(
                        config, device_index, temp_index, payload_index,
                        config_index, 1,
                    )
                    outcome = find_mef(
                        device, payload, device_config, search, rng, transition
                    )
                    virtual_time += outcome.virtual_time_s
                    points.append((temperature, outcome.mef))
                    for result in outcome.trace:
                        trace_rows.append(
                            trace_record(device, payload, device_config,
                                         temperature, result)
                        )
                    if temp_index == 0:
                        mef_at_first_temp.setdefault(
                            (payload.name.value, device_config.flash_buffering.value),
                            [],
                        ).append(outcome.mef)
                    if config.sweep_profiles:
                        rng_sweep = _cell_rng(
                            config, device_index, temp_index, payload_index,
                            config_index, 2,
                        )
                        window = sweep(
                            device, payload, device_config,
                            SWEEP_WINDOW[0] * outcome.mef,
                            SWEEP_WINDOW[1] * outcome.mef,
                            config.sweep_step_hz,
                            config.runs_per_frequency,
                            rng_sweep, transition, search.watchdog_timeout,
                        )
                        for result in window:
                            virtual_time += result.virtual_time_s
                            trace_rows.append(
                                trace_record(device, payload, device_config,
                                             temperature, result)
                            )
                            sweep_rows.append({
                                "frequency_hz": result.frequency,
                                "temperature_c": temperature,
                                "device_id": device.device_id,
                                "payload": payload.name.value,
                                "config": device_config.flash_buffering.value,
                                "error_fraction": result.error_fraction,
                                "hang_fraction": result.hang_fraction,
                            })
                            if 0.0 < result.error_fraction < 1.0 and result.hangs == 0:
                                measured_transitions[payload.name.value].add(
                                    device_config.flash_buffering.value
                                )
                series.append(
                    MefSeries(
                        device_id=device.device_id,
                        payload=payload.name.value,
                        config=device_config.flash_buffering.value,
                        points=tuple(points),
                    )
                )

    features = _payload_features(
        config, payload_list, mef_at_first_temp, measured_transitions
    )
    scores = analytics.score_payloads(features)

    series.sort(key=lambda s: (s.device_id, s.payload, s.config))
    sweep_rows.sort(key=lambda r: (
        r["device_id"], r["temperature_c"], r["payload"], r["config"],
        r["frequency_hz"],
    ))

    return CampaignReport(
        config=config.as_dict(),
        mef_series=series,
        sweep_rows=sweep_rows,
        trace_rows=trace_rows,
        scores=scores,
        flash_manifest=image.manifest(),
        virtual_time_s=virtual_time,
    )


def _payload_features(
    config: CampaignConfig,
    payload_list: Sequence[Payload],
    mef_at_first_temp: Dict[Tuple[str, str], List[float]],
    measured_transitions: Dict[str, set],
) -> Dict[str, PayloadFeatures]:
    features = {}
    for payload in payload_list:
        mef_hz = {}
        for name in config.configs:
            values = mef_at_first_temp.get((payload.name.value, name), [])
            if values:
                mef_hz[name], _ = analytics.cross_device_stats(values)
        if config.sweep_profiles:
            transitions = tuple(sorted(measured_transitions[payload.name.value]))
        else:
            transitions = tuple(sorted(
                buffering.value
                for buffering in payload.transition_configs
                if buffering.value in config.configs
            ))
        features[payload.name.value] = PayloadFeatures(
            mef_hz=mef_hz,
            exec_time_s=payload.base_execution_time,
            transition_configs=transitions,
        )
    return features


def export_campaign(report: CampaignReport, out_dir) -> Dict[str, Path]:
    """Write all report files plus the resolved-config echo."""
    paths = analytics.export_report(report, out_dir)
    resolved = Path(out_dir) / "resolved.ini"
    parser = configparser.ConfigParser()
    parser.read_dict(report.config)
    with open(resolved, "w") as fh:
        parser.write(fh)
    paths["resolved_config"] = resolved
    return paths
