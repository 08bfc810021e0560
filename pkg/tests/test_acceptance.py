"""End-to-end acceptance gate.

Each test prints one pass/fail line so the whole gate can be read off a
single run. Criteria 1-2 share one randomized search batch and criteria
3-4 and 10 share default campaign runs; everything is seeded.
"""

import statistics
import time

import numpy as np
import pytest

from agemon.analytics import MefSeries, degradation_steps, total_degradation
from agemon.campaign import CampaignConfig, build_devices, export_campaign, run_campaign
from agemon.controller import SearchConfig, find_mef, run_at_frequency
from agemon.device import DeviceConfig
from agemon.md5 import md5_hex
from agemon.memory import FaultableMemory
from agemon.payloads import (
    DEFAULT_PAYLOADS,
    PayloadName,
    march_c,
    multiply_matrices,
    smoothstep,
)
from agemon.physics import AgeingState

from conftest import make_rng
from oracles import all_single_faults, cofactor_determinant, sweep_mef_oracle

UNBUFFERED = DeviceConfig.unbuffered()
BUFFERED = DeviceConfig.buffered()

SEARCH = SearchConfig(f_min=1e6, f_max=200e6, step=10e3, runs_per_frequency=10)


def _report(number, description, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number}: {description}{suffix}")
    assert passed, f"criterion {number}: {description}{suffix}"


@pytest.fixture(scope="module")
def search_batch():
    """200 randomized deterministic-payload searches vs the sweep oracle."""
    fleet = build_devices(CampaignConfig(device_count=25))
    rng = np.random.default_rng(20260823)
    payload_names = (PayloadName.CPU_TEST, PayloadName.RAM_MARCH_C)
    configs = (UNBUFFERED, BUFFERED)
    cases = []
    start = time.monotonic()
    for case in range(200):
        device = fleet[int(rng.integers(len(fleet)))]
        device.set_temperature(float(rng.uniform(20.0, 80.0)))
        device.set_ageing(
            AgeingState(float(rng.uniform(0.0, 0.4)), float(rng.uniform(0.7, 1.0)))
        )
        payload = DEFAULT_PAYLOADS[payload_names[case % 2]]
        config = configs[(case // 2) % 2]
        outcome = find_mef(device, payload, config, SEARCH, make_rng(case))
        oracle = sweep_mef_oracle(
            device, payload, config, SEARCH.f_min, SEARCH.f_max, SEARCH.step
        )
        cases.append((outcome, oracle))
    return cases, time.monotonic() - start


@pytest.fixture(scope="module")
def default_campaign():
    return run_campaign(CampaignConfig(), ci_mode=True)


def _median_totals(report):
    """payload -> config -> median total degradation across devices."""
    groups = {}
    for series in report.mef_series:
        groups.setdefault((series.payload, series.config), []).append(
            total_degradation(series)
        )
    medians = {}
    for (payload, config), totals in groups.items():
        medians.setdefault(payload, {})[config] = statistics.median(totals)
    return medians


def _median_first_temp_mefs(report):
    """payload -> config -> median MEF at the first ladder temperature."""
    groups = {}
    for series in report.mef_series:
        groups.setdefault((series.payload, series.config), []).append(
            series.mefs[0]
        )
    medians = {}
    for (payload, config), mefs in groups.items():
        medians.setdefault(payload, {})[config] = statistics.median(mefs)
    return medians


def test_criterion_1_bisection_matches_sweep_oracle(search_batch):
    cases, elapsed = search_batch
    worst = max(abs(outcome.mef - oracle) for outcome, oracle in cases)
    passed = worst <= SEARCH.step + 1e-6 and elapsed < 60.0
    _report(
        1,
        "bisection agrees with the exhaustive sweep oracle within one step",
        passed,
        f"200 cases, worst gap {worst:.1f} Hz, {elapsed:.1f} s",
    )


def test_criterion_2_probe_budget(search_batch):
    cases, _ = search_batch
    most = max(len(outcome.trace) for outcome, _ in cases)
    _report(
        2,
        "every search probes at most 17 distinct frequencies",
        most <= 17,
        f"max probes {most}",
    )


def test_criterion_3_temperature_ladder(default_campaign):
    report = default_campaign
    monotone = all(
        all(b < a for a, b in zip(s.mefs, s.mefs[1:])) for s in report.mef_series
    )

    steps = [step for s in report.mef_series for step in degradation_steps(s)]
    median_step = statistics.median(steps)

    medians = _median_totals(report)
    flash_total = medians["flash_read"]["unbuffered"]
    ram_total = medians["ram_rw"]["unbuffered"]
    totals_in_band = 11.7 <= flash_total <= 15.7 and 11.7 <= ram_total <= 15.7

    config_shift = {
        payload: abs(by_config["buffered"] - by_config["unbuffered"])
        for payload, by_config in medians.items()
    }
    least_affected = min(config_shift, key=config_shift.get) == "cpu_test"

    passed = (
        monotone and 1.0 <= median_step <= 3.0 and totals_in_band and least_affected
    )
    _report(
        3,
        "default 8-device ladder reproduces the degradation trends",
        passed,
        f"median step {median_step:.2f}%, flash {flash_total:.2f}%, "
        f"ram {ram_total:.2f}%, least config-sensitive: "
        f"{min(config_shift, key=config_shift.get)}",
    )


def test_criterion_4_governing_paths(default_campaign):
    mefs = _median_first_temp_mefs(default_campaign)
    unbuffered = {p: by_config["unbuffered"] for p, by_config in mefs.items()}
    buffered = {p: by_config["buffered"] for p, by_config in mefs.items()}

    floor = min(unbuffered.values())
    flash_governed = (
        unbuffered["flash_read"] <= 1.02 * floor
        and unbuffered["ram_rw"] <= 1.02 * floor
    )
    matrix_lowest_buffered = all(
        buffered["matrix"] < value
        for payload, value in buffered.items()
        if payload != "matrix"
    )
    _report(
        4,
        "flash governs unbuffered MEFs; matrix is lowest buffered",
        flash_governed and matrix_lowest_buffered,
        f"unbuffered floor {floor / 1e6:.1f} MHz, "
        f"buffered matrix {buffered['matrix'] / 1e6:.1f} MHz",
    )


def test_criterion_5_march_c_full_coverage():
    start = time.monotonic()
    missed = []
    total = 0
    for fault in all_single_faults(16):
        total += 1
        memory = FaultableMemory(16)
        memory.inject(fault)
        if march_c(memory).ok:
            missed.append(fault)
    elapsed = time.monotonic() - start
    _report(
        5,
        "march test detects every single fault over a 16-word memory",
        not missed and elapsed < 10.0,
        f"{total} faults, {len(missed)} missed, {elapsed:.1f} s",
    )


def test_criterion_6_md5_vectors():
    vectors = [
        (b"", "d41d8cd98f00b204e9800998ecf8427e"),
        (b"a", "0cc175b9c0f1b6a831c399e269772661"),
        (b"abc", "900150983cd24fb0d6963f7d28e17f72"),
        (b"message digest", "f96b697d7cb7938d525a2f31aaf161d0"),
        (b"abcdefghijklmnopqrstuvwxyz", "c3fcd3d76192e4007dfb496cca67e13b"),
        (
            b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789",
            "d174ab98d277d9f5a5611c2c9f419d9f",
        ),
        (b"1234567890" * 8, "57edf4a22be3c955ac49da2e2107b67a"),
    ]
    mismatches = [m for m, expected in vectors if md5_hex(m) != expected]
    _report(
        6,
        "all RFC 1321 digest vectors match bit-exactly",
        not mismatches,
        f"{len(vectors)} vectors",
    )


def test_criterion_7_matrix_reference():
    image = build_devices(CampaignConfig(device_count=1))[0].flash_image
    product = multiply_matrices(image.matrix_a, image.matrix_b)
    oracle = cofactor_determinant(product)
    factored = cofactor_determinant(image.matrix_a) * cofactor_determinant(
        image.matrix_b
    )
    passed = oracle == image.reference_determinant == factored
    _report(
        7,
        "staged matrix determinant equals the cofactor oracle and det(A)*det(B)",
        passed,
        f"determinant {oracle}",
    )


def test_criterion_8_degradation_identities():
    rng = np.random.default_rng(8)
    worst_telescope = 0.0
    worst_scale = 0.0
    for _ in range(1000):
        length = int(rng.integers(2, 9))
        mefs = np.sort(rng.uniform(0.2, 1.0, size=length))[::-1] * 1e8
        temps = tuple(20.0 + 10.0 * i for i in range(length))
        series = MefSeries("d", "p", "c", tuple(zip(temps, mefs)))
        total = total_degradation(series)
        telescoped = sum(degradation_steps(series))
        worst_telescope = max(worst_telescope, abs(telescoped - total) / abs(total))
        scale = float(rng.uniform(1e-3, 1e3))
        scaled = MefSeries("d", "p", "c", tuple(zip(temps, mefs * scale)))
        worst_scale = max(
            worst_scale, abs(total_degradation(scaled) - total) / abs(total)
        )
    passed = worst_telescope < 1e-12 and worst_scale < 1e-12
    _report(
        8,
        "telescoping and scale invariance hold to 1e-12 over 1000 series",
        passed,
        f"worst rel errors {worst_telescope:.2e} / {worst_scale:.2e}",
    )


def test_criterion_9_transition_statistics(device):
    payload = DEFAULT_PAYLOADS[PayloadName.FLASH_READ]
    mef = device.mef_oracle(payload.activated_subsystems, UNBUFFERED)
    midpoint = 0.5 * (mef + mef * 1.06)
    expected = smoothstep(0.5)
    half_width = 2.576 * np.sqrt(expected * (1 - expected) / 500)
    hits = 0
    for trial in range(100):
        result = run_at_frequency(
            device, payload, UNBUFFERED, midpoint, 500, make_rng(trial)
        )
        if abs(result.error_fraction - expected) <= half_width:
            hits += 1
    _report(
        9,
        "midpoint error fraction sits in the 99% binomial interval",
        hits >= 95,
        f"{hits}/100 trials within {expected:.3f} +/- {half_width:.4f}",
    )


def test_criterion_10_byte_identical_reports(tmp_path):
    first_paths = export_campaign(
        run_campaign(CampaignConfig(), ci_mode=True), tmp_path / "first"
    )
    second_paths = export_campaign(
        run_campaign(CampaignConfig(), ci_mode=True), tmp_path / "second"
    )
    differing = [
        key
        for key in first_paths
        if first_paths[key].read_bytes() != second_paths[key].read_bytes()
    ]
    _report(
        10,
        "repeated default campaigns produce byte-identical reports",
        not differing,
        f"{len(first_paths)} files compared",
    )
