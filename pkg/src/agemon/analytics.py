"""Degradation metrics, cross-device statistics, payload scoring, reports.

All computations here are pure functions over completed campaign results.
Export is single-writer per output path.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

SCHEMA_VERSION = 1

CSV_HEADER = "frequency_hz,temperature_c,device_id,payload,config,error_fraction,hang_fraction"

STAR_SCALE = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)

# Absolute execution-time bands (seconds at the 72 MHz reference clock,
# buffered) quantizing the star scale; documented scoring convention.
EXECUTION_TIME_BANDS = (
    (8.0e-4, 3.0),
    (1.0e-3, 2.5),
    (1.2e-3, 2.0),
    (1.4e-3, 1.5),
    (1.8e-3, 1.0),
    (2.5e-3, 0.5),
)

# Relative tolerance under which two MEF values count as tied for ranking.
MEF_TIE_TOLERANCE = 0.02


class ReportError(RuntimeError):
    """A report cannot be computed or written."""


@dataclass(frozen=True)
class MefSeries:
    device_id: str
    payload: str
    config: str
    points: Tuple[Tuple[float, float], ...]  # (temperature_c, mef_hz)

    def __post_init__(self) -> None:
        temps = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(temps, temps[1:])):
            raise ValueError("temperatures must be strictly increasing")
        if any(mef <= 0 for _, mef in self.points):
            raise ValueError("all MEF values must be > 0")

    @property
    def mefs(self) -> List[float]:
        return [mef for _, mef in self.points]


def degradation_step(series: MefSeries, i: int) -> float:
    """Per-step degradation in percent, relative to the MEF at the first
    temperature: (MEF(T_{i-1}) - MEF(T_i)) / MEF(T_0) * 100."""
    if i < 1 or i >= len(series.points):
        raise ValueError(f"step index {i} out of range")
    mefs = series.mefs
    return (mefs[i - 1] - mefs[i]) / mefs[0] * 100.0


def degradation_steps(series: MefSeries) -> List[float]:
    return [degradation_step(series, i) for i in range(1, len(series.points))]


def total_degradation(series: MefSeries) -> float:
    """Total degradation percent over the series (telescoped steps)."""
    if len(series.points) < 2:
        raise ValueError("series needs at least two points")
    mefs = series.mefs
    return (mefs[0] - mefs[-1]) / mefs[0] * 100.0


def cross_device_stats(values: Sequence[float]) -> Tuple[float, Tuple[float, float]]:
    """Median and (Q1, Q3) with linear interpolation between order statistics."""
    if len(values) == 0:
        raise ValueError("values must be non-empty")
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    return float(med), (float(q1), float(q3))


@dataclass(frozen=True)
class PayloadScore:
    mef_score: float
    execution_time_score: float
    error_transition_score: float

    def __post_init__(self) -> None:
        for value in (self.mef_score, self.execution_time_score, self.error_transition_score):
            if value not in STAR_SCALE:
                raise ValueError(f"score {value} not on the star scale")


@dataclass(frozen=True)
class PayloadFeatures:
    mef_hz: Dict[str, float]  # config name -> representative MEF
    exec_time_s: float  # at the reference clock, buffered
    transition_configs: Tuple[str, ...]  # configs showing an error transition


def _mef_stars(ordered_configs: Sequence[str], features: Dict[str, PayloadFeatures]) -> Dict[str, float]:
    """Per-payload MEF stars: within each config, rank ascending (a lower MEF
    activates more critical paths and scores higher); a payload keeps its
    best star across configs. Values within the tie tolerance share a rank."""
    best: Dict[str, float] = {name: 0.0 for name in features}
    for config in ordered_configs:
        values = sorted(
            (f.mef_hz[config], name) for name, f in features.items()
        )
        group_floor = values[0][0]
        rank = 0
        for value, name in values:
            if value > group_floor * (1 + MEF_TIE_TOLERANCE):
                rank += 1
                group_floor = value
            best[name] = max(best[name], max(3.0 - 0.5 * rank, 0.0))
    return best


def _execution_time_stars(exec_time_s: float) -> float:
    for threshold, stars in EXECUTION_TIME_BANDS:
        if exec_time_s <= threshold:
            return stars
    return 0.0


def _transition_stars(n_configs_with_transition: int) -> float:
    return {0: 0.0, 1: 1.5, 2: 3.0}[min(n_configs_with_transition, 2)]


def score_payloads(features: Dict[str, PayloadFeatures]) -> Dict[str, PayloadScore]:
    """Deterministic star scores from measured payload features."""
    if not features:
        raise ReportError("no payload features to score")
    configs: List[str] = []
    for name, f in features.items():
        if not f.mef_hz:
            raise ReportError(f"payload {name} missing MEF features")
        for config in f.mef_hz:
            if config not in configs:
                configs.append(config)
    for name, f in features.items():
        missing = [c for c in configs if c not in f.mef_hz]
        if missing:
            raise ReportError(f"payload {name} missing MEF for configs {missing}")
    mef_stars = _mef_stars(configs, features)
    return {
        name: PayloadScore(
            mef_score=mef_stars[name],
            execution_time_score=_execution_time_stars(f.exec_time_s),
            error_transition_score=_transition_stars(len(f.transition_configs)),
        )
        for name, f in features.items()
    }


@dataclass
class CampaignReport:
    """Aggregated campaign results, serializable to the report files."""

    config: dict
    mef_series: List[MefSeries]
    sweep_rows: List[dict]  # CSV_HEADER columns
    trace_rows: List[dict]
    scores: Dict[str, PayloadScore]
    flash_manifest: dict
    virtual_time_s: float
    schema_version: int = SCHEMA_VERSION

    def degradation_summary(self) -> dict:
        """Per payload x config: per-device totals, medians, IQRs, anomalies."""
        groups: Dict[Tuple[str, str], List[MefSeries]] = {}
        for series in self.mef_series:
            groups.setdefault((series.payload, series.config), []).append(series)
        summary = {}
        for (payload, config), group in sorted(groups.items()):
            totals = [total_degradation(s) for s in group]
            steps = [step for s in group for step in degradation_steps(s)]
            med_total, iqr_total = cross_device_stats(totals)
            med_step, iqr_step = cross_device_stats(steps)
            summary[f"{payload}/{config}"] = {
                "per_device_total_percent": {
                    s.device_id: total_degradation(s) for s in group
                },
                "median_total_percent": med_total,
                "iqr_total_percent": list(iqr_total),
                "median_step_percent": med_step,
                "iqr_step_percent": list(iqr_step),
                # MEF increases are reported, not clamped
                "anomalous_steps": sum(
                    1 for s in group for step in degradation_steps(s) if step < 0
                ),
            }
        return summary

    def to_json_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "flash_image": self.flash_manifest,
            "virtual_time_s": self.virtual_time_s,
            "mef_series": [
                {
                    "device_id": s.device_id,
                    "payload": s.payload,
                    "config": s.config,
                    "points": [[t, mef] for t, mef in s.points],
                }
                for s in self.mef_series
            ],
            "degradation": self.degradation_summary(),
            "scores": {
                name: {
                    "mef": score.mef_score,
                    "execution_time": score.execution_time_score,
                    "error_transition": score.error_transition_score,
                }
                for name, score in sorted(self.scores.items())
            },
        }


def export_report(report: CampaignReport, out_dir) -> Dict[str, Path]:
    """Write summary JSON, sweep CSV, score table, and the trace JSONL.

    Refuses to write anything for an empty campaign.
    """
    if not report.mef_series:
        raise ReportError("refusing to export an empty campaign report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary": out / "summary.json",
        "sweeps": out / "sweeps.csv",
        "scores": out / "scores.json",
        "trace": out / "trace.jsonl",
    }
    try:
        summary = json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
        paths["summary"].write_text(summary + "\n")

        columns = CSV_HEADER.split(",")
        with open(paths["sweeps"], "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(report.sweep_rows)

        scores = {
            name: {
                "mef": score.mef_score,
                "execution_time": score.execution_time_score,
                "error_transition": score.error_transition_score,
            }
            for name, score in sorted(report.scores.items())
        }
        paths["scores"].write_text(json.dumps(scores, indent=2, sort_keys=True) + "\n")

        with open(paths["trace"], "w") as fh:
            for row in report.trace_rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    except OSError as exc:
        raise ReportError(f"failed writing report files under {out}: {exc}") from exc
    return paths
