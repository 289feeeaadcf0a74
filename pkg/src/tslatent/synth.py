"""Seeded generators for the four synthetic benchmark series.

Each generator is a pure function of its config: same config, same bytes.
The constants (segment periods, spike magnitudes, anomaly waveforms) are
documented defaults, exposed on the config so alternates can be tested, and
every output carries ground-truth annotations for downstream checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import TimeSeries
from .errors import AnomalyOutOfRange, OverlappingAnomalies, ValidationError

# Stream tags so each generator draws from its own PRNG lineage.
_STREAM = {"s1": 1, "s2": 2, "s3": 3, "mtoy": 4}


def _rng(seed: int, dataset: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _STREAM[dataset]])))


@dataclass(frozen=True)
class GroundTruth:
    """What a generator planted: segment labels, anomalies, trend slope."""

    segments: tuple[tuple[int, int, str], ...] = ()
    anomalies: tuple[tuple[int, int], ...] = ()
    trend_slope: float | None = None

    def validate(self, total_length: int) -> None:
        prev_end = 0
        for start, end, _label in self.segments:
            if start != prev_end or end <= start:
                raise ValidationError(f"segments must be ordered and contiguous, got {self.segments}")
            prev_end = end
        if self.segments and prev_end != total_length:
            raise ValidationError(f"segments cover [0, {prev_end}) but T={total_length}")
        for start, length in self.anomalies:
            if start < 0 or length < 1 or start + length > total_length:
                raise AnomalyOutOfRange(f"anomaly ({start}, {length}) outside [0, {total_length})")

    def to_dict(self) -> dict:
        return {
            "segments": [list(s) for s in self.segments],
            "anomalies": [list(a) for a in self.anomalies],
            "trend_slope": self.trend_slope,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            segments=tuple((int(a), int(b), str(lbl)) for a, b, lbl in d.get("segments", [])),
            anomalies=tuple((int(a), int(b)) for a, b in d.get("anomalies", [])),
            trend_slope=d.get("trend_slope"),
        )


@dataclass(frozen=True)
class SynthConfig:
    """Knobs shared by the generators plus per-dataset extras.

    The defaults give a 10k-step series; acceptance-sized runs pass a
    smaller ``total_length``.
    """

    total_length: int = 10_000
    noise_std: float = 0.05
    seed: int = 0
    # S1: four segments, equal lengths
    segment_periods: tuple[float, ...] = (20.0, 50.0, 20.0, 80.0)
    segment_amplitudes: tuple[float, ...] = (1.0, 1.0, 3.0, 1.0)
    # S2: base sinusoid plus two single-sample spikes
    base_period: float = 50.0
    base_amplitude: float = 1.0
    anomaly_positions: tuple[int, ...] = (2_500, 7_500)
    spike_magnitude: float | None = None  # default 8x base amplitude
    # S3: linear trend plus seasonality
    trend_slope: float = 0.001
    # M-Toy: multichannel with two anomalous subsequences
    n_channels: int = 3
    channel_periods: tuple[float, ...] = (25.0, 40.0, 60.0)
    subsequence_anomalies: tuple[tuple[int, int], ...] = ((1_000, 64), (4_000, 64))
    anomaly_channel: int = 0

    def __post_init__(self):
        if self.total_length < 100:
            raise ValidationError(f"total_length must be >= 100, got {self.total_length}")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be >= 0")


def gen_s1(cfg: SynthConfig) -> tuple[TimeSeries, GroundTruth]:
    """Four concatenated sinusoid segments (labels df_1..df_4) for
    segmentation analysis; each segment has its own period and amplitude."""
    if len(cfg.segment_periods) != 4 or len(cfg.segment_amplitudes) != 4:
        raise ValidationError("gen_s1 needs exactly 4 segment periods and amplitudes")
    T = cfg.total_length
    rng = _rng(cfg.seed, "s1")
    bounds = [round(i * T / 4) for i in range(5)]
    values = np.empty(T)
    segments = []
    for i in range(4):
        lo, hi = bounds[i], bounds[i + 1]
        t = np.arange(hi - lo)
        values[lo:hi] = cfg.segment_amplitudes[i] * np.sin(2 * np.pi * t / cfg.segment_periods[i])
        segments.append((lo, hi, f"df_{i + 1}"))
    values += rng.normal(0.0, cfg.noise_std, T)
    truth = GroundTruth(segments=tuple(segments))
    truth.validate(T)
    return TimeSeries("s1", values[:, None], channel_names=("value",)), truth


def gen_s2(cfg: SynthConfig) -> tuple[TimeSeries, GroundTruth]:
    """Sinusoid plus noise with two single-sample spikes for point-anomaly
    analysis.  Spikes are additive, default 8x the clean amplitude."""
    T = cfg.total_length
    if len(cfg.anomaly_positions) != 2:
        raise ValidationError("gen_s2 needs exactly 2 anomaly positions")
    for pos in cfg.anomaly_positions:
        if not 0 <= pos < T:
            raise AnomalyOutOfRange(f"anomaly position {pos} outside [0, {T})")
    if abs(cfg.anomaly_positions[0] - cfg.anomaly_positions[1]) < 0.1 * T:
        raise ValidationError("anomaly positions must be separated by >= 10% of T")
    magnitude = cfg.spike_magnitude if cfg.spike_magnitude is not None else 8.0 * cfg.base_amplitude
    rng = _rng(cfg.seed, "s2")
    t = np.arange(T)
    values = cfg.base_amplitude * np.sin(2 * np.pi * t / cfg.base_period)
    values += rng.normal(0.0, cfg.noise_std, T)
    for pos in cfg.anomaly_positions:
        values[pos] += magnitude
    truth = GroundTruth(anomalies=tuple((int(p), 1) for p in cfg.anomaly_positions))
    truth.validate(T)
    return TimeSeries("s2", values[:, None], channel_names=("value",)), truth


def gen_s3(cfg: SynthConfig) -> tuple[TimeSeries, GroundTruth]:
    """Linear trend plus seasonality for trend analysis.

    The seasonal term is phase-centered on the series midpoint, which makes
    it orthogonal to the linear ramp at any length, so the least-squares
    slope of a noiseless output equals ``trend_slope`` to float precision.
    """
    if cfg.trend_slope == 0:
        raise ValidationError("gen_s3 requires a nonzero trend_slope")
    T = cfg.total_length
    rng = _rng(cfg.seed, "s3")
    t = np.arange(T)
    seasonal = cfg.base_amplitude * np.cos(2 * np.pi * (t - (T - 1) / 2) / cfg.base_period)
    values = cfg.trend_slope * t + seasonal + rng.normal(0.0, cfg.noise_std, T)
    truth = GroundTruth(trend_slope=cfg.trend_slope)
    truth.validate(T)
    return TimeSeries("s3", values[:, None], channel_names=("value",)), truth


def gen_mtoy(cfg: SynthConfig) -> tuple[TimeSeries, GroundTruth]:
    """Multichannel quasi-periodic series with two subsequence anomalies.

    Inside each annotated window the designated channel's waveform is
    replaced by a frequency-shifted (3x) version; everything outside is
    bit-identical to the clean generation under the same seed.
    """
    T = cfg.total_length
    C = cfg.n_channels
    if C < 2:
        raise ValidationError("gen_mtoy needs at least 2 channels")
    if len(cfg.channel_periods) != C:
        raise ValidationError(f"need {C} channel periods, got {len(cfg.channel_periods)}")
    if len(cfg.subsequence_anomalies) != 2:
        raise ValidationError("gen_mtoy needs exactly 2 anomaly subsequences")
    if not 0 <= cfg.anomaly_channel < C:
        raise ValidationError(f"anomaly_channel {cfg.anomaly_channel} out of range")
    windows = sorted(cfg.subsequence_anomalies)
    for start, length in windows:
        if length < 2:
            raise ValidationError(f"subsequence anomaly length must be >= 2, got {length}")
        if start < 0 or start + length > T:
            raise AnomalyOutOfRange(f"anomaly ({start}, {length}) outside [0, {T})")
    if windows[0][0] + windows[0][1] > windows[1][0]:
        raise OverlappingAnomalies(f"anomaly windows {windows} overlap")

    rng = _rng(cfg.seed, "mtoy")
    t = np.arange(T)
    values = np.empty((T, C))
    for c in range(C):
        phase = 2 * np.pi * c / C
        values[:, c] = np.sin(2 * np.pi * t / cfg.channel_periods[c] + phase)
    values += rng.normal(0.0, cfg.noise_std, (T, C))

    c = cfg.anomaly_channel
    shifted_period = cfg.channel_periods[c] / 3.0
    phase = 2 * np.pi * c / C
    for start, length in cfg.subsequence_anomalies:
        seg = np.arange(start, start + length)
        values[seg, c] = np.sin(2 * np.pi * seg / shifted_period + phase)

    truth = GroundTruth(anomalies=tuple((int(s), int(l)) for s, l in cfg.subsequence_anomalies))
    truth.validate(T)
    names = tuple(f"ch{i}" for i in range(C))
    return TimeSeries("mtoy", values, channel_names=names), truth


GENERATORS = {"s1": gen_s1, "s2": gen_s2, "s3": gen_s3, "mtoy": gen_mtoy}


def generate(kind: str, cfg: SynthConfig) -> tuple[TimeSeries, GroundTruth]:
    if kind not in GENERATORS:
        raise ValidationError(f"unknown dataset kind {kind!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[kind](cfg)


def save_annotations(truth: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(json.dumps(truth.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_annotations(path: str | Path) -> GroundTruth:
    return GroundTruth.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
