"""Foundational time-series types and windowing / normalization arithmetic.

A :class:`TimeSeries` is a named, uniformly sampled ``T x C`` matrix of real
samples.  Everything downstream (window slicing, bucket-mean downsampling,
per-window normalization, Fourier-based dominant period selection) operates
on these values and is pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, NoDominantPeriod, ValidationError, WindowTooLong

NORM_EPS = 1e-5


@dataclass(frozen=True)
class TimeSeries:
    """A named multichannel series: ``values`` has shape (T, C)."""

    name: str
    values: np.ndarray
    sample_period: float | None = None
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValidationError(f"series values must be 1D or 2D, got ndim={values.ndim}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError(f"series must have T >= 1 and C >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("series values must all be finite")
        if self.sample_period is not None and self.sample_period <= 0:
            raise ValidationError("sample_period must be positive")
        names = tuple(self.channel_names) or tuple(f"ch{i}" for i in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise ValidationError(
                f"{len(names)} channel names for {values.shape[1]} channels"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", names)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: window ``length`` and ``stride`` in timesteps."""

    length: int
    stride: int

    def __post_init__(self):
        if self.length < 1:
            raise ValidationError(f"window length must be >= 1, got {self.length}")
        if self.stride < 1:
            raise ValidationError(f"window stride must be >= 1, got {self.stride}")


@dataclass(frozen=True)
class WindowSlice:
    """Provenance of one window: where it was cut from which series."""

    start: int
    length: int
    source: str

    def __post_init__(self):
        if self.start < 0 or self.length < 1:
            raise ValidationError(f"bad window slice ({self.start}, {self.length})")

    @property
    def stop(self) -> int:
        return self.start + self.length


def slice_windows(ts: TimeSeries, spec: WindowSpec) -> list[WindowSlice]:
    """Cut every full window of ``spec.length`` at multiples of ``spec.stride``.

    Returns floor((T - w) / s) + 1 slices ordered by start; a trailing
    partial window is discarded, never padded.
    """
    T = ts.length
    if spec.length > T:
        raise WindowTooLong(f"window length {spec.length} exceeds series length {T}")
    count = (T - spec.length) // spec.stride + 1
    return [WindowSlice(k * spec.stride, spec.length, ts.name) for k in range(count)]


def window_values(ts: TimeSeries, sl: WindowSlice) -> np.ndarray:
    """Raw (length, C) samples behind a slice."""
    if sl.stop > ts.length:
        raise ValidationError(f"slice [{sl.start}, {sl.stop}) exceeds series length {ts.length}")
    return np.array(ts.values[sl.start : sl.stop])


def downsample_mean(ts: TimeSeries, bucket: int) -> TimeSeries:
    """Bucketed mean: T' = ceil(T / bucket); a trailing partial bucket is
    averaged over its actual size."""
    if bucket < 1:
        raise ValidationError(f"bucket must be >= 1, got {bucket}")
    if bucket == 1:
        return ts
    T = ts.length
    starts = np.arange(0, T, bucket)
    sums = np.add.reduceat(ts.values, starts, axis=0)
    counts = np.minimum(starts + bucket, T) - starts
    out = sums / counts[:, None]
    period = None if ts.sample_period is None else ts.sample_period * bucket
    return TimeSeries(ts.name, out, sample_period=period, channel_names=ts.channel_names)


def instance_normalize(window: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-channel standardization of a (w, C) window.

    The divisor is floored at ``NORM_EPS`` so constant channels map to zeros
    while typical scales are untouched (and positive rescaling of the input
    leaves the output unchanged).  Returns (normalized, mean, std) with the
    raw per-channel std so callers can de-normalize exactly.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 1:
        window = window[:, None]
    if window.shape[0] < 1:
        raise ValidationError("window must have at least one sample")
    mean = window.mean(axis=0)
    std = window.std(axis=0)
    out = (window - mean) / np.maximum(std, NORM_EPS)
    return out, mean, std


def instance_denormalize(normalized: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`instance_normalize`."""
    return normalized * np.maximum(np.asarray(std, dtype=np.float64), NORM_EPS) + mean


def dominant_window_sizes(
    ts: TimeSeries, k: int, min_size: int = 2, max_size: int | None = None
) -> list[int]:
    """Candidate window lengths from the strongest periodicities of channel 0.

    De-means the first channel, ranks nonzero DFT bins by magnitude, maps bin
    j to period round(T / j) and keeps up to ``k`` distinct periods inside
    [min_size, max_size], in rank order.
    """
    T = ts.length
    if k < 1:
        raise ValidationError("k must be >= 1")
    if T < 4:
        raise ValidationError(f"series too short for spectral analysis (T={T})")
    if max_size is None:
        max_size = T // 2
    if min_size < 2 or max_size > T / 2:
        raise ValidationError(
            f"need 2 <= min_size and max_size <= T/2, got [{min_size}, {max_size}] for T={T}"
        )
    x = ts.values[:, 0]
    spectrum = np.abs(np.fft.rfft(x - x.mean()))
    order = np.argsort(-spectrum[1:], kind="stable") + 1  # skip the DC bin
    floor = spectrum.max() * 1e-8  # bins that are zero up to float noise
    sizes: list[int] = []
    for j in order:
        if spectrum[j] <= floor:
            break
        period = int(round(T / j))
        if period < min_size or period > max_size or period in sizes:
            continue
        sizes.append(period)
        if len(sizes) == k:
            break
    if not sizes:
        raise NoDominantPeriod(
            f"no dominant period inside [{min_size}, {max_size}] for series {ts.name!r}"
        )
    return sizes


def save_series_csv(ts: TimeSeries, path: str | Path) -> None:
    """Write the delimited-text form: one header row of channel names, one
    row of decimal reals per timestep."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(ts.channel_names) + "\n")
        for row in ts.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_series_csv(path: str | Path, name: str | None = None) -> TimeSeries:
    """Read the delimited-text form; rejects ragged rows and non-numeric cells."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise FormatError(f"{path}: need a header row and at least one data row")
    header = [c.strip() for c in lines[0].split(",")]
    n_cols = len(header)
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != n_cols:
            raise FormatError(f"{path}:{lineno}: expected {n_cols} cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from exc
    return TimeSeries(name or path.stem, np.array(rows), channel_names=tuple(header))
