"""Statistical harness over fine-tuning runs.

A sweep enumerates a small Cartesian grid of fine-tuning knobs, runs each
cell from a fresh seeded init, and collects one row per cell with the six
analyzed variables: best_epoch, dataset_percent, masked_percent, n_windows,
time, improvement.  The rest of the module turns that table into Pearson
correlations, univariate F statistics, permutation importances over a
nearest-neighbor reference regressor, an epoch-budget pick, and a
normalized parallel-coordinates export.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import TimeSeries
from .encoder import EncoderConfig, init_model
from .errors import DegenerateTarget, InsufficientRows, TsLatentError, ValidationError
from .finetune import FinetuneConfig, RunRecord, finetune, select_window_lengths

SWEEP_COLUMNS = ("best_epoch", "dataset_percent", "masked_percent", "n_windows", "time", "improvement")
FEATURE_COLUMNS = ("best_epoch", "dataset_percent", "masked_percent", "n_windows")
PARALLEL_COLUMNS = ("masked_percent", "best_epoch", "n_windows", "dataset_percent", "improvement")


@dataclass(frozen=True)
class SweepGrid:
    epochs: int = 20
    dataset_percents: tuple[float, ...] = (0.15, 0.2, 0.3)
    mask_percents: tuple[float, ...] = (0.25, 0.5, 0.75)
    n_windows_options: tuple[int, ...] = (1, 5)
    valid_percent: float = 0.3
    base_window: int = 17

    def __post_init__(self):
        if not (self.dataset_percents and self.mask_percents and self.n_windows_options):
            raise ValidationError("every grid axis needs at least one value")
        if self.epochs < 1:
            raise ValidationError("epochs must be positive")

    def cells(self) -> list[tuple[float, float, int]]:
        """Deterministic lexicographic enumeration of the Cartesian product."""
        return list(
            itertools.product(self.dataset_percents, self.mask_percents, self.n_windows_options)
        )

    @property
    def size(self) -> int:
        return len(self.dataset_percents) * len(self.mask_percents) * len(self.n_windows_options)


@dataclass
class SweepRow:
    best_epoch: int
    dataset_percent: float
    masked_percent: float
    n_windows: int
    time: float
    improvement: float
    failed: bool = False
    error: str = ""

    def values(self) -> tuple[float, ...]:
        return (
            float(self.best_epoch),
            self.dataset_percent,
            self.masked_percent,
            float(self.n_windows),
            self.time,
            self.improvement,
        )


@dataclass
class SweepResult:
    rows: list[SweepRow]
    records: list[RunRecord | None] = field(default_factory=list)

    def table(self, include_failed: bool = False) -> np.ndarray:
        rows = [r.values() for r in self.rows if include_failed or not r.failed]
        return np.array(rows, dtype=np.float64).reshape(-1, len(SWEEP_COLUMNS))

    @property
    def n_failed(self) -> int:
        return sum(r.failed for r in self.rows)


def cell_seed(master_seed: int, index: int) -> int:
    """Stable per-cell seed derived from the master seed."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def run_sweep(
    ts: TimeSeries,
    grid: SweepGrid,
    model_config: EncoderConfig,
    master_seed: int = 0,
    batch_size: int = 32,
    learning_rate: float = 1e-3,
    progress=None,
) -> SweepResult:
    """Run one fine-tune per grid cell from a fresh seeded init.

    Window lengths per cell are the fixed base window plus up to n_windows
    dominant periods of the series, capped so both temporal regions can hold
    them.  Failed cells are recorded with a flag; the sweep continues.
    """
    cells = grid.cells()
    max_window = _floor(min(min(grid.dataset_percents), grid.valid_percent) * ts.length)
    max_window = min(max_window, ts.length // 2)
    result = SweepResult(rows=[], records=[])
    for index, (dataset_percent, mask_percent, n_windows) in enumerate(cells):
        seed = cell_seed(master_seed, index)
        row = SweepRow(0, dataset_percent, mask_percent, n_windows, 0.0, 0.0)
        try:
            lengths = select_window_lengths(
                ts, n_windows, model_config.patch_len, grid.base_window, max_size=max_window
            )
            cfg = FinetuneConfig(
                window_lengths=lengths,
                training_percent=dataset_percent,
                valid_percent=grid.valid_percent,
                mask_percent=mask_percent,
                mix_windows=True,
                epochs=grid.epochs,
                batch_size=batch_size,
                learning_rate=learning_rate,
                seed=seed,
            )
            model = init_model(dataclasses.replace(model_config, seed=seed))
            _best, record = finetune(model, ts, cfg)
            row.best_epoch = record.best_epoch
            row.time = record.wall_time_seconds
            row.improvement = record.improvement_percent
            result.records.append(record)
        except TsLatentError as exc:
            row.failed = True
            row.error = f"{type(exc).__name__}: {exc}"
            result.records.append(None)
        result.rows.append(row)
        if progress is not None:
            progress((index + 1) / len(cells))
    return result


def _floor(x: float) -> int:
    return int(np.floor(x + 1e-9))


def _effectively_constant(x: np.ndarray) -> bool:
    # std can pick up float dust on a constant column (mean of n copies of
    # 4.2 is not exactly 4.2), so compare against the column's magnitude
    return x.std() <= 1e-12 * max(1.0, float(np.abs(x).max()))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if _effectively_constant(x) or _effectively_constant(y):
        return np.nan  # undefined for constant columns, reported as NaN
    return float(((x - x.mean()) * (y - y.mean())).mean() / (x.std() * y.std()))


def correlation_matrix(table: np.ndarray) -> np.ndarray:
    """Pearson r over rows for every column pair; unit diagonal; entries for
    constant columns are NaN without contaminating the rest."""
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] < 3:
        raise InsufficientRows(f"need at least 3 rows, got {table.shape}")
    m = table.shape[1]
    out = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = _pearson(table[:, i], table[:, j])
    return out


@dataclass
class FScores:
    features: tuple[str, ...]
    f_values: np.ndarray
    percents: np.ndarray
    infinite: np.ndarray  # flagged and excluded from the normalization


def f_scores(
    table: np.ndarray,
    feature_names: tuple[str, ...] = FEATURE_COLUMNS,
    columns: tuple[str, ...] = SWEEP_COLUMNS,
    target: str = "improvement",
) -> FScores:
    """Univariate regression F statistic per feature against the target:
    F = (r^2 / (1 - r^2)) * (n - 2), percentages normalized to sum to 100."""
    table = np.asarray(table, dtype=np.float64)
    if table.shape[0] < 3:
        raise InsufficientRows(f"need at least 3 rows, got {table.shape[0]}")
    y = table[:, columns.index(target)]
    n = table.shape[0]
    values = np.zeros(len(feature_names))
    for idx, name in enumerate(feature_names):
        r = _pearson(table[:, columns.index(name)], y)
        if np.isnan(r):
            values[idx] = 0.0
        elif abs(r) >= 1.0 - 1e-15:
            values[idx] = np.inf
        else:
            values[idx] = (r**2 / (1.0 - r**2)) * (n - 2)
    infinite = ~np.isfinite(values)
    finite_total = values[~infinite].sum()
    percents = np.zeros_like(values)
    if finite_total > 0:
        percents[~infinite] = values[~infinite] * 100.0 / finite_total
    return FScores(tuple(feature_names), values, percents, infinite)


def _standardize(x: np.ndarray) -> np.ndarray:
    std = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(std == 0.0, 1.0, std)


def _knn_mean_predict(train_x: np.ndarray, query_x: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Mean of the target over each query's k nearest training rows, never
    counting a row as its own neighbor (row identity, not coordinates)."""
    dist = np.linalg.norm(query_x[:, None, :] - train_x[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return y[nearest].mean(axis=1)


def permutation_importance(
    table: np.ndarray,
    feature_names: tuple[str, ...] = FEATURE_COLUMNS,
    columns: tuple[str, ...] = SWEEP_COLUMNS,
    target: str = "improvement",
    k: int = 3,
    repeats: int = 20,
    seed: int = 0,
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Permutation importance over a k-nearest-neighbor mean regressor.

    Features and target are standardized, so the raw importance (mean MSE
    increase when a column is shuffled, clipped at zero) reads as a fraction
    of the target variance.  Returns (names, raw importances, percents).
    """
    table = np.asarray(table, dtype=np.float64)
    n = table.shape[0]
    if n < 6:
        raise InsufficientRows(f"need at least 6 rows, got {n}")
    y = table[:, columns.index(target)]
    if _effectively_constant(y):
        raise DegenerateTarget("target column is constant")
    y = _standardize(y[:, None])[:, 0]
    X = _standardize(table[:, [columns.index(f) for f in feature_names]])
    baseline = float(np.mean((_knn_mean_predict(X, X, y, k) - y) ** 2))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xFEA7])))
    raw = np.zeros(len(feature_names))
    for j in range(len(feature_names)):
        deltas = []
        for _ in range(repeats):
            shuffled = X.copy()
            shuffled[:, j] = shuffled[rng.permutation(n), j]
            score = float(np.mean((_knn_mean_predict(X, shuffled, y, k) - y) ** 2))
            deltas.append(score - baseline)
        raw[j] = max(float(np.mean(deltas)), 0.0)
    total = raw.sum()
    percents = raw * 100.0 / total if total > 0 else np.zeros_like(raw)
    return tuple(feature_names), raw, percents


def select_epoch_budget(best_epochs: list[int]) -> int:
    """Pick an epoch budget from the frequency table of best epochs: the
    dominant mode when it is at least twice as frequent as the runner-up,
    otherwise the larger of the two most frequent values."""
    if not best_epochs:
        raise ValidationError("need at least one record")
    values, counts = np.unique(np.asarray(best_epochs, dtype=int), return_counts=True)
    order = sorted(range(len(values)), key=lambda i: (-counts[i], -values[i]))
    top = order[0]
    if len(order) == 1:
        return int(values[top])
    second = order[1]
    if counts[top] >= 2 * counts[second]:
        return int(values[top])
    return int(max(values[top], values[second]))


def export_parallel_coordinates(
    table: np.ndarray,
    top_n: int,
    columns: tuple[str, ...] = SWEEP_COLUMNS,
) -> tuple[tuple[str, ...], np.ndarray]:
    """Top-n rows by improvement, min-max normalized per column to [0, 1]
    (constant columns map to 0.5), in the fixed plot column order."""
    table = np.asarray(table, dtype=np.float64)
    if top_n > table.shape[0]:
        raise ValidationError(f"top_n={top_n} exceeds {table.shape[0]} rows")
    improvement = table[:, columns.index("improvement")]
    best = np.argsort(-improvement, kind="stable")[:top_n]
    selected = table[best][:, [columns.index(c) for c in PARALLEL_COLUMNS]]
    lo = selected.min(axis=0)
    hi = selected.max(axis=0)
    span = hi - lo
    out = np.where(span == 0.0, 0.5, (selected - lo) / np.where(span == 0.0, 1.0, span))
    return PARALLEL_COLUMNS, out
