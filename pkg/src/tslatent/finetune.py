"""Fine-tuning of the encoder on one series, in two batch-construction modes.

``mix_windows=False`` slices each window length separately into
non-overlapping windows and randomly assigns disjoint train/valid subsets
from anywhere in the series.  ``mix_windows=True`` splits the series
temporally (training region first, validation region right after) and draws
one window length per batch.

Either way the full batch schedule, masks included, is built up front from
the config seed and replayed every epoch, so a run is a pure function of
(model, series, config): validation batches are identical across passes and
a zero learning rate reproduces the initial model exactly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .core import TimeSeries, dominant_window_sizes
from .encoder import (
    EncoderModel,
    MaskSpec,
    batch_loss_and_gradients,
    batch_masked_loss,
    sample_mask,
)
from .errors import (
    DivergedLoss,
    NoDominantPeriod,
    NotEnoughWindows,
    RegionTooShort,
    ValidationError,
    ZeroBaseline,
)

MOMENTUM = 0.9


def _floor_share(fraction: float, total: int) -> int:
    # guard against float dust (0.15 + 0.30 etc.) flipping the floor
    return int(np.floor(fraction * total + 1e-9))


@dataclass(frozen=True)
class FinetuneConfig:
    window_lengths: tuple[int, ...] = (17,)
    training_percent: float = 0.15
    valid_percent: float = 0.3
    mask_percent: float = 0.25
    mix_windows: bool = True
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.window_lengths:
            raise ValidationError("window_lengths must be non-empty")
        if any(w < 1 for w in self.window_lengths):
            raise ValidationError("window lengths must be positive")
        if not 0 < self.training_percent < 1 or not 0 < self.valid_percent < 1:
            raise ValidationError("training_percent and valid_percent must be in (0, 1)")
        if self.training_percent + self.valid_percent > 1 + 1e-12:
            raise ValidationError("training_percent + valid_percent must be <= 1")
        if not 0 < self.mask_percent < 1:
            raise ValidationError("mask_percent must be in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValidationError("learning_rate must be >= 0")
        object.__setattr__(self, "window_lengths", tuple(int(w) for w in self.window_lengths))


@dataclass
class RunRecord:
    config_hash: str
    loss_first: float
    loss_final: float
    improvement_percent: float
    best_epoch: int
    wall_time_seconds: float
    train_curve: list[float] = field(default_factory=list)
    valid_curve: list[float] = field(default_factory=list)
    diverged: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)


@dataclass
class Batch:
    window_length: int
    starts: np.ndarray  # (B,) absolute positions in the series
    values: np.ndarray  # (B, window_length, C)
    masks: list[MaskSpec]


@dataclass
class BatchSchedule:
    train: list[Batch]
    valid: list[Batch]


def config_fingerprint(*objs) -> str:
    """Stable hex digest of dataclass configs (order-independent keys)."""
    payload = [dataclasses.asdict(o) if dataclasses.is_dataclass(o) else o for o in objs]
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def loss_improvement(loss_first: float, loss_final: float) -> float:
    """Percentage loss reduction from the first to the final validation pass."""
    if loss_first <= 0:
        raise ZeroBaseline(f"loss_first must be positive, got {loss_first}")
    return (loss_first - loss_final) * 100.0 / loss_first


def _check_lengths(cfg: FinetuneConfig, patch_len: int, T: int) -> None:
    for wlen in cfg.window_lengths:
        if wlen < 2 * patch_len:
            raise ValidationError(
                f"window length {wlen} yields fewer than 2 patches of {patch_len}; masking is undefined"
            )
        if wlen > T:
            raise ValidationError(f"window length {wlen} exceeds series length {T}")


def _cut(ts: TimeSeries, starts: np.ndarray, wlen: int) -> np.ndarray:
    return np.stack([ts.values[s : s + wlen] for s in starts])


def _sample_masks(n: int, P: int, ratio: float, rng: np.random.Generator) -> list[MaskSpec]:
    return [sample_mask(P, ratio, rng) for _ in range(n)]


def build_batches_fixed(ts: TimeSeries, cfg: FinetuneConfig, patch_len: int) -> BatchSchedule:
    """Per-length random assignment: for each window length, slice the whole
    series into non-overlapping windows and sample disjoint train/valid
    subsets (floor(train*n) and floor((train+valid)*n) - floor(train*n), so a
    train+valid of exactly 1 assigns every window once)."""
    T = ts.length
    _check_lengths(cfg, patch_len, T)
    pick_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 11])))
    mask_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 12])))
    train_batches: list[Batch] = []
    valid_batches: list[Batch] = []
    for wlen in cfg.window_lengths:
        n = T // wlen
        n_train = _floor_share(cfg.training_percent, n)
        n_valid = _floor_share(cfg.training_percent + cfg.valid_percent, n) - n_train
        if n_train == 0 or n_valid == 0:
            raise NotEnoughWindows(
                f"length {wlen}: {n} windows give {n_train} train / {n_valid} valid"
            )
        perm = pick_rng.permutation(n)
        starts_all = perm * wlen
        P = wlen // patch_len
        for dest, idx in (
            (train_batches, starts_all[:n_train]),
            (valid_batches, starts_all[n_train : n_train + n_valid]),
        ):
            for lo in range(0, len(idx), cfg.batch_size):
                starts = idx[lo : lo + cfg.batch_size]
                dest.append(
                    Batch(wlen, starts, _cut(ts, starts, wlen),
                          _sample_masks(len(starts), P, cfg.mask_percent, mask_rng))
                )
    return BatchSchedule(train_batches, valid_batches)


def build_batches_mixed(ts: TimeSeries, cfg: FinetuneConfig, patch_len: int) -> BatchSchedule:
    """Temporal split: training region first, validation region right after.
    Each batch draws one window length uniformly and slices random windows
    of that length from its own region; the whole schedule (lengths, starts,
    masks) is cached so every pass sees identical batches."""
    T = ts.length
    _check_lengths(cfg, patch_len, T)
    train_len = _floor_share(cfg.training_percent, T)
    valid_len = _floor_share(cfg.valid_percent, T)
    longest = max(cfg.window_lengths)
    if train_len < longest or valid_len < longest:
        raise RegionTooShort(
            f"regions of {train_len}/{valid_len} steps cannot hold a {longest}-step window"
        )
    shortest = min(cfg.window_lengths)
    lengths = np.array(cfg.window_lengths)

    def build(region_start: int, region_len: int, stream: int) -> list[Batch]:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, stream])))
        n_batches = max(1, int(np.ceil((region_len // shortest) / cfg.batch_size)))
        batches = []
        for _ in range(n_batches):
            wlen = int(rng.choice(lengths))
            starts = region_start + rng.integers(0, region_len - wlen + 1, size=cfg.batch_size)
            P = wlen // patch_len
            batches.append(
                Batch(wlen, starts, _cut(ts, starts, wlen),
                      _sample_masks(len(starts), P, cfg.mask_percent, rng))
            )
        return batches

    return BatchSchedule(build(0, train_len, 21), build(train_len, valid_len, 22))


def build_batches(ts: TimeSeries, cfg: FinetuneConfig, patch_len: int) -> BatchSchedule:
    builder = build_batches_mixed if cfg.mix_windows else build_batches_fixed
    return builder(ts, cfg, patch_len)


def evaluate_schedule(model: EncoderModel, batches: list[Batch]) -> float:
    """Mean over batches of the batch masked loss, with the cached masks."""
    if not batches:
        raise NotEnoughWindows("no batches to evaluate")
    return float(np.mean([batch_masked_loss(model, b.values, b.masks) for b in batches]))


def finetune(
    model: EncoderModel,
    ts: TimeSeries,
    cfg: FinetuneConfig,
    progress=None,
) -> tuple[EncoderModel, RunRecord]:
    """Masked-reconstruction training with best-epoch checkpointing.

    The pre-training validation loss is ``loss_first``; the model snapshot
    with the lowest epoch training loss (first epoch on ties) is evaluated
    on the same validation batches after the last epoch to give
    ``loss_final``.  Raises DivergedLoss (with the partial record attached)
    if any loss goes non-finite.
    """
    if model.config.patch_len > min(cfg.window_lengths):
        raise ValidationError(
            f"patch length {model.config.patch_len} exceeds shortest window {min(cfg.window_lengths)}"
        )
    started = time.monotonic()
    schedule = build_batches(ts, cfg, model.config.patch_len)
    current = model.clone()
    fingerprint = config_fingerprint(cfg, model.config)

    loss_first = evaluate_schedule(current, schedule.valid)
    record = RunRecord(fingerprint, loss_first, loss_first, 0.0, 1, 0.0)

    def diverge(context: str):
        record.diverged = True
        record.wall_time_seconds = time.monotonic() - started
        raise DivergedLoss(f"non-finite loss during {context}", record)

    if not np.isfinite(loss_first):
        diverge("initial validation")

    velocity = {name: np.zeros_like(arr) for name, arr in current.params.items()}
    best_model = current.clone()
    best_train = np.inf
    best_epoch = 1
    for epoch in range(1, cfg.epochs + 1):
        batch_losses = []
        for batch in schedule.train:
            loss, grads = batch_loss_and_gradients(current, batch.values, batch.masks)
            if not np.isfinite(loss):
                diverge(f"epoch {epoch} training")
            batch_losses.append(loss)
            for name, g in grads.items():
                velocity[name] = MOMENTUM * velocity[name] + g
                current.params[name] -= cfg.learning_rate * velocity[name]
        epoch_train = float(np.mean(batch_losses))
        epoch_valid = evaluate_schedule(current, schedule.valid)
        if not np.isfinite(epoch_train) or not np.isfinite(epoch_valid):
            diverge(f"epoch {epoch} evaluation")
        record.train_curve.append(epoch_train)
        record.valid_curve.append(epoch_valid)
        if epoch_train < best_train:
            best_train = epoch_train
            best_epoch = epoch
            best_model = current.clone()
        if progress is not None:
            progress(epoch / cfg.epochs)

    loss_final = evaluate_schedule(best_model, schedule.valid)
    record.loss_final = loss_final
    record.best_epoch = best_epoch
    record.improvement_percent = loss_improvement(loss_first, loss_final)
    record.wall_time_seconds = time.monotonic() - started
    return best_model, record


def select_window_lengths(
    ts: TimeSeries,
    n_extra: int,
    patch_len: int,
    base_window: int = 17,
    max_size: int | None = None,
) -> tuple[int, ...]:
    """The fixed base window plus up to ``n_extra`` dominant periods of the
    series (distinct from the base, long enough to hold 2 patches)."""
    lengths = [base_window]
    if n_extra > 0:
        min_size = max(2 * patch_len, 2)
        if max_size is None:
            max_size = ts.length // 2
        try:
            found = dominant_window_sizes(ts, n_extra + 2, min_size=min_size, max_size=max_size)
        except NoDominantPeriod:
            found = []
        lengths.extend([d for d in found if d != base_window][:n_extra])
    return tuple(lengths)
