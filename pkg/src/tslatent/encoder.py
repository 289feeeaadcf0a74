"""Toy-scale patch-based masked transformer encoder.

A window is instance-normalized, cut into disjoint fixed-length patches per
channel, linearly projected to d_model, optionally masked (masked patch
embeddings are replaced by a learned vector), position-encoded and run
through pre-norm transformer layers.  Two heads share the encoder output: a
linear reconstruction head mapped back to input scale, and a mean-pool over
patch embeddings that yields one fixed-size vector per window.

Everything is float64 numpy.  The backward pass is hand-derived and returns
exact gradients of the masked reconstruction loss for every parameter, which
keeps training deterministic and lets tests pin it against central finite
differences.
"""

from __future__ import annotations

import dataclasses
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import NORM_EPS, instance_normalize
from .errors import (
    CheckpointError,
    InvalidConfig,
    NoMaskedPatches,
    ShapeMismatch,
    ValidationError,
    WindowShorterThanPatch,
)

LN_EPS = 1e-5
_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715


@dataclass(frozen=True)
class EncoderConfig:
    patch_len: int = 8
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ffn_dim: int = 128
    max_patches: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.patch_len < 2:
            raise InvalidConfig(f"patch_len must be >= 2, got {self.patch_len}")
        if min(self.d_model, self.n_layers, self.n_heads, self.ffn_dim, self.max_patches) < 1:
            raise InvalidConfig("all dimensions must be positive")
        if self.d_model % self.n_heads != 0:
            raise InvalidConfig(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}"
            )

    def param_count(self) -> int:
        N, D, L, F, P = self.patch_len, self.d_model, self.n_layers, self.ffn_dim, self.max_patches
        per_layer = 2 * D + 4 * (D * D + D) + 2 * D + (D * F + F) + (F * D + D)
        return (N * D + D) + P * D + D + L * per_layer + 2 * D + (D * N + N)


PRESETS: dict[str, EncoderConfig] = {
    "tiny": EncoderConfig(patch_len=4, d_model=16, n_layers=1, n_heads=2, ffn_dim=32, max_patches=64),
    "small": EncoderConfig(patch_len=8, d_model=64, n_layers=2, n_heads=4, ffn_dim=128),
    "base": EncoderConfig(patch_len=8, d_model=96, n_layers=3, n_heads=4, ffn_dim=192),
    "large": EncoderConfig(patch_len=8, d_model=128, n_layers=4, n_heads=8, ffn_dim=256),
}


def preset_config(name: str, seed: int = 0) -> EncoderConfig:
    if name not in PRESETS:
        raise InvalidConfig(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return dataclasses.replace(PRESETS[name], seed=seed)


@dataclass
class EncoderModel:
    config: EncoderConfig
    params: dict[str, np.ndarray]

    def clone(self) -> "EncoderModel":
        return EncoderModel(self.config, {k: v.copy() for k, v in self.params.items()})


@dataclass(frozen=True)
class MaskSpec:
    """Which time-patches (shared across channels) are hidden from the encoder."""

    masked: np.ndarray  # bool, length P
    ratio: float

    def __post_init__(self):
        masked = np.asarray(self.masked, dtype=bool)
        count = int(masked.sum())
        if not 1 <= count <= masked.size - 1:
            raise ValidationError(
                f"mask must hide between 1 and P-1 patches, hides {count} of {masked.size}"
            )
        masked.setflags(write=False)
        object.__setattr__(self, "masked", masked)

    @property
    def n_masked(self) -> int:
        return int(self.masked.sum())


@dataclass(frozen=True)
class ForwardOutput:
    reconstruction: np.ndarray  # (C, P, N), input scale
    patch_embeddings: np.ndarray  # (C*P, D)
    window_embedding: np.ndarray  # (D,)


def mask_count(P: int, ratio: float) -> int:
    """Round-half-up patch count, clamped to [1, P-1] so the loss is defined."""
    return int(min(max(int(np.floor(ratio * P + 0.5)), 1), P - 1))


def sample_mask(P: int, ratio: float, rng: np.random.Generator) -> MaskSpec:
    """Uniform sample without replacement of mask_count(P, ratio) patches."""
    if P < 2:
        raise ValidationError(f"need at least 2 patches to mask, got {P}")
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"mask ratio must be in (0, 1), got {ratio}")
    idx = rng.choice(P, size=mask_count(P, ratio), replace=False)
    masked = np.zeros(P, dtype=bool)
    masked[idx] = True
    return MaskSpec(masked, ratio)


def patchify(window: np.ndarray, patch_len: int) -> np.ndarray:
    """Split a (w, C) window into (C, P, N) disjoint patches per channel;
    the trailing w mod N samples are discarded."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 1:
        window = window[:, None]
    w, C = window.shape
    if w < patch_len:
        raise WindowShorterThanPatch(f"window length {w} < patch length {patch_len}")
    P = w // patch_len
    trimmed = window[: P * patch_len]  # (P*N, C)
    return np.transpose(trimmed.reshape(P, patch_len, C), (2, 0, 1)).copy()


# ---------------------------------------------------------------------------
# initialization


def init_model(cfg: EncoderConfig) -> EncoderModel:
    """Deterministic init: Glorot-uniform projections, sinusoidal positional
    table, ones/zeros layer norms, zero biases."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0xE11C])))
    N, D, F = cfg.patch_len, cfg.d_model, cfg.ffn_dim

    def glorot(fan_in, fan_out):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-a, a, size=(fan_in, fan_out))

    params: dict[str, np.ndarray] = {}
    params["patch_proj.w"] = glorot(N, D)
    params["patch_proj.b"] = np.zeros(D)
    params["pos_table"] = _sinusoid_table(cfg.max_patches, D)
    params["mask_embed"] = rng.uniform(-0.02, 0.02, size=D)
    for i in range(cfg.n_layers):
        pre = f"layer{i}."
        params[pre + "ln1.g"] = np.ones(D)
        params[pre + "ln1.b"] = np.zeros(D)
        for name in ("wq", "wk", "wv", "wo"):
            params[pre + "attn." + name] = glorot(D, D)
        for name in ("bq", "bk", "bv", "bo"):
            params[pre + "attn." + name] = np.zeros(D)
        params[pre + "ln2.g"] = np.ones(D)
        params[pre + "ln2.b"] = np.zeros(D)
        params[pre + "ffn.w1"] = glorot(D, F)
        params[pre + "ffn.b1"] = np.zeros(F)
        params[pre + "ffn.w2"] = glorot(F, D)
        params[pre + "ffn.b2"] = np.zeros(D)
    params["ln_final.g"] = np.ones(D)
    params["ln_final.b"] = np.zeros(D)
    params["recon.w"] = glorot(D, N)
    params["recon.b"] = np.zeros(N)

    total = sum(p.size for p in params.values())
    assert total == cfg.param_count(), f"parameter count {total} != formula {cfg.param_count()}"
    return EncoderModel(cfg, params)


def _sinusoid_table(n_pos: int, d_model: int) -> np.ndarray:
    pos = np.arange(n_pos)[:, None]
    dim = np.arange(d_model)[None, :]
    angle = pos / np.power(10_000.0, (2 * (dim // 2)) / d_model)
    table = np.empty((n_pos, d_model))
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table


# ---------------------------------------------------------------------------
# layer primitives (forward returns what backward needs)


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return xhat * g + b, (xhat, inv, g)


def _layer_norm_bwd(dy, ctx):
    xhat, inv, g = ctx
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _gelu(x):
    inner = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(inner)
    return 0.5 * x * (1.0 + t), (x, t)


def _gelu_bwd(dy, ctx):
    x, t = ctx
    d_inner = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * d_inner)


def _split_heads(x, H):
    B, T, D = x.shape
    return x.reshape(B, T, H, D // H).transpose(0, 2, 1, 3)  # (B, H, T, dk)


def _merge_heads(x):
    B, H, T, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, H * dk)


# ---------------------------------------------------------------------------
# forward / backward


def _forward_batch(
    model: EncoderModel, windows: np.ndarray, masks, need_cache: bool, need_attn: bool = False
):
    """Run the encoder on a (B, w, C) stack of same-length windows.

    ``masks`` is a list of MaskSpec-or-None per window (or None for all).
    Returns (recon (B,C,P,N), Z (B,Tk,D), mean (B,C), denom (B,C), cache,
    attention maps).
    """
    cfg = model.config
    p = model.params
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 2:
        windows = windows[None]
    B, w, C = windows.shape
    N, D, H = cfg.patch_len, cfg.d_model, cfg.n_heads
    if w < N:
        raise WindowShorterThanPatch(f"window length {w} < patch length {N}")
    P = w // N
    Tk = C * P
    if Tk > cfg.max_patches:
        raise ShapeMismatch(
            f"{C} channels x {P} patches = {Tk} tokens exceeds max_patches={cfg.max_patches}"
        )
    if masks is None:
        masks = [None] * B
    if len(masks) != B:
        raise ShapeMismatch(f"{len(masks)} masks for {B} windows")
    token_mask = np.zeros((B, Tk), dtype=bool)
    for b, m in enumerate(masks):
        if m is None:
            continue
        if m.masked.size != P:
            raise ShapeMismatch(f"mask covers {m.masked.size} patches, window has {P}")
        token_mask[b] = np.tile(m.masked, C)

    mean = windows.mean(axis=1)  # (B, C)
    denom = np.maximum(windows.std(axis=1), NORM_EPS)  # (B, C)
    xn = (windows - mean[:, None, :]) / denom[:, None, :]

    # (B, w, C) -> (B, C, P, N) -> tokens (B, Tk, N); token t = c*P + p
    patches = np.transpose(xn[:, : P * N, :].reshape(B, P, N, C), (0, 3, 1, 2))
    tokens = patches.reshape(B, Tk, N)

    e0 = tokens @ p["patch_proj.w"] + p["patch_proj.b"]
    e1 = np.where(token_mask[:, :, None], p["mask_embed"], e0)
    h = e1 + p["pos_table"][:Tk]

    layer_caches = []
    for i in range(cfg.n_layers):
        pre = f"layer{i}."
        a1, ln1_ctx = _layer_norm(h, p[pre + "ln1.g"], p[pre + "ln1.b"])
        q = _split_heads(a1 @ p[pre + "attn.wq"] + p[pre + "attn.bq"], H)
        k = _split_heads(a1 @ p[pre + "attn.wk"] + p[pre + "attn.bk"], H)
        v = _split_heads(a1 @ p[pre + "attn.wv"] + p[pre + "attn.bv"], H)
        scale = 1.0 / np.sqrt(D // H)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        scores -= scores.max(axis=-1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(axis=-1, keepdims=True)  # (B, H, Tk, Tk)
        ctx_h = attn @ v
        ctx = _merge_heads(ctx_h)
        attn_out = ctx @ p[pre + "attn.wo"] + p[pre + "attn.bo"]
        h_mid = h + attn_out
        a2, ln2_ctx = _layer_norm(h_mid, p[pre + "ln2.g"], p[pre + "ln2.b"])
        u = a2 @ p[pre + "ffn.w1"] + p[pre + "ffn.b1"]
        gu, gelu_ctx = _gelu(u)
        f = gu @ p[pre + "ffn.w2"] + p[pre + "ffn.b2"]
        h_out = h_mid + f
        if need_cache:
            layer_caches.append(
                dict(a1=a1, ln1=ln1_ctx, q=q, k=k, v=v, attn=attn, ctx=ctx,
                     ln2=ln2_ctx, a2=a2, gelu=gelu_ctx, gu=gu, scale=scale)
            )
        elif need_attn:
            layer_caches.append(dict(attn=attn))
        h = h_out

    z, lnf_ctx = _layer_norm(h, p["ln_final.g"], p["ln_final.b"])
    recon_norm = z @ p["recon.w"] + p["recon.b"]  # (B, Tk, N)
    recon = recon_norm.reshape(B, C, P, N) * denom[:, None, None, :].transpose(0, 3, 1, 2) \
        + mean[:, None, None, :].transpose(0, 3, 1, 2)

    cache = None
    if need_cache:
        cache = dict(
            tokens=tokens, token_mask=token_mask, e0=e0, layers=layer_caches,
            lnf=lnf_ctx, z=z, denom=denom, shape=(B, w, C, P, N, Tk),
        )
    return recon, z, mean, denom, cache, [lc["attn"] for lc in layer_caches]


def forward(
    model: EncoderModel,
    window: np.ndarray,
    mask: MaskSpec | None = None,
    return_attention: bool = False,
):
    """Encode one (w, C) window.  With ``mask`` given, the masked patches'
    embeddings are replaced before encoding (the reconstruction objective);
    with ``mask=None`` every patch is visible (the embedding path)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 1:
        window = window[:, None]
    recon, z, _mean, _denom, _cache, attn = _forward_batch(
        model, window[None], [mask], need_cache=False, need_attn=return_attention
    )
    out = ForwardOutput(
        reconstruction=recon[0],
        patch_embeddings=z[0],
        window_embedding=z[0].mean(axis=0),
    )
    if return_attention:
        return out, [a[0] for a in attn]
    return out


def embed_windows(model: EncoderModel, windows: np.ndarray) -> np.ndarray:
    """Mean-pooled embeddings for a (B, w, C) stack, mask-free."""
    _recon, z, _m, _d, _c, _a = _forward_batch(model, windows, None, need_cache=False)
    return z.mean(axis=1)


def masked_mse(output: ForwardOutput, target_patches: np.ndarray, mask: MaskSpec) -> float:
    """Mean squared reconstruction error over masked patches only; unmasked
    patches are excluded from both numerator and denominator."""
    if mask is None or mask.n_masked == 0:
        raise NoMaskedPatches("masked_mse needs at least one masked patch")
    target = np.asarray(target_patches, dtype=np.float64)
    if target.shape != output.reconstruction.shape:
        raise ShapeMismatch(
            f"target shape {target.shape} != reconstruction {output.reconstruction.shape}"
        )
    if mask.masked.size != target.shape[1]:
        raise ShapeMismatch(f"mask covers {mask.masked.size} patches, target has {target.shape[1]}")
    err = output.reconstruction[:, mask.masked, :] - target[:, mask.masked, :]
    return float(np.mean(err**2))


def full_mse(output: ForwardOutput, target_patches: np.ndarray) -> float:
    """Mean squared error over every patch position, masked or not."""
    target = np.asarray(target_patches, dtype=np.float64)
    if target.shape != output.reconstruction.shape:
        raise ShapeMismatch(
            f"target shape {target.shape} != reconstruction {output.reconstruction.shape}"
        )
    return float(np.mean((output.reconstruction - target) ** 2))


def batch_masked_loss(model: EncoderModel, windows: np.ndarray, masks: list[MaskSpec]) -> float:
    """Masked reconstruction loss of a same-length window batch (no grads):
    the unweighted mean over windows of each window's masked_mse."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 2:
        windows = windows[None]
    if any(m is None for m in masks):
        raise NoMaskedPatches("evaluation requires a mask per window")
    recon, _z, _m, _d, _c, _a = _forward_batch(model, windows, masks, need_cache=False)
    B, w, C = windows.shape
    N = model.config.patch_len
    P = w // N
    target = np.transpose(windows[:, : P * N, :].reshape(B, P, N, C), (0, 3, 1, 2))
    losses = [
        float(np.mean((recon[b][:, m.masked, :] - target[b][:, m.masked, :]) ** 2))
        for b, m in enumerate(masks)
    ]
    return float(np.mean(losses))


def batch_loss_and_gradients(
    model: EncoderModel, windows: np.ndarray, masks: list[MaskSpec]
) -> tuple[float, dict[str, np.ndarray]]:
    """Masked reconstruction loss averaged over a same-length window batch,
    plus its exact gradient for every parameter.

    The loss per window is the mean over (masked patches x patch positions x
    channels) of squared error in original input units; the batch loss is
    the unweighted mean over windows.
    """
    cfg = model.config
    p = model.params
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 2:
        windows = windows[None]
    if any(m is None for m in masks):
        raise NoMaskedPatches("training requires a mask per window")
    recon, z, mean, denom, cache, _attn = _forward_batch(model, windows, masks, need_cache=True)
    B, w, C, P, N, Tk = cache["shape"]

    target = np.transpose(windows[:, : P * N, :].reshape(B, P, N, C), (0, 3, 1, 2))
    patch_mask = cache["token_mask"].reshape(B, C, P)  # same mask tiled per channel
    err = (recon - target) * patch_mask[:, :, :, None]
    n_masked = np.array([m.n_masked for m in masks], dtype=np.float64)
    per_window = (err**2).sum(axis=(1, 2, 3)) / (n_masked * C * N)
    loss = float(per_window.mean())

    # d loss / d recon, folding in the per-window normalization and batch mean
    drecon = 2.0 * err / (n_masked * C * N)[:, None, None, None] / B
    drecon_norm = (drecon * denom[:, None, None, :].transpose(0, 3, 1, 2)).reshape(B, Tk, N)

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    zf = cache["z"].reshape(B * Tk, -1)
    grads["recon.w"] += zf.T @ drecon_norm.reshape(B * Tk, N)
    grads["recon.b"] += drecon_norm.sum(axis=(0, 1))
    dz = drecon_norm @ p["recon.w"].T

    dh, dg, db = _layer_norm_bwd(dz, cache["lnf"])
    grads["ln_final.g"] += dg
    grads["ln_final.b"] += db

    H = cfg.n_heads
    for i in reversed(range(cfg.n_layers)):
        pre = f"layer{i}."
        lc = cache["layers"][i]
        # FFN block: h_out = h_mid + gelu(a2 w1 + b1) w2 + b2
        df = dh
        grads[pre + "ffn.w2"] += lc["gu"].reshape(B * Tk, -1).T @ df.reshape(B * Tk, -1)
        grads[pre + "ffn.b2"] += df.sum(axis=(0, 1))
        dgu = df @ p[pre + "ffn.w2"].T
        du = _gelu_bwd(dgu, lc["gelu"])
        grads[pre + "ffn.w1"] += lc["a2"].reshape(B * Tk, -1).T @ du.reshape(B * Tk, -1)
        grads[pre + "ffn.b1"] += du.sum(axis=(0, 1))
        da2 = du @ p[pre + "ffn.w1"].T
        dh_mid, dg, db = _layer_norm_bwd(da2, lc["ln2"])
        dh_mid = dh_mid + dh  # residual
        grads[pre + "ln2.g"] += dg
        grads[pre + "ln2.b"] += db

        # attention block: h_mid = h_in + (merge(attn @ v) wo + bo)
        dattn_out = dh_mid
        grads[pre + "attn.wo"] += lc["ctx"].reshape(B * Tk, -1).T @ dattn_out.reshape(B * Tk, -1)
        grads[pre + "attn.bo"] += dattn_out.sum(axis=(0, 1))
        dctx_h = _split_heads(dattn_out @ p[pre + "attn.wo"].T, H)
        dattn = dctx_h @ lc["v"].transpose(0, 1, 3, 2)
        dv = lc["attn"].transpose(0, 1, 3, 2) @ dctx_h
        a = lc["attn"]
        dscores = a * (dattn - (dattn * a).sum(axis=-1, keepdims=True))
        dq = (dscores @ lc["k"]) * lc["scale"]
        dk = (dscores.transpose(0, 1, 3, 2) @ lc["q"]) * lc["scale"]
        dqf, dkf, dvf = (_merge_heads(x).reshape(B * Tk, -1) for x in (dq, dk, dv))
        a1f = lc["a1"].reshape(B * Tk, -1)
        grads[pre + "attn.wq"] += a1f.T @ dqf
        grads[pre + "attn.wk"] += a1f.T @ dkf
        grads[pre + "attn.wv"] += a1f.T @ dvf
        grads[pre + "attn.bq"] += dqf.sum(axis=0)
        grads[pre + "attn.bk"] += dkf.sum(axis=0)
        grads[pre + "attn.bv"] += dvf.sum(axis=0)
        da1 = (
            dqf @ p[pre + "attn.wq"].T + dkf @ p[pre + "attn.wk"].T + dvf @ p[pre + "attn.wv"].T
        ).reshape(B, Tk, -1)
        dh_in, dg, db = _layer_norm_bwd(da1, lc["ln1"])
        grads[pre + "ln1.g"] += dg
        grads[pre + "ln1.b"] += db
        dh = dh_in + dh_mid  # residual into the block input

    grads["pos_table"][:Tk] += dh.sum(axis=0)
    de1 = dh
    token_mask = cache["token_mask"]
    grads["mask_embed"] += de1[token_mask].sum(axis=0) if token_mask.any() else 0.0
    de0 = de1 * (~token_mask)[:, :, None]
    grads["patch_proj.w"] += cache["tokens"].reshape(B * Tk, N).T @ de0.reshape(B * Tk, -1)
    grads["patch_proj.b"] += de0.sum(axis=(0, 1))
    return loss, grads


def gradients(
    model: EncoderModel, window: np.ndarray, mask: MaskSpec
) -> tuple[float, dict[str, np.ndarray]]:
    """Masked loss and exact parameter gradients for a single window."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 1:
        window = window[:, None]
    return batch_loss_and_gradients(model, window[None], [mask])


# ---------------------------------------------------------------------------
# checkpoint serialization

CHECKPOINT_MAGIC = b"TSLENC01"
CHECKPOINT_VERSION = 1


def save_checkpoint_bytes(model: EncoderModel) -> bytes:
    """Header (magic, version, config JSON) then named float64 LE tensors
    with explicit shapes, in sorted name order."""
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    cfg_json = json.dumps(dataclasses.asdict(model.config), sort_keys=True).encode()
    buf.write(struct.pack("<I", len(cfg_json)))
    buf.write(cfg_json)
    buf.write(struct.pack("<I", len(model.params)))
    for name in sorted(model.params):
        arr = np.ascontiguousarray(model.params[name], dtype="<f8")
        encoded = name.encode()
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", arr.ndim))
        for dim in arr.shape:
            buf.write(struct.pack("<Q", dim))
        buf.write(arr.tobytes())
    return buf.getvalue()


def load_checkpoint_bytes(data: bytes) -> EncoderModel:
    buf = io.BytesIO(data)

    def take(n):
        chunk = buf.read(n)
        if len(chunk) != n:
            raise CheckpointError("truncated checkpoint")
        return chunk

    if take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError("bad checkpoint magic")
    (version,) = struct.unpack("<I", take(4))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", take(4))
    try:
        cfg = EncoderConfig(**json.loads(take(cfg_len)))
    except (json.JSONDecodeError, TypeError) as exc:
        raise CheckpointError(f"bad config block: {exc}") from exc
    (count,) = struct.unpack("<I", take(4))
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode()
        (ndim,) = struct.unpack("<B", take(1))
        shape = tuple(struct.unpack("<Q", take(8))[0] for _ in range(ndim))
        n_items = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(take(n_items * 8), dtype="<f8").reshape(shape).astype(np.float64)
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"non-finite values in tensor {name!r}")
        params[name] = arr
    if buf.read(1):
        raise CheckpointError("trailing bytes after last tensor")
    expected = set(init_model(cfg).params)
    if set(params) != expected:
        raise CheckpointError("tensor names do not match the config's architecture")
    return EncoderModel(cfg, params)


def save_checkpoint(model: EncoderModel, path: str | Path) -> None:
    Path(path).write_bytes(save_checkpoint_bytes(model))


def load_checkpoint(path: str | Path) -> EncoderModel:
    return load_checkpoint_bytes(Path(path).read_bytes())
