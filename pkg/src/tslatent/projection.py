"""2D projection of embedding matrices: exact PCA, exact t-SNE, and the
composed reduce-then-embed pipeline.

t-SNE is the exact quadratic algorithm: per-point Gaussian bandwidths found
by bisection until the entropy-derived perplexity hits the target, a
symmetrized affinity matrix, Student-t low-dimensional kernel, and momentum
gradient descent with early exaggeration.  No tree approximations; at desk
scale (a few thousand windows) the O(n^2) inner loop is fine and testable.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import WindowSlice
from .errors import DegenerateInput, PerplexityInfeasible, ValidationError

PROJECTION_METHODS = ("pca", "tsne", "pca_then_tsne")


@dataclass(frozen=True)
class EmbeddingMatrix:
    rows: np.ndarray  # (n, D)
    provenance: tuple[WindowSlice, ...]
    model_ref: str = ""

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise DegenerateInput(f"need a 2D matrix with n >= 2 rows, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValidationError("embedding rows must be finite")
        if len(self.provenance) != rows.shape[0]:
            raise ValidationError(
                f"{len(self.provenance)} provenance slices for {rows.shape[0]} rows"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "provenance", tuple(self.provenance))


@dataclass(frozen=True)
class ProjectionParams:
    perplexity: float = 30.0
    iterations: int = 1000
    pca_dims: int = 50
    seed: int = 0
    learning_rate: float = 200.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Projection2D:
    coords: np.ndarray  # (n, 2)
    method: str
    params: ProjectionParams
    provenance: tuple[WindowSlice, ...] = ()
    kl_history: tuple[float, ...] = ()


def pca(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-k principal directions of the sample covariance via SVD.

    Returns (coords n x k, components k x D, explained_variance k) with
    orthonormal components whose largest-magnitude entry is positive and
    eigenvalues in non-increasing order.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateInput(f"PCA needs an (n >= 2) x D matrix, got shape {X.shape}")
    n, d = X.shape
    if not 1 <= k <= min(n - 1, d):
        raise ValidationError(f"k must be in [1, min(n-1, D)] = [1, {min(n - 1, d)}], got {k}")
    centered = X - X.mean(axis=0)
    _u, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k]
    explained = (s[:k] ** 2) / (n - 1)
    # fix the sign so tests are stable across linalg backends
    flips = np.sign(components[np.arange(k), np.argmax(np.abs(components), axis=1)])
    components = components * flips[:, None]
    coords = centered @ components.T
    return coords, components, explained


def _entropy_and_probs(neg_dist: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Shannon entropy (bits) and probabilities of exp(neg_dist * beta)."""
    logits = neg_dist * beta
    logits -= logits.max()
    p = np.exp(logits)
    total = p.sum()
    p /= total
    # H = -sum p log2 p, computed stably from the shifted logits
    h = (np.log(total) - (p * logits).sum()) / np.log(2.0)
    return float(h), p


def conditional_affinities(
    X: np.ndarray, perplexity: float, tol: float = 1e-3, max_steps: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point Gaussian conditionals P(j|i) calibrated by bisection so each
    row's perplexity (2^entropy) is within ``tol`` of the target.

    Returns (P n x n with zero diagonal and rows summing to 1, achieved
    perplexities).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 10:
        raise DegenerateInput(f"t-SNE needs n >= 10 points, got {n}")
    if not 3.0 <= perplexity <= (n - 1) / 3.0:
        raise PerplexityInfeasible(
            f"perplexity must be in [3, (n-1)/3] = [3, {(n - 1) / 3:.1f}], got {perplexity}"
        )
    sq = (X**2).sum(axis=1)
    dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    P = np.zeros((n, n))
    achieved = np.zeros(n)
    others = np.arange(n)
    for i in range(n):
        idx = others[others != i]
        neg = -dist[i, idx]
        beta, lo, hi = 1.0, 0.0, np.inf
        h, p = _entropy_and_probs(neg, beta)
        for _ in range(max_steps):
            if abs(2.0**h - perplexity) <= tol:
                break
            if 2.0**h > perplexity:  # too spread out: sharpen
                lo = beta
                beta = beta * 2.0 if not np.isfinite(hi) else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
            h, p = _entropy_and_probs(neg, beta)
        P[i, idx] = p
        achieved[i] = 2.0**h
    return P, achieved


def joint_affinities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized affinities summing to 1 over all pairs."""
    P, _ = conditional_affinities(X, perplexity)
    joint = (P + P.T) / (2.0 * P.shape[0])
    return joint


@dataclass(frozen=True)
class TsneResult:
    coords: np.ndarray
    kl_history: tuple[float, ...]


def tsne(
    X: np.ndarray,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    learning_rate: float = 200.0,
) -> TsneResult:
    """Exact t-SNE to 2D, deterministic per seed.

    Early exaggeration multiplies the affinities by 12 for the first quarter
    of the iterations (momentum 0.5 during that phase, 0.8 after).  The KL
    divergence against the un-exaggerated affinities is recorded every
    iteration.
    """
    X = np.asarray(X, dtype=np.float64)
    if iterations < 1:
        raise ValidationError("iterations must be >= 1")
    n = X.shape[0]
    P = joint_affinities(X, perplexity)
    P = np.maximum(P, 1e-12)
    exaggeration_end = max(1, iterations // 4)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x75EE])))
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_history = []
    for it in range(iterations):
        sq = (Y**2).sum(axis=1)
        num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        kl_history.append(float((P * np.log(P / Q)).sum()))

        p_eff = P * 12.0 if it < exaggeration_end else P
        W = (p_eff - num / num.sum()) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)

        momentum = 0.5 if it < exaggeration_end else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - learning_rate * gains * grad
        Y = Y + velocity
        Y -= Y.mean(axis=0)

    sq = (Y**2).sum(axis=1)
    num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-12)
    kl_history.append(float((P * np.log(P / Q)).sum()))
    return TsneResult(Y, tuple(kl_history))


def project_pipeline(
    E: EmbeddingMatrix, method: str, params: ProjectionParams | None = None
) -> Projection2D:
    """Project an embedding matrix to 2D, carrying provenance through.

    ``pca`` takes the top-2 directions directly; ``tsne`` runs on the raw
    rows; ``pca_then_tsne`` reduces to min(pca_dims, D, n-1) dimensions
    first.
    """
    params = params or ProjectionParams()
    if method not in PROJECTION_METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {PROJECTION_METHODS}")
    X = E.rows
    kl: tuple[float, ...] = ()
    if method == "pca":
        coords, _components, _var = pca(X, 2)
    else:
        if method == "pca_then_tsne":
            k = min(params.pca_dims, X.shape[1], X.shape[0] - 1)
            if k < X.shape[1]:
                X = pca(X, k)[0]
        result = tsne(X, params.perplexity, params.iterations, params.seed, params.learning_rate)
        coords, kl = result.coords, result.kl_history
    return Projection2D(coords, method, params, provenance=E.provenance, kl_history=kl)
