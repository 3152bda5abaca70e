"""State-entropy estimators over finite point sets.

Three estimators are provided, each matching its usual textbook form:

* ``kde_entropy``: resubstitution estimate from a Gaussian kernel density,
  natural log. The kernel is ``exp(-||a - b||^2 / (2 sigma))`` with no
  density-normalizing constant, so absolute values are offset from true
  differential entropy by a constant; only relative comparisons matter here.
* ``knn_entropy``: the classic Kozachenko-Leonenko estimator from kth
  nearest-neighbor distances, natural log, with the ``log k - psi(k)`` bias
  correction.
* ``renyi_matrix_entropy``: matrix-based Renyi alpha-entropy from the
  eigenvalue spectrum of the trace-normalized Gram matrix, log base 2.

``kernel_sum_gap`` quantifies how well a kth-neighbor truncation of the
kernel sums approximates the full sums, together with the sufficient
distance threshold under which the truncation error is provably below a
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (DegenerateDistance, EmptyInput, InvalidArgument,
                     NumericalFailure)

__all__ = [
    "KernelConfig", "GramMatrix", "EntropyValue", "LogBase", "EstimatorKind",
    "gram_matrix", "kde_entropy", "knn_entropy", "renyi_matrix_entropy",
    "symmetric_eigenvalues", "kernel_sum_gap", "subsample_states",
]


class LogBase(Enum):
    NATURAL = "natural"
    BASE2 = "base2"


class EstimatorKind(Enum):
    KDE = "kde"
    KNN = "knn"
    RENYI = "renyi"


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel width: kappa(a, b) = exp(-||a - b||^2 / (2 sigma))."""

    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray
    trace_normalized: bool = False

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def normalized(self) -> "GramMatrix":
        """Divide by the trace so eigenvalues form a probability vector."""
        if self.trace_normalized:
            return self
        return GramMatrix(self.entries / np.trace(self.entries), True)


@dataclass(frozen=True)
class EntropyValue:
    value: float
    log_base: LogBase
    estimator: EstimatorKind

    def in_base(self, base: LogBase) -> "EntropyValue":
        if base == self.log_base:
            return self
        if base == LogBase.BASE2:
            return EntropyValue(self.value / math.log(2.0), base, self.estimator)
        return EntropyValue(self.value * math.log(2.0), base, self.estimator)

    def __float__(self) -> float:
        return self.value


def _as_points(states) -> np.ndarray:
    pts = np.asarray(states, dtype=np.float64)
    if pts.size == 0:
        raise EmptyInput("need at least one state")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise InvalidArgument(f"states must be a (n, d) array, got shape {pts.shape}")
    return pts


def _sq_dists(pts: np.ndarray) -> np.ndarray:
    sq = np.sum(pts * pts, axis=1)
    d2 = sq[:, None] - 2.0 * (pts @ pts.T) + sq[None, :]
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def gram_matrix(states, cfg: KernelConfig) -> GramMatrix:
    """Pairwise Gaussian kernel matrix; symmetric with unit diagonal."""
    pts = _as_points(states)
    d2 = _sq_dists(pts)
    k = np.exp(-d2 / (2.0 * cfg.sigma))
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return GramMatrix(k, False)


def kde_entropy(states, cfg: KernelConfig) -> EntropyValue:
    """Kernel-density entropy: -(1/N) sum_i log[(1/N) sum_j kappa(s_i, s_j)].

    The inner sum runs over all N points including j = i, so N identical
    points give exactly zero.
    """
    k = gram_matrix(states, cfg).entries
    n = k.shape[0]
    inner = k.sum(axis=1) / n
    value = float(-np.mean(np.log(inner)))
    return EntropyValue(value, LogBase.NATURAL, EstimatorKind.KDE)


def _digamma_int(k: int) -> float:
    # psi(k) for integer k >= 1 is the (k-1)-th harmonic number minus gamma.
    h = sum(1.0 / m for m in range(1, k))
    return h - np.euler_gamma


def kth_neighbor_distances(states, k: int) -> np.ndarray:
    """Distance from each point to its kth nearest other point."""
    pts = _as_points(states)
    n = pts.shape[0]
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if n <= k:
        raise InvalidArgument(f"need more than k={k} states, got {n}")
    out = np.empty(n)
    chunk = max(1, min(n, 2 ** 22 // max(n, 1)))
    sq = np.sum(pts * pts, axis=1)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        d2 = sq[lo:hi, None] - 2.0 * (pts[lo:hi] @ pts.T) + sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(lo, hi) - lo, np.arange(lo, hi)] = np.inf
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        out[lo:hi] = np.sqrt(kth)
    return out


def knn_entropy(states, k: int) -> EntropyValue:
    """Kozachenko-Leonenko entropy from kth nearest-neighbor distances.

    H = (1/N) sum_i log[N * rho_i^d * pi^(d/2) / (k * Gamma(d/2 + 1))] + C_k
    with rho_i the kth-NN distance of point i and C_k = log k - psi(k).
    Evaluated in log space so large d cannot overflow the Gamma term.
    """
    pts = _as_points(states)
    n, d = pts.shape
    rho = kth_neighbor_distances(pts, k)
    if np.any(rho <= 0.0):
        raise DegenerateDistance(
            "kth neighbor distance is zero for at least one state "
            "(duplicate points); the kNN estimator is undefined")
    log_unit_ball = (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0 + 1.0)
    c_k = math.log(k) - _digamma_int(k)
    logs = math.log(n) + d * np.log(rho) + log_unit_ball - math.log(k)
    value = float(np.mean(logs) + c_k)
    return EntropyValue(value, LogBase.NATURAL, EstimatorKind.KNN)


def symmetric_eigenvalues(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, sorted descending.

    Backed by LAPACK's symmetric eigensolver. Input symmetry is checked to
    1e-10 (relative to the largest entry); solver non-convergence surfaces
    as ``NumericalFailure``.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgument(f"need a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-10 * scale:
        raise InvalidArgument("matrix is not symmetric within 1e-10")
    try:
        vals = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}") from exc
    return vals[::-1].copy()


def renyi_matrix_entropy(states, alpha: float, cfg: KernelConfig) -> EntropyValue:
    """Matrix-based Renyi entropy, log base 2.

    H_alpha = 1/(1 - alpha) * log2 sum_i lambda_i(A)^alpha with A the
    trace-normalized Gram matrix. Integer alpha >= 2 goes through repeated
    matrix products (trace of A^alpha), which needs no eigendecomposition;
    other alphas use the eigenvalue path. Eigenvalues in [-1e-10, 0] are
    clamped to zero; anything more negative is an error.
    """
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise InvalidArgument(f"alpha must be positive, got {alpha}")
    if alpha == 1.0:
        raise InvalidArgument(
            "alpha = 1 is the Shannon limit; use a nearby value such as 1.001")
    a = gram_matrix(states, cfg).normalized().entries
    n = a.shape[0]
    if float(alpha).is_integer() and alpha >= 2:
        power = a
        for _ in range(int(alpha) - 1):
            power = power @ a
        total = float(np.trace(power))
    else:
        vals = symmetric_eigenvalues(a)
        if float(vals.min()) < -1e-10:
            raise NumericalFailure(
                f"Gram matrix eigenvalue {vals.min():.3e} below -1e-10")
        vals = np.clip(vals, 0.0, None)
        total = float(np.sum(vals ** alpha))
    # total is in (0, N]; guard log(0) from fully clamped pathological input
    if total <= 0.0:
        raise NumericalFailure("eigenvalue power sum is not positive")
    value = math.log2(total) / (1.0 - alpha)
    # the exact value lies in [0, log2 N]; rounding in the power sum can
    # leak a few ulps outside, especially for alpha near 1
    value = min(max(value, 0.0), math.log2(n))
    return EntropyValue(float(value), LogBase.BASE2, EstimatorKind.RENYI)


def kernel_sum_gap(states, k: int, cfg: KernelConfig,
                   epsilon: float = 1e-6) -> tuple[float, bool]:
    """Worst-case error of truncating kernel sums to the k nearest neighbors.

    Returns ``(gap, threshold_ok)``. The gap is the max over points of the
    kernel mass carried by non-neighbors (self terms excluded from both
    sums). ``threshold_ok`` is True when every point's kth-NN distance is at
    least sqrt(2 sigma ln((N - k) / epsilon)), which is sufficient for
    ``gap <= epsilon``.
    """
    pts = _as_points(states)
    n = pts.shape[0]
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if n <= k:
        raise InvalidArgument(f"need more than k={k} states, got {n}")
    if not (epsilon > 0.0):
        raise InvalidArgument(f"epsilon must be positive, got {epsilon}")
    d2 = _sq_dists(pts)
    np.fill_diagonal(d2, np.inf)
    kernels = np.exp(-d2 / (2.0 * cfg.sigma))   # self terms -> exp(-inf) = 0
    order = np.argsort(d2, axis=1, kind="stable")
    rows = np.arange(n)[:, None]
    neighbor_mass = kernels[rows, order[:, :k]].sum(axis=1)
    gap = float(np.max(kernels.sum(axis=1) - neighbor_mass))
    gap = max(gap, 0.0)
    kth = np.sqrt(d2[rows[:, 0], order[:, k - 1]])
    thr_sq = 2.0 * cfg.sigma * math.log((n - k) / epsilon)
    if thr_sq <= 0.0:
        threshold_ok = True
    else:
        threshold_ok = bool(np.all(kth >= math.sqrt(thr_sq)))
    return gap, threshold_ok


def subsample_states(states: np.ndarray, cap: int) -> np.ndarray:
    """Deterministic evenly spaced subsample of at most ``cap`` rows."""
    pts = np.asarray(states, dtype=np.float64)
    n = pts.shape[0]
    if cap < 1:
        raise InvalidArgument(f"cap must be >= 1, got {cap}")
    if n <= cap:
        return pts
    idx = (np.arange(cap) * n) // cap
    return pts[idx]
