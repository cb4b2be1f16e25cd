"""FastICA: centering/whitening, negentropy contrasts, and the fixed-point
iterations in deflation (one component at a time, Gram-Schmidt) and
symmetric (all components, inverse-sqrt orthogonalization) form.

Conventions: data matrices are (channels x samples); expectations are
sample means over all columns.  Separation results are meaningful only up
to sign, scale, and permutation of the components, so quality checks
should always go through ``amari_index`` or absolute correlations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError
from .prng import KeyedPrng


@dataclass
class WhiteningModel:
    mean: np.ndarray         # (m,)
    whitener: np.ndarray     # (n, m); z = whitener @ (x - mean)
    dewhitener: np.ndarray   # (m, n); x ~ mean + dewhitener @ z
    eigenvalues: np.ndarray  # (n,) covariance eigenvalues kept, descending


def center_whiten(X: np.ndarray, n_components: int | None = None) -> tuple[np.ndarray, WhiteningModel]:
    """Zero-mean, identity-covariance projection onto the top eigenvectors.

    Covariance is the biased sample estimate (divide by T).  Rank
    deficiency among the requested components raises; callers wanting an
    adaptive dimension should probe eigenvalues first.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be (channels x samples)")
    m, T = X.shape
    if n_components is None:
        n_components = m
    if not 1 <= n_components <= m:
        raise ValueError("n_components out of range")
    if T <= n_components:
        raise ValueError("need more samples than components")
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    cov = (Xc @ Xc.T) / T
    lam, vec = np.linalg.eigh(cov)
    order = np.argsort(lam)[::-1][:n_components]
    lam = lam[order]
    vec = vec[:, order]
    if np.any(lam <= 1e-12):
        raise DegenerateDataError(
            "covariance rank below %d requested components" % n_components
        )
    # canonical eigenvector signs: largest-magnitude entry positive
    for j in range(vec.shape[1]):
        i = int(np.argmax(np.abs(vec[:, j])))
        if vec[i, j] < 0:
            vec[:, j] = -vec[:, j]
    scale = np.sqrt(lam)
    whitener = vec.T / scale[:, None]
    dewhitener = vec * scale[None, :]
    Z = whitener @ Xc
    return Z, WhiteningModel(mean=mean, whitener=whitener, dewhitener=dewhitener, eigenvalues=lam)


def covariance_rank(X: np.ndarray, floor: float = 1e-12) -> int:
    """Number of covariance eigenvalues above the floor."""
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=1, keepdims=True)
    lam = np.linalg.eigvalsh((Xc @ Xc.T) / X.shape[1])
    return int(np.sum(lam > floor))


def _standardize(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    sd = y.std()
    if sd == 0.0:
        raise DegenerateDataError("constant sample has no distribution shape")
    return (y - y.mean()) / sd


def negentropy_kurtosis(y: np.ndarray) -> float:
    """Cumulant plug-in: J ~ k3^2/12 + k4^2/48 on the standardized sample."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < 4:
        raise ValueError("need at least 4 samples for 4th-order cumulants")
    z = _standardize(y)
    k3 = float(np.mean(z ** 3))
    k4 = float(np.mean(z ** 4) - 3.0)
    return k3 * k3 / 12.0 + k4 * k4 / 48.0


# contrast id -> (G, G', G'', E{G(gaussian)})
CONTRASTS = {
    "quartic": (
        lambda y: y ** 4 / 4.0,
        lambda y: y ** 3,
        lambda y: 3.0 * y ** 2,
        0.75,
    ),
    "gauss": (
        lambda y: -np.exp(-(y ** 2) / 2.0),
        lambda y: y * np.exp(-(y ** 2) / 2.0),
        lambda y: (1.0 - y ** 2) * np.exp(-(y ** 2) / 2.0),
        -1.0 / np.sqrt(2.0),
    ),
}


def negentropy_contrast(y: np.ndarray, G: str = "quartic") -> float:
    """One-function approximation J ~ (E{G(y)} - E{G(v)})^2, v standard normal."""
    if G not in CONTRASTS:
        raise ValueError("unknown contrast %r (have %s)" % (G, sorted(CONTRASTS)))
    g0, _, _, gauss_mean = CONTRASTS[G]
    z = _standardize(y)
    diff = float(np.mean(g0(z))) - gauss_mean
    return diff * diff


@dataclass
class UnmixingMatrix:
    """Rows unmix whitened data: sources ~ rows @ Z."""

    rows: np.ndarray        # (n_components, dim)
    converged: np.ndarray   # bool per row
    iterations: np.ndarray  # iteration count per row (symmetric: same for all)

    def transform(self, Z: np.ndarray) -> np.ndarray:
        return self.rows @ Z


def _fixed_point_step(Z: np.ndarray, w: np.ndarray, G: str) -> np.ndarray:
    _, g1, g2, _ = CONTRASTS[G]
    s = w @ Z
    return (Z @ g1(s)) / Z.shape[1] - float(np.mean(g2(s))) * w


def fastica_deflation(Z: np.ndarray, n_components: int, G: str = "quartic",
                      tol: float = 1e-6, max_iter: int = 500, seed: int = 0) -> UnmixingMatrix:
    """Extract components one by one, Gram-Schmidt deflating against earlier rows."""
    Z = np.asarray(Z, dtype=np.float64)
    dim = Z.shape[0]
    if n_components > dim:
        raise ValueError("n_components %d exceeds data dim %d" % (n_components, dim))
    if G not in CONTRASTS:
        raise ValueError("unknown contrast %r" % G)
    rng = KeyedPrng(seed)
    rows = np.zeros((n_components, dim))
    converged = np.zeros(n_components, dtype=bool)
    iterations = np.zeros(n_components, dtype=np.int64)
    for i in range(n_components):
        w = rng.normal(dim)
        if i:
            w -= rows[:i].T @ (rows[:i] @ w)
        w /= np.linalg.norm(w)
        for it in range(1, max_iter + 1):
            w_new = _fixed_point_step(Z, w, G)
            if i:
                w_new -= rows[:i].T @ (rows[:i] @ w_new)
            norm = np.linalg.norm(w_new)
            if norm < 1e-12:
                w_new = rng.normal(dim)
                if i:
                    w_new -= rows[:i].T @ (rows[:i] @ w_new)
                norm = np.linalg.norm(w_new)
            w_new /= norm
            done = abs(float(w_new @ w)) > 1.0 - tol
            w = w_new
            if done:
                converged[i] = True
                break
        iterations[i] = it
        rows[i] = w
    return UnmixingMatrix(rows=rows, converged=converged, iterations=iterations)


def _sym_inv_sqrt(M: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    lam, vec = np.linalg.eigh(M)
    lam = np.maximum(lam, floor)
    return (vec / np.sqrt(lam)[None, :]) @ vec.T


def symmetric_orthogonalize(W: np.ndarray) -> np.ndarray:
    """W <- (W W^T)^(-1/2) W; rows become orthonormal."""
    return _sym_inv_sqrt(W @ W.T) @ W


def fastica_symmetric(Z: np.ndarray, n_components: int, G: str = "quartic",
                      tol: float = 1e-6, max_iter: int = 500, seed: int = 0) -> UnmixingMatrix:
    """Update all rows in parallel each sweep, re-orthonormalizing symmetrically."""
    Z = np.asarray(Z, dtype=np.float64)
    dim = Z.shape[0]
    if n_components > dim:
        raise ValueError("n_components %d exceeds data dim %d" % (n_components, dim))
    if G not in CONTRASTS:
        raise ValueError("unknown contrast %r" % G)
    rng = KeyedPrng(seed)
    W = rng.normal(n_components * dim).reshape(n_components, dim)
    W = symmetric_orthogonalize(W)
    _, g1, g2, _ = CONTRASTS[G]
    T = Z.shape[1]
    converged = False
    for it in range(1, max_iter + 1):
        S = W @ Z
        W_new = (g1(S) @ Z.T) / T - np.mean(g2(S), axis=1)[:, None] * W
        W_new = symmetric_orthogonalize(W_new)
        gain = np.abs(np.diag(W_new @ W.T))
        W = W_new
        if gain.min() > 1.0 - tol:
            converged = True
            break
    return UnmixingMatrix(
        rows=W,
        converged=np.full(n_components, converged),
        iterations=np.full(n_components, it, dtype=np.int64),
    )


def amari_index(W: np.ndarray, A: np.ndarray) -> float:
    """Permutation/sign/scale-invariant separation error in [0, 1].

    Zero iff W @ A is a scaled permutation, i.e. perfect separation up to
    the inherent ambiguities.
    """
    W = np.asarray(W, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if W.shape[0] != W.shape[1] or W.shape != A.shape:
        raise ValueError("amari_index expects square matrices of equal shape")
    n = A.shape[0]
    if np.linalg.matrix_rank(A) < n:
        raise ValueError("mixing matrix is singular")
    P = np.abs(W @ A)
    row_max = P.max(axis=1)
    col_max = P.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise ValueError("degenerate product matrix")
    score = float(np.sum(P.sum(axis=1) / row_max - 1.0) + np.sum(P.sum(axis=0) / col_max - 1.0))
    return score / (2.0 * n * (n - 1))
