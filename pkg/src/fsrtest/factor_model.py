"""Principal-component factors, factor-count estimation and residualization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "CollinearityError",
    "DataError",
    "DegenerateEigenspaceWarning",
    "FactorDecomposition",
    "FactorEstimate",
    "PanelData",
    "default_k_max",
    "eigenvalue_ratios",
    "estimate_factors",
    "estimate_num_factors",
    "gram_eigenvalues",
    "residualize",
]

# relative size below which a Gram eigenvalue counts as exactly zero
_ZERO_EIG_RTOL = 1e-12
_DEGENERATE_GAP = 1e-10
_COLLINEAR_RTOL = 1e-10


class DataError(ValueError):
    """Input data is malformed (non-finite entries, shape mismatch, ...)."""


class CollinearityError(ValueError):
    """The combined factor / observed-regressor matrix is rank deficient."""


class DegenerateEigenspaceWarning(UserWarning):
    """Kept and dropped eigenvalues coincide, so the factor space is not unique."""


def _as_finite(name: str, a, ndim: int) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if ndim == 2 and arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != ndim:
        raise DataError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(f"{name} has a non-finite entry at index {tuple(int(i) for i in bad)}")
    return arr


@dataclass(frozen=True)
class PanelData:
    """Outcome ``Y`` (T,), regressors ``X`` (T, p) and optional extra regressors ``W`` (T, l).

    Rows are time periods. ``W`` enters the outcome equation only and is
    partialled out together with the estimated factors.
    """

    Y: np.ndarray
    X: np.ndarray
    W: np.ndarray | None = None
    x_names: tuple[str, ...] | None = None
    w_names: tuple[str, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        Y = _as_finite("Y", self.Y, 1)
        X = _as_finite("X", self.X, 2)
        if Y.shape[0] != X.shape[0]:
            raise DataError(f"Y has {Y.shape[0]} rows but X has {X.shape[0]}")
        if Y.shape[0] < 2:
            raise DataError("need at least T=2 observations")
        if X.shape[1] < 1:
            raise DataError("X needs at least one column")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        if self.W is not None:
            W = _as_finite("W", self.W, 2)
            if W.shape[0] != Y.shape[0]:
                raise DataError(f"W has {W.shape[0]} rows but Y has {Y.shape[0]}")
            if W.shape[1] < 1:
                raise DataError("W must have at least one column when given")
            if W.shape[1] >= Y.shape[0]:
                raise DataError("W must have fewer columns than rows")
            object.__setattr__(self, "W", W)
        for name, width in (("x_names", X.shape[1]), ("w_names", self.ell)):
            names = getattr(self, name)
            if names is not None:
                names = tuple(str(n) for n in names)
                if len(names) != width:
                    raise DataError(f"{name} has {len(names)} entries for {width} columns")
                object.__setattr__(self, name, names)

    @property
    def T(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def ell(self) -> int:
        return 0 if self.W is None else self.W.shape[1]


class FactorEstimate(NamedTuple):
    F_hat: np.ndarray
    B_hat: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class FactorDecomposition:
    """Estimated factors and the data with factors (and ``W``) projected out.

    ``basis`` is an orthonormal basis of the projected-out space, so the
    projector is ``basis @ basis.T``.
    """

    K_hat: int
    F_hat: np.ndarray
    B_hat: np.ndarray
    eigenvalues: np.ndarray
    U_hat: np.ndarray
    Y_tilde: np.ndarray
    used_W: bool
    basis: np.ndarray
    degenerate_boundary: bool = False
    ratios: np.ndarray = field(default_factory=lambda: np.empty(0))

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


def default_k_max(T: int, p: int) -> int:
    return max(1, min(8, min(T, p) - 1))


def _sym_eigh_desc(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(G)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def gram_eigenvalues(X: np.ndarray) -> np.ndarray:
    """All ``min(T, p)`` eigenvalues of ``X X^T / (T p)`` in descending order."""
    X = _as_finite("X", X, 2)
    T, p = X.shape
    G = X @ X.T if T <= p else X.T @ X
    vals = np.linalg.eigvalsh(G)[::-1] / (T * p)
    return vals.copy()


def eigenvalue_ratios(eigenvalues: np.ndarray, k_max: int) -> np.ndarray:
    """Ratios ``mu_k / mu_{k+1}`` for ``k = 1..k_max``.

    A next eigenvalue that is zero up to rounding gives an infinite ratio.
    """
    mu = np.asarray(eigenvalues, dtype=np.float64)
    if len(mu) < k_max + 1:
        raise ValueError(f"need {k_max + 1} eigenvalues, got {len(mu)}")
    zero = max(mu[0], 0.0) * _ZERO_EIG_RTOL
    ratios = np.empty(k_max)
    for k in range(k_max):
        nxt = mu[k + 1]
        ratios[k] = np.inf if nxt <= zero else mu[k] / nxt
    return ratios


def estimate_num_factors(X, k_max: int | None = None) -> int:
    """Eigenvalue-ratio estimate of the number of factors.

    Returns the ``k`` in ``1..k_max`` maximising ``mu_k / mu_{k+1}``, where the
    ``mu`` are the leading eigenvalues of ``X X^T / (T p)``. Ties go to the
    smallest ``k``; an exactly rank-``r`` panel returns ``r``.
    """
    X = _as_finite("X", X, 2)
    T, p = X.shape
    if k_max is None:
        k_max = default_k_max(T, p)
    if not 1 <= k_max <= min(T, p) - 1:
        raise ValueError(f"k_max must lie in [1, {min(T, p) - 1}], got {k_max}")
    ratios = eigenvalue_ratios(gram_eigenvalues(X), k_max)
    return int(np.argmax(ratios)) + 1  # argmax returns the first maximiser, inf included


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    if vecs.shape[1] == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def estimate_factors(X, K: int) -> FactorEstimate:
    """Principal-component factors of ``X``.

    The columns of ``F_hat / sqrt(T)`` are the leading ``K`` unit eigenvectors
    of ``X X^T``, each flipped so that its largest-magnitude entry is positive.
    ``B_hat = F_hat^T X / T``. The eigendecomposition is done on whichever of
    ``X X^T`` and ``X^T X`` is smaller.

    Returns
    -------
    FactorEstimate
        ``(F_hat, B_hat, eigenvalues)``; ``eigenvalues`` are all eigenvalues
        of ``X X^T / (T p)``, descending.
    """
    X = _as_finite("X", X, 2)
    T, p = X.shape
    K = int(K)
    if not 0 <= K <= min(T, p):
        raise ValueError(f"K must lie in [0, {min(T, p)}], got {K}")
    if T <= p:
        vals, vecs = _sym_eigh_desc(X @ X.T)
        F_dir = vecs[:, :K]
    else:
        vals, vecs = _sym_eigh_desc(X.T @ X)
        kept = vals[:K]
        if K and kept[-1] <= max(vals[0], 0.0) * _ZERO_EIG_RTOL:
            # X v / sqrt(s) breaks down on a null direction; go through X X^T
            _, tvecs = _sym_eigh_desc(X @ X.T)
            F_dir = tvecs[:, :K]
        else:
            F_dir = (X @ vecs[:, :K]) / np.sqrt(kept)
            if K:
                # re-orthonormalise; signs are fixed below
                F_dir, _ = np.linalg.qr(F_dir)
    if 0 < K < len(vals):
        top = max(abs(vals[0]), np.finfo(float).tiny)
        if abs(vals[K - 1] - vals[K]) <= _DEGENERATE_GAP * top:
            warnings.warn(
                f"eigenvalues {K} and {K + 1} coincide; the {K}-factor space is not unique",
                DegenerateEigenspaceWarning,
                stacklevel=2,
            )
    F_hat = np.sqrt(T) * _fix_signs(F_dir)
    B_hat = (F_hat.T @ X).T / T
    return FactorEstimate(F_hat, B_hat, vals / (T * p))


def _column_labels(K: int, w_names: Sequence[str] | None, ell: int) -> list[str]:
    labels = [f"factor_{k + 1}" for k in range(K)]
    if w_names is None:
        labels += [f"W[{j}]" for j in range(ell)]
    else:
        labels += list(w_names)
    return labels


def residualize(data: PanelData, F_hat, *, eigenvalues=None) -> FactorDecomposition:
    """Project the factors (and ``W`` when present) out of ``X`` and ``Y``.

    Without ``W`` the projector is ``F_hat F_hat^T / T``. With ``W`` it is the
    orthogonal projector onto the columns of ``[F_hat, W]``, built from a
    column-pivoted QR factorisation.

    Raises
    ------
    CollinearityError
        If ``[F_hat, W]`` has a singular value below ``1e-10`` times its
        largest one.
    """
    F_hat = np.asarray(F_hat, dtype=np.float64).reshape(data.T, -1)
    T = data.T
    K = F_hat.shape[1]
    if data.W is None:
        basis = F_hat / np.sqrt(T)
    else:
        Z = np.hstack([F_hat, data.W])
        s = np.linalg.svd(Z, compute_uv=False)
        if s[-1] < _COLLINEAR_RTOL * s[0]:
            _, R, piv = scipy.linalg.qr(Z, mode="economic", pivoting=True)
            diag = np.abs(np.diag(R))
            bad = piv[diag < _COLLINEAR_RTOL * diag[0]]
            names = _column_labels(K, data.w_names, data.ell)
            raise CollinearityError(
                "factors and extra regressors are collinear; dependent columns: "
                + ", ".join(names[i] for i in sorted(bad))
            )
        basis, _ = np.linalg.qr(Z)
    X, Y = data.X, data.Y
    if basis.shape[1] == 0:
        U_hat, Y_tilde = X.copy(), Y.copy()
    else:
        U_hat = X - basis @ (basis.T @ X)
        Y_tilde = Y - basis @ (basis.T @ Y)
    B_hat = (F_hat.T @ X).T / T
    eig = np.empty(0) if eigenvalues is None else np.asarray(eigenvalues)
    return FactorDecomposition(
        K_hat=K,
        F_hat=F_hat,
        B_hat=B_hat,
        eigenvalues=eig,
        U_hat=U_hat,
        Y_tilde=Y_tilde,
        used_W=data.W is not None,
        basis=basis,
    )


def decompose(data: PanelData, k: int | None = None, k_max: int | None = None) -> FactorDecomposition:
    """Factor-count estimation (unless ``k`` is given), extraction and residualization."""
    X = data.X
    T, p = X.shape
    eig = gram_eigenvalues(X)
    if k_max is None:
        k_max = default_k_max(T, p)
    ratios = eigenvalue_ratios(eig, k_max) if min(T, p) >= 2 else np.empty(0)
    K = estimate_num_factors(X, k_max) if k is None else int(k)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateEigenspaceWarning)
        F_hat, _, _ = estimate_factors(X, K)
    degenerate = any(issubclass(w.category, DegenerateEigenspaceWarning) for w in caught)
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    dec = residualize(data, F_hat, eigenvalues=eig)
    return FactorDecomposition(
        **{**dec.__dict__, "degenerate_boundary": degenerate, "ratios": ratios}
    )
