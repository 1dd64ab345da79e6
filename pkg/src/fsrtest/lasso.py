"""LASSO on residualized data by cyclic coordinate descent.

The objective is ``(1/T) * ||y - U b||_2^2 + lam * ||b||_1`` with no 1/2 factor,
so the smallest penalty giving ``b = 0`` is ``2/T * ||U^T y||_inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "DegenerateInputError",
    "LambdaGrid",
    "LassoFit",
    "compute_lambda_bar",
    "fit",
    "fit_path",
    "kkt_residual",
    "objective",
]

MAX_SWEEPS = 100_000
CHANGE_TOL = 1e-8
# stopping also requires KKT violation <= KKT_TOL * lam
KKT_TOL = 1e-8
DEGENERATE_RTOL = 1e-10


class DegenerateInputError(ValueError):
    """lambda_bar is zero: the residualized outcome is orthogonal to every regressor."""


def compute_lambda_bar(U_hat, Y_tilde, *, y_norm: float | None = None) -> float:
    """``2/T * max_j |u_j^T y|``, the smallest penalty with an all-zero fit.

    This is also the test statistic. It is treated as zero when it is exactly
    zero or, given ``y_norm`` (the norm of the outcome before residualization),
    when it is below ``1e-10 * 2/T * max_j ||u_j|| * y_norm``.
    """
    U = np.asarray(U_hat, dtype=np.float64)
    y = np.asarray(Y_tilde, dtype=np.float64)
    if U.ndim != 2 or y.shape != (U.shape[0],):
        raise ValueError(f"shape mismatch: U {U.shape}, y {y.shape}")
    T = U.shape[0]
    lam_bar = float(2.0 / T * np.max(np.abs(U.T @ y)))
    floor = 0.0
    if y_norm is not None:
        floor = DEGENERATE_RTOL * 2.0 / T * float(np.sqrt(np.max(np.sum(U * U, axis=0)))) * y_norm
    if not lam_bar > floor:
        raise DegenerateInputError(
            "lambda_bar = 0: the residualized outcome is orthogonal to all residualized regressors"
        )
    return lam_bar


@dataclass(frozen=True)
class LambdaGrid:
    """Increasing penalties ``0 < lam_1 < ... < lam_M < lambda_bar``."""

    values: np.ndarray
    lambda_bar: float

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("grid needs at least one value")
        if not (v[0] > 0 and np.all(np.diff(v) > 0) and v[-1] < self.lambda_bar):
            raise ValueError("grid must satisfy 0 < lam_1 < ... < lam_M < lambda_bar")
        object.__setattr__(self, "values", v)

    @classmethod
    def equidistant(cls, lambda_bar: float, M: int = 200) -> LambdaGrid:
        """``lam_m = m * lambda_bar / (M + 1)`` for ``m = 1..M``."""
        if M < 1:
            raise ValueError(f"M must be positive, got {M}")
        return cls(np.arange(1, M + 1) * (lambda_bar / (M + 1)), float(lambda_bar))

    @property
    def M(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class LassoFit:
    lam: float
    beta: np.ndarray
    residuals: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: np.ndarray | None = None


def objective(U_hat, Y_tilde, beta, lam: float) -> float:
    r = Y_tilde - U_hat @ beta
    return float(r @ r / U_hat.shape[0] + lam * np.abs(beta).sum())


def kkt_residual(U_hat, Y_tilde, beta, lam: float) -> float:
    """Largest violation of the optimality conditions at ``beta``.

    For active coordinates this is ``|g_j - lam * sign(b_j)|`` and for zero
    coordinates ``max(|g_j| - lam, 0)``, with ``g = 2/T * U^T (y - U b)``.
    """
    U = np.asarray(U_hat, dtype=np.float64)
    g = 2.0 / U.shape[0] * (U.T @ (Y_tilde - U @ beta))
    active = beta != 0
    viol = np.where(active, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


@numba.njit(cache=True, nogil=True)
def _soft(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


@numba.njit(cache=True, nogil=True, fastmath=True)
def _pass(Ut, col_sq, beta, resid, lam, coords, n_coords):
    T = Ut.shape[1]
    two_T = 2.0 / T
    max_change = 0.0
    for c in range(n_coords):
        j = coords[c]
        if col_sq[j] == 0.0:
            continue
        g = 0.0
        for t in range(T):
            g += Ut[j, t] * resid[t]
        curv = two_T * col_sq[j]
        bj = beta[j]
        new = _soft(two_T * g + curv * bj, lam) / curv
        if new != bj:
            d = new - bj
            for t in range(T):
                resid[t] -= d * Ut[j, t]
            beta[j] = new
            if abs(d) > max_change:
                max_change = abs(d)
    return max_change


@numba.njit(cache=True, nogil=True, fastmath=True)
def _kkt_ok(Ut, col_sq, beta, resid, lam, tol):
    p, T = Ut.shape
    two_T = 2.0 / T
    for j in range(p):
        if col_sq[j] == 0.0:
            continue
        g = 0.0
        for t in range(T):
            g += Ut[j, t] * resid[t]
        g *= two_T
        b = beta[j]
        if b > 0.0:
            if abs(g - lam) > tol * lam:
                return False
        elif b < 0.0:
            if abs(g + lam) > tol * lam:
                return False
        elif abs(g) > lam * (1.0 + tol):
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _objective(beta, resid, lam, T):
    return (resid @ resid) / T + lam * np.sum(np.abs(beta))


@numba.njit(cache=True, nogil=True)
def _solve(Ut, col_sq, y_inf, beta, resid, lam, max_sweeps, history):
    """Coordinate descent from the given ``beta``/``resid`` state, in place.

    Alternates full sweeps with passes over the active set. Returns
    ``(sweeps, converged)``.
    """
    p, T = Ut.shape
    all_coords = np.arange(p)
    active = np.empty(p, dtype=np.int64)
    change_tol = CHANGE_TOL * max(1.0, y_inf)
    record = history.shape[0] > 0
    if record:
        history[0] = _objective(beta, resid, lam, T)
    sweeps = 0
    while sweeps < max_sweeps:
        change = _pass(Ut, col_sq, beta, resid, lam, all_coords, p)
        sweeps += 1
        if record:
            history[sweeps] = _objective(beta, resid, lam, T)
        if change <= change_tol and _kkt_ok(Ut, col_sq, beta, resid, lam, KKT_TOL):
            return sweeps, True
        n_active = 0
        for j in range(p):
            if beta[j] != 0.0:
                active[n_active] = j
                n_active += 1
        while sweeps < max_sweeps:
            change = _pass(Ut, col_sq, beta, resid, lam, active, n_active)
            sweeps += 1
            if record:
                history[sweeps] = _objective(beta, resid, lam, T)
            if change <= change_tol:
                break
    return sweeps, False


@numba.njit(cache=True, nogil=True)
def _path(Ut, col_sq, y, lambdas_desc, max_sweeps):
    p, T = Ut.shape
    M = lambdas_desc.shape[0]
    betas = np.zeros((M, p))
    resids = np.empty((M, T))
    sweeps = np.zeros(M, dtype=np.int64)
    conv = np.zeros(M, dtype=np.bool_)
    beta = np.zeros(p)
    resid = y.copy()
    y_inf = np.max(np.abs(y))
    no_history = np.empty(0)
    for m in range(M):
        s, c = _solve(Ut, col_sq, y_inf, beta, resid, lambdas_desc[m], max_sweeps, no_history)
        betas[m] = beta
        resids[m] = resid
        sweeps[m] = s
        conv[m] = c
    return betas, resids, sweeps, conv


def _prepare(U_hat, Y_tilde):
    U = np.asarray(U_hat, dtype=np.float64)
    y = np.asarray(Y_tilde, dtype=np.float64)
    if U.ndim != 2 or y.shape != (U.shape[0],):
        raise ValueError(f"shape mismatch: U {U.shape}, y {y.shape}")
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in LASSO inputs")
    Ut = np.ascontiguousarray(U.T)
    col_sq = np.einsum("jt,jt->j", Ut, Ut)
    return U, y, Ut, col_sq


def _finish(U, y, lam, beta, sweeps, converged, history=None) -> LassoFit:
    # recompute residuals from beta so they are exact up to one matvec
    resid = y - U @ beta
    obj = float(resid @ resid / U.shape[0] + lam * np.abs(beta).sum())
    return LassoFit(float(lam), beta, resid, obj, int(sweeps), bool(converged), history)


def fit(
    U_hat,
    Y_tilde,
    lam: float,
    warm_start=None,
    *,
    max_sweeps: int = MAX_SWEEPS,
    record_history: bool = False,
) -> LassoFit:
    """Solve the LASSO at a single penalty.

    Parameters
    ----------
    U_hat : array (T, p)
    Y_tilde : array (T,)
    lam : float
        Penalty, must be positive.
    warm_start : array (p,), optional
        Starting coefficients; zeros by default.
    record_history : bool
        Store the objective after every coordinate pass in ``fit.history``.

    Returns
    -------
    LassoFit
        ``converged`` is False only when ``max_sweeps`` was exhausted; the last
        (lowest-objective) iterate is returned in that case.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    U, y, Ut, col_sq = _prepare(U_hat, Y_tilde)
    if lam >= 2.0 / U.shape[0] * np.max(np.abs(U.T @ y), initial=0.0):
        # zero is optimal; skip the solver so rounding cannot leave a tiny coefficient
        zero = np.zeros(U.shape[1])
        return _finish(U, y, lam, zero, 0, True, np.array([objective(U, y, zero, lam)]) if record_history else None)
    beta = np.zeros(U.shape[1]) if warm_start is None else np.array(warm_start, dtype=np.float64)
    beta[col_sq == 0.0] = 0.0
    resid = y - U @ beta
    history = np.full(max_sweeps + 1, np.nan) if record_history else np.empty(0)
    sweeps, conv = _solve(
        Ut, col_sq, float(np.max(np.abs(y), initial=0.0)), beta, resid, float(lam), max_sweeps, history
    )
    return _finish(U, y, lam, beta, sweeps, conv, history[: sweeps + 1] if record_history else None)


def fit_path(U_hat, Y_tilde, grid: LambdaGrid, *, max_sweeps: int = MAX_SWEEPS) -> list[LassoFit]:
    """Warm-started fits from the largest penalty down; returned in that (descending) order."""
    U, y, Ut, col_sq = _prepare(U_hat, Y_tilde)
    lambdas = grid.values[::-1].copy()
    betas, _, sweeps, conv = _path(Ut, col_sq, y, lambdas, max_sweeps)
    return [
        _finish(U, y, lambdas[m], betas[m].copy(), sweeps[m], conv[m]) for m in range(lambdas.size)
    ]


def path_residuals(U_hat, Y_tilde, grid: LambdaGrid, *, max_sweeps: int = MAX_SWEEPS):
    """Residual matrix ``(M, T)`` in ascending-penalty order, plus convergence flags."""
    U, y, Ut, col_sq = _prepare(U_hat, Y_tilde)
    lambdas = grid.values[::-1].copy()
    betas, _, _, conv = _path(Ut, col_sq, y, lambdas, max_sweeps)
    resid = y[None, :] - betas[::-1] @ U.T
    return resid, conv[::-1].copy()
