"""Simulated factor-augmented panels and Monte Carlo rejection frequencies."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bootstrap_test import TestConfig, bootstrap_draws, decisions_for
from .factor_model import PanelData, decompose
from .lasso import DegenerateInputError, LambdaGrid, compute_lambda_bar
from .randomness import StreamKey, derive_seed, standard_normal_vector, uniform_vector

__all__ = [
    "DESIGNS",
    "RejectionTable",
    "SimulationConfig",
    "draw_covariance_ar1",
    "generate_panel",
    "run_monte_carlo",
    "toeplitz_cholesky",
]

# (rho_f, rho_u, rho_e)
DESIGNS = {
    1: (0.0, 0.0, 0.0),
    2: (0.6, 0.1, 0.0),
    3: (0.6, 0.1, 0.1),
}


@dataclass(frozen=True)
class SimulationConfig:
    """Data-generating process and test settings for one Monte Carlo cell.

    ``beta_shape`` picks the sparse coefficient vector: ``"two"`` gives
    ``(m, m/2, 0, ..., 0)``, ``"geometric"`` gives ``m * 0.5**j``.
    """

    T: int = 100
    p: int = 100
    K: int = 2
    rho_f: float = 0.0
    rho_u: float = 0.0
    rho_e: float = 0.0
    m: float = 0.0
    gamma_star: tuple[float, ...] = (0.5, 0.5)
    sigma_decay: float = 0.6
    reps: int = 200
    seed: int = 42
    alphas: tuple[float, ...] = (0.1, 0.05, 0.01)
    L: int = 200
    M: int = 200
    k_max: int | None = None
    beta_shape: str = "two"
    design: str = "custom"

    def __post_init__(self) -> None:
        for name in ("rho_f", "rho_u", "rho_e"):
            rho = getattr(self, name)
            if not 0.0 <= rho < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {rho}")
        if self.T < 3 or self.p < 2 or self.K < 1:
            raise ValueError(f"need T >= 3, p >= 2, K >= 1; got T={self.T}, p={self.p}, K={self.K}")
        if len(self.gamma_star) != self.K:
            raise ValueError(f"gamma_star has {len(self.gamma_star)} entries for K={self.K}")
        if self.m < 0:
            raise ValueError(f"m must be nonnegative, got {self.m}")
        if self.reps < 1:
            raise ValueError(f"reps must be positive, got {self.reps}")
        if not -1.0 < self.sigma_decay < 1.0:
            raise ValueError(f"sigma_decay must lie in (-1, 1), got {self.sigma_decay}")
        if self.beta_shape not in ("two", "geometric"):
            raise ValueError(f"unknown beta_shape {self.beta_shape!r}")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {a}")

    @classmethod
    def for_design(cls, design: int, **kw) -> SimulationConfig:
        if design not in DESIGNS:
            raise ValueError(f"design must be one of {sorted(DESIGNS)}, got {design}")
        rho_f, rho_u, rho_e = DESIGNS[design]
        return cls(rho_f=rho_f, rho_u=rho_u, rho_e=rho_e, design=str(design), **kw)

    @property
    def beta_star(self) -> np.ndarray:
        beta = np.zeros(self.p)
        if self.beta_shape == "two":
            beta[:2] = (1.0, 0.5)
        else:
            beta[:] = 0.5 ** np.arange(self.p)
        return beta * self.m

    def test_config(self, seed: int) -> TestConfig:
        return TestConfig(M=self.M, L=self.L, k=None, k_max=self.k_max, seed=seed)


def toeplitz_covariance(p: int, decay: float) -> np.ndarray:
    idx = np.arange(p)
    return decay ** np.abs(np.subtract.outer(idx, idx)).astype(np.float64)


@lru_cache(maxsize=16)
def _toeplitz_chol(p: int, decay: float) -> np.ndarray:
    chol = np.linalg.cholesky(toeplitz_covariance(p, decay))
    chol.flags.writeable = False
    return chol


def toeplitz_cholesky(p: int, decay: float = 0.6) -> np.ndarray:
    """Lower Cholesky factor of ``Sigma[i, j] = decay**|i - j|`` (cached, read-only)."""
    return _toeplitz_chol(int(p), float(decay))


def draw_covariance_ar1(Sigma):
    """Return ``sample(key, n)`` drawing ``n`` rows from ``N(0, Sigma)``.

    The Cholesky factor is computed once here; ``numpy.linalg.LinAlgError``
    propagates if ``Sigma`` is not positive definite.
    """
    Sigma = np.asarray(Sigma, dtype=np.float64)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1] or not np.allclose(Sigma, Sigma.T):
        raise ValueError("Sigma must be a symmetric square matrix")
    chol = np.linalg.cholesky(Sigma)
    return _chol_sampler(chol)


def _chol_sampler(chol):
    p = chol.shape[0]

    def sample(key: StreamKey, n: int) -> np.ndarray:
        z = standard_normal_vector(key, n * p).reshape(n, p)
        return z @ chol.T

    sample.chol = chol
    return sample


def _ar1(innov: np.ndarray, rho: float) -> np.ndarray:
    """Rows ``1..T`` of ``x_t = rho x_{t-1} + sqrt(1 - rho^2) z_t``, with ``x_0 = innov[0]``."""
    scale = np.sqrt(1.0 - rho * rho)
    out = np.empty_like(innov)
    out[0] = innov[0]
    for t in range(1, innov.shape[0]):
        out[t] = rho * out[t - 1] + scale * innov[t]
    return out[1:]


def generate_panel(cfg: SimulationConfig, rep_index: int, *, return_truth: bool = False):
    """One replication of the simulation design.

    Each component has its own stream ``(cfg.seed, "dgp.<part>", rep_index)``.
    The AR(1) processes start from their stationary laws and the returned
    sample is periods ``1..T``.
    """
    T, p, K = cfg.T, cfg.p, cfg.K
    key = lambda part: StreamKey(cfg.seed, f"dgp.{part}", rep_index)  # noqa: E731
    B = uniform_vector(key("loadings"), p * K, -1.0, 1.0).reshape(p, K)
    F = _ar1(standard_normal_vector(key("factors"), (T + 1) * K).reshape(T + 1, K), cfg.rho_f)
    sampler = _chol_sampler(toeplitz_cholesky(p, cfg.sigma_decay))
    U = _ar1(sampler(key("idio"), T + 1), cfg.rho_u)
    eps = _ar1(standard_normal_vector(key("errors"), T + 1)[:, None], cfg.rho_e)[:, 0]
    Y = F @ np.asarray(cfg.gamma_star) + U @ cfg.beta_star + eps
    X = F @ B.T + U
    panel = PanelData(Y, X)
    if return_truth:
        return panel, {"F": F, "B": B, "U": U, "eps": eps}
    return panel


def _one_rep(cfg: SimulationConfig, rep: int) -> tuple[np.ndarray | None, int]:
    """Decisions at every alpha for one replication, or None if lambda_bar is degenerate."""
    data = generate_panel(cfg, rep)
    tcfg = cfg.test_config(derive_seed(StreamKey(cfg.seed, "rep", rep)))
    dec = decompose(data, k=None, k_max=tcfg.k_max)
    try:
        lam_bar = compute_lambda_bar(dec.U_hat, dec.Y_tilde, y_norm=float(np.linalg.norm(data.Y)))
    except DegenerateInputError:
        return None, dec.K_hat
    draws = bootstrap_draws(dec.U_hat, dec.Y_tilde, LambdaGrid.equidistant(lam_bar, tcfg.M), tcfg.L, tcfg.seed)
    return decisions_for(draws, cfg.alphas), dec.K_hat


def _rep_chunk(args):
    cfg, reps = args
    return [_one_rep(cfg, r) for r in reps]


@dataclass
class RejectionTable:
    """Rejection frequencies keyed by ``(m, alpha)`` for one design."""

    design: str
    T: int
    p: int
    rows: list[dict] = field(default_factory=list)
    k_hat_counts: list[int] = field(default_factory=list)

    def extend(self, other: RejectionTable) -> None:
        self.rows.extend(other.rows)

    def rate(self, m: float, alpha: float) -> float:
        for row in self.rows:
            if np.isclose(row["m"], m) and np.isclose(row["alpha"], alpha):
                return row["reject_rate"]
        raise KeyError((m, alpha))

    COLUMNS = ("design", "T", "p", "m", "alpha", "reps", "reject_rate", "degenerate_count", "seconds")

    def to_csv(self, *, timing: bool = True) -> str:
        """CSV text; ``timing=False`` drops the wall-clock column so output is reproducible."""
        cols = [c for c in self.COLUMNS if timing or c != "seconds"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            rec = {"design": self.design, "T": self.T, "p": self.p, **row}
            w.writerow([_fmt(rec[c]) for c in cols])
        return buf.getvalue()

    def to_text(self) -> str:
        """Table with one line per ``m`` and one column per level."""
        alphas = sorted({r["alpha"] for r in self.rows}, reverse=True)
        ms = sorted({r["m"] for r in self.rows})
        head = f"Design {self.design}, T={self.T}, p={self.p}"
        lines = [head, "m      " + "".join(f"a={a:<8g}" for a in alphas)]
        for m in ms:
            cells = []
            for a in alphas:
                try:
                    cells.append(f"{self.rate(m, a):<10.4f}")
                except KeyError:
                    cells.append(f"{'-':<10}")
            lines.append(f"{m:<7g}" + "".join(cells))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_monte_carlo(cfg: SimulationConfig, *, workers: int = 1, chunk: int = 8) -> RejectionTable:
    """Rejection frequency at each level in ``cfg.alphas`` over ``cfg.reps`` replications.

    Replication ``r`` draws its data from ``(cfg.seed, "dgp.*", r)`` and its
    bootstrap seed from ``(cfg.seed, "rep", r)``, so the table does not
    depend on ``workers``. Replications with ``lambda_bar = 0`` are excluded
    from the frequency and counted in ``degenerate_count``.
    """
    start = time.perf_counter()
    jobs = [(cfg, range(i, min(i + chunk, cfg.reps))) for i in range(0, cfg.reps, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_rep_chunk, jobs) for r in part]
    else:
        results = [r for job in jobs for r in _rep_chunk(job)]
    decided = [d for d, _ in results if d is not None]
    n_deg = len(results) - len(decided)
    counts = np.sum(decided, axis=0) if decided else np.zeros(len(cfg.alphas))
    seconds = time.perf_counter() - start
    table = RejectionTable(cfg.design, cfg.T, cfg.p)
    for a, c in zip(cfg.alphas, counts):
        table.rows.append(
            {
                "m": float(cfg.m),
                "alpha": float(a),
                "reps": cfg.reps,
                "reject_rate": float(c) / len(decided) if decided else float("nan"),
                "degenerate_count": n_deg,
                "seconds": round(seconds, 3),
            }
        )
    table.k_hat_counts = np.bincount([k for _, k in results]).tolist()
    return table
