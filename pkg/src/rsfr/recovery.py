"""Range-Doppler reconstruction: matched filter, greedy and convex solvers.

Every solver accepts either an :class:`~rsfr.core.ObservationMatrix` or a
plain 2-D array; block algorithms then need ``block_size``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .core import DopplerMode, ObservationMatrix

__all__ = [
    "SolverConfig",
    "RecoveryResult",
    "RankDeficiencyWarning",
    "soft_threshold",
    "block_soft_threshold",
    "matched_filter",
    "omp",
    "block_omp",
    "lasso_solve",
    "block_lasso_solve",
    "basis_pursuit_solve",
    "extract_support_topk",
    "debias_least_squares",
    "velocity_spectrum",
    "default_lambda",
]

_TINY = np.finfo(float).tiny


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Shared knobs of the iterative solvers.

    ``lam=None`` picks ``0.1 * ||Psi^H y||_inf`` (entrywise penalties) or
    ``0.1 * max_q ||Psi_q^H y||_2`` (block penalties) per instance.
    ``penalty`` is the ADMM parameter of the basis-pursuit solver.
    """

    lam: float | None = None
    max_iterations: int = 5000
    tolerance: float = 1e-8
    support_threshold: float = 1e-5
    penalty: float = 1.0

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tolerance < 0 or self.support_threshold < 0 or not self.penalty > 0:
            raise ValueError("tolerance, support_threshold and penalty must be positive")


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    estimate: np.ndarray
    support: frozenset
    block_support: frozenset
    velocity_spectrum: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool = True
    message: str = ""
    algorithm: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def block_size(self) -> int:
        return self.estimate.size // self.velocity_spectrum.size

    def grid(self) -> np.ndarray:
        """Estimate as the ``M x N`` range-velocity grid."""
        return self.estimate.reshape(self.velocity_spectrum.size, self.block_size).T

    def to_dict(self, include_grid: bool = True) -> dict:
        d = {
            "algorithm": self.algorithm,
            "estimate": [[float(v.real), float(v.imag)] for v in self.estimate],
            "support": sorted(self.support),
            "block_support": sorted(self.block_support),
            "velocity_spectrum": self.velocity_spectrum.tolist(),
            "iterations": int(self.iterations),
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "message": self.message,
        }
        if include_grid:
            d["grid_magnitude"] = np.abs(self.grid()).tolist()
        return d


def _unpack(matrix, block_size=None):
    if isinstance(matrix, ObservationMatrix):
        return matrix.entries, block_size or matrix.block_size
    psi = np.asarray(matrix)
    if psi.ndim != 2:
        raise ValueError("observation matrix must be 2-D")
    return psi, block_size or 1


def _check_y(psi, y):
    y = np.asarray(getattr(y, "samples", y), dtype=complex)
    if y.shape != (psi.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({psi.shape[0]},)")
    return y


def velocity_spectrum(x_hat, block_size: int) -> np.ndarray:
    """Per-velocity-cell norm of the estimated range profile."""
    x_hat = np.asarray(x_hat)
    if block_size < 1 or x_hat.ndim != 1 or x_hat.size % block_size:
        raise ValueError(f"length {x_hat.size} is not a multiple of block size {block_size}")
    return np.linalg.norm(x_hat.reshape(-1, block_size), axis=1)


def _result(psi, y, x, support, m, iterations, algorithm, converged=True,
            message="", **diagnostics) -> RecoveryResult:
    support = frozenset(int(i) for i in support)
    return RecoveryResult(
        estimate=x,
        support=support,
        block_support=frozenset(i // m for i in support),
        velocity_spectrum=velocity_spectrum(x, m),
        iterations=iterations,
        residual_norm=float(np.linalg.norm(y - psi @ x)),
        converged=converged,
        message=message,
        algorithm=algorithm,
        diagnostics=diagnostics,
    )


def _threshold_support(x, threshold):
    return np.flatnonzero(np.abs(x) > threshold)


def matched_filter(matrix, y, block_size: int | None = None) -> RecoveryResult:
    """Correlation image ``Psi^H y``; no support is extracted."""
    psi, m = _unpack(matrix, block_size)
    y = _check_y(psi, y)
    return _result(psi, y, psi.conj().T @ y, (), m, 0, "matched_filter")


def extract_support_topk(x_hat, count: int) -> frozenset:
    """Indices of the ``count`` largest magnitudes, lower index first on ties."""
    x_hat = np.asarray(x_hat)
    if not 0 <= count <= x_hat.size:
        raise ValueError(f"count must lie in [0, {x_hat.size}]")
    order = np.argsort(-np.abs(x_hat), kind="stable")
    return frozenset(order[:count].tolist())


def debias_least_squares(matrix, y, support) -> np.ndarray:
    """Least-squares refit of ``y`` on the support columns, zero elsewhere."""
    psi, _ = _unpack(matrix)
    y = _check_y(psi, y)
    idx = np.array(sorted(support), dtype=int)
    x = np.zeros(psi.shape[1], dtype=complex)
    if idx.size == 0:
        return x
    sub = psi[:, idx]
    coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
    if rank < idx.size:
        warnings.warn(f"support submatrix has rank {rank} < {idx.size}; "
                      "using the minimum-norm solution", RankDeficiencyWarning,
                      stacklevel=2)
    x[idx] = coef
    return x


def _greedy(psi, y, n_steps, m, score, algorithm, support_threshold=None):
    """Shared OMP loop; ``score`` maps correlations to per-atom scores."""
    n_atoms = psi.shape[1] // m
    y_norm = np.linalg.norm(y)
    chosen: list[int] = []
    coef = np.zeros(0, dtype=complex)
    residual = y.copy()
    converged, message = True, ""
    columns = np.zeros(0, dtype=int)
    for _ in range(n_steps):
        if np.linalg.norm(residual) <= 1e-12 * y_norm or y_norm == 0:
            break
        s = score((psi.conj().T @ residual).reshape(n_atoms, m))
        s[chosen] = -np.inf
        atom = int(np.argmax(s))
        trial = np.concatenate([columns, atom * m + np.arange(m)])
        sub = psi[:, trial]
        new_coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < trial.size:
            converged = False
            message = (f"selected columns became rank deficient (rank {rank} < "
                       f"{trial.size}) at step {len(chosen) + 1}; stopped")
            break
        chosen.append(atom)
        columns, coef = trial, new_coef
        residual = y - sub @ coef
    x = np.zeros(psi.shape[1], dtype=complex)
    x[columns] = coef
    if support_threshold is None:
        support = columns
    else:
        support = columns[np.abs(coef) > support_threshold]
    return _result(psi, y, x, support, m, len(chosen), algorithm, converged, message,
                   selected=list(chosen))


def omp(matrix, y, sparsity: int, block_size: int | None = None) -> RecoveryResult:
    """Orthogonal matching pursuit with ``sparsity`` selections."""
    psi, m = _unpack(matrix, block_size)
    y = _check_y(psi, y)
    if not 0 <= sparsity <= psi.shape[0]:
        raise ValueError(f"sparsity must lie in [0, {psi.shape[0]}], got {sparsity}")
    return _rebin(_greedy(psi, y, sparsity, 1, lambda c: np.abs(c[:, 0]), "omp"), m)


def block_omp(matrix, y, block_sparsity: int, block_size: int | None = None,
              support_threshold: float = 1e-5) -> RecoveryResult:
    """Block OMP: pick the block with largest ``||Psi_q^H r||``, refit jointly.

    The reported support keeps the entries of the chosen blocks whose
    refitted magnitude exceeds ``support_threshold``.
    """
    psi, m = _unpack(matrix, block_size)
    y = _check_y(psi, y)
    if not 0 <= block_sparsity <= psi.shape[1] // m:
        raise ValueError(f"block_sparsity must lie in [0, {psi.shape[1] // m}]")
    return _greedy(psi, y, block_sparsity, m, lambda c: np.linalg.norm(c, axis=1),
                   "block_omp", support_threshold)


def _rebin(result: RecoveryResult, m: int) -> RecoveryResult:
    if result.block_size == m:
        return result
    return replace(result, block_support=frozenset(i // m for i in result.support),
                   velocity_spectrum=velocity_spectrum(result.estimate, m))


def _shrink(mag: np.ndarray, thresh: float) -> np.ndarray:
    """``max(0, 1 - thresh / mag)`` without dividing by tiny magnitudes."""
    keep = mag > thresh
    scale = np.zeros(mag.shape)
    scale[keep] = 1.0 - thresh / mag[keep]
    return scale


def soft_threshold(x: np.ndarray, thresh: float) -> np.ndarray:
    """Complex soft threshold: shrink magnitudes by ``thresh``, keep phases."""
    return x * _shrink(np.abs(x), thresh)


def _block_norms(x: np.ndarray, block_size: int) -> np.ndarray:
    # abs for unit blocks keeps the block path bitwise equal to the entrywise one
    if block_size == 1:
        return np.abs(x)
    return np.linalg.norm(x.reshape(-1, block_size), axis=1)


def block_soft_threshold(x: np.ndarray, thresh: float, block_size: int) -> np.ndarray:
    """Scale every block by ``max(0, 1 - thresh / ||x_q||)``."""
    blocks = x.reshape(-1, block_size)
    return (blocks * _shrink(_block_norms(x, block_size), thresh)[:, None]).ravel()


def default_lambda(matrix, y, blockwise: bool, block_size: int | None = None) -> float:
    psi, m = _unpack(matrix, block_size)
    corr = psi.conj().T @ _check_y(psi, y)
    if blockwise:
        return 0.1 * float(_block_norms(corr, m).max())
    return 0.1 * float(np.abs(corr).max())


def _lipschitz(matrix, psi) -> float:
    if isinstance(matrix, ObservationMatrix) and matrix.mode is DopplerMode.SIMPLIFIED:
        return float(matrix.block_size)
    return float(np.linalg.norm(psi, 2) ** 2)


def _fista(psi, y, lam, penalty, prox, lipschitz, config, algorithm, m):
    """Accelerated proximal gradient with restart whenever the objective rises."""
    step = 1.0 / lipschitz
    psi_h = psi.conj().T
    x = np.zeros(psi.shape[1], dtype=complex)
    ax = np.zeros_like(y)
    z, az = x, ax
    theta = 1.0
    obj = 0.5 * np.vdot(y, y).real
    history = [obj]
    converged, message = False, ""
    restarts = 0
    it = 0
    for it in range(1, config.max_iterations + 1):
        x_new = prox(z - step * (psi_h @ (az - y)), lam * step)
        ax_new = psi @ x_new
        r = ax_new - y
        obj_new = 0.5 * np.vdot(r, r).real + lam * penalty(x_new)
        if obj_new > obj:
            # momentum overshoot: plain proximal step from x instead
            restarts += 1
            theta = 1.0
            x_new = prox(x - step * (psi_h @ (ax - y)), lam * step)
            ax_new = psi @ x_new
            r = ax_new - y
            obj_new = 0.5 * np.vdot(r, r).real + lam * penalty(x_new)
        if not np.isfinite(obj_new):
            message = f"objective became non-finite at iteration {it}"
            break
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta ** 2))
        beta = (theta - 1.0) / theta_new
        z = x_new + beta * (x_new - x)
        az = ax_new + beta * (ax_new - ax)
        change = abs(obj - obj_new) / max(obj, _TINY)
        x, ax, obj, theta = x_new, ax_new, obj_new, theta_new
        history.append(obj)
        if change < config.tolerance:
            converged = True
            break
    if not converged and not message:
        message = f"no convergence within {config.max_iterations} iterations"
    support = _threshold_support(x, config.support_threshold)
    return _result(psi, y, x, support, m, it, algorithm, converged, message,
                   objective=obj, objective_history=history, restarts=restarts,
                   lam=lam)


def lasso_solve(matrix, y, config: SolverConfig | None = None,
                block_size: int | None = None) -> RecoveryResult:
    """Minimise ``0.5 ||y - Psi x||^2 + lam ||x||_1``."""
    config = config or SolverConfig()
    psi, m = _unpack(matrix, block_size)
    y = _check_y(psi, y)
    lam = config.lam if config.lam is not None else default_lambda(psi, y, False)
    if lam == 0:
        return _zero(psi, y, m, "lasso")
    return _fista(psi, y, lam, lambda v: np.abs(v).sum(), soft_threshold,
                  _lipschitz(matrix, psi), config, "lasso", m)


def block_lasso_solve(matrix, y, config: SolverConfig | None = None,
                      block_size: int | None = None) -> RecoveryResult:
    """Minimise ``0.5 ||y - Psi x||^2 + lam * sum_q ||x_q||_2``."""
    config = config or SolverConfig()
    psi, m = _unpack(matrix, block_size)
    y = _check_y(psi, y)
    lam = config.lam if config.lam is not None else default_lambda(psi, y, True, m)
    if lam == 0:
        return _zero(psi, y, m, "block_lasso")

    def penalty(v):
        return _block_norms(v, m).sum()

    def prox(v, t):
        return block_soft_threshold(v, t, m)

    return _fista(psi, y, lam, penalty, prox, _lipschitz(matrix, psi), config,
                  "block_lasso", m)


def _zero(psi, y, m, algorithm):
    return _result(psi, y, np.zeros(psi.shape[1], dtype=complex), (), m, 0, algorithm)


def basis_pursuit_solve(matrix, y, config: SolverConfig | None = None,
                        blockwise: bool = False,
                        block_size: int | None = None) -> RecoveryResult:
    """Minimise ``||x||_1`` (or ``||x||_{2,1}``) subject to ``Psi x = y`` by ADMM.

    Splits ``x = z`` with ``x`` on the affine set and ``z`` carrying the
    norm; ``z`` is returned, so the estimate is exactly sparse. Stops once
    ``||Psi z - y|| / ||y||`` and the relative change in ``z`` both fall
    below ``config.tolerance``.
    """
    config = config or SolverConfig()
    psi, m = _unpack(matrix, block_size)
    y = _check_y(psi, y)
    algorithm = "block_basis_pursuit" if blockwise else "basis_pursuit"
    y_norm = np.linalg.norm(y)
    if y_norm == 0:
        return _zero(psi, y, m, algorithm)
    psi_h = psi.conj().T
    gram = linalg.cho_factor(psi @ psi_h)
    # projection of v onto {x : Psi x = y}
    offset = psi_h @ linalg.cho_solve(gram, y)

    def project(v):
        return v - psi_h @ linalg.cho_solve(gram, psi @ v) + offset

    if blockwise:
        def prox(v, t):
            return block_soft_threshold(v, t, m)
    else:
        prox = soft_threshold

    thresh = 1.0 / config.penalty
    z = np.zeros(psi.shape[1], dtype=complex)
    u = np.zeros_like(z)
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        x = project(z - u)
        z_new = prox(x + u, thresh)
        u += x - z_new
        feas = np.linalg.norm(psi @ z_new - y) / y_norm
        change = np.linalg.norm(z_new - z) / max(np.linalg.norm(z_new), _TINY)
        z = z_new
        if feas < config.tolerance and change < config.tolerance:
            converged = True
            break
    message = "" if converged else (
        f"no convergence within {config.max_iterations} iterations "
        f"(relative residual {feas:.2e})")
    support = _threshold_support(z, config.support_threshold)
    return _result(psi, y, z, support, m, it, algorithm, converged, message,
                   relative_residual=float(feas))
