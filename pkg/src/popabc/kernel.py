"""Gaussian perturbation kernel with population-driven scale adaptation.

The kernel variance is set to twice the weighted empirical variance of the
current weighted population (componentwise by default, full covariance as
an opt-in). Perturbation and density evaluation share one KernelScale so
the proposal and the importance-weight denominator always agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePopulation
from .models import LOG_2PI

# weighted variances below this are treated as particle collapse
VARIANCE_FLOOR = 1e-12

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class KernelScale:
    """Perturbation variance: per-dimension ``tau2`` or a full covariance.

    Exactly one of ``tau2`` (diagonal mode) and ``cov`` (full mode) is set.
    Cholesky factors and log-normalizers are precomputed so perturbation and
    density evaluation stay cheap.
    """

    tau2: np.ndarray | None = None
    cov: np.ndarray | None = None
    _sigma: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)
    _chol: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)
    _log_norm: float = field(default=0.0, init=False, repr=False, compare=False)

    def __post_init__(self):
        if (self.tau2 is None) == (self.cov is None):
            raise ValueError("set exactly one of tau2 (diagonal) or cov (full)")
        if self.tau2 is not None:
            tau2 = np.atleast_1d(np.asarray(self.tau2, dtype=float))
            if tau2.ndim != 1 or not np.all(tau2 > 0):
                raise ValueError("tau2 must be a 1-d array of positive variances")
            object.__setattr__(self, "tau2", tau2)
            object.__setattr__(self, "_sigma", np.sqrt(tau2))
            object.__setattr__(
                self, "_log_norm", float(-0.5 * np.sum(LOG_2PI + np.log(tau2)))
            )
        else:
            cov = np.asarray(self.cov, dtype=float)
            if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
                raise ValueError("cov must be a square matrix")
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
                raise ValueError("cov must be symmetric")
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise ValueError("cov must be positive definite") from exc
            object.__setattr__(self, "cov", cov)
            object.__setattr__(self, "_chol", chol)
            log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
            object.__setattr__(
                self, "_log_norm", float(-0.5 * (cov.shape[0] * LOG_2PI + log_det))
            )

    @property
    def mode(self) -> str:
        return "diagonal" if self.tau2 is not None else "full"

    @property
    def dim(self) -> int:
        return self.tau2.size if self.tau2 is not None else self.cov.shape[0]


def _validated_weights(thetas: np.ndarray, weights: np.ndarray):
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size != thetas.shape[0]:
        raise ValueError("weights must be 1-d and match the number of particles")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    total = float(weights.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1, got {total}")
    if int(np.count_nonzero(weights)) < 2:
        raise DegeneratePopulation("fewer than 2 particles carry weight")
    return thetas, weights / total


def weighted_moments(thetas: np.ndarray, weights: np.ndarray):
    """Weighted mean and per-dimension variance of a normalized population.

    Plain normalized-weight estimators: ``mean_k = sum_i w_i theta_ik`` and
    ``var_k = sum_i w_i (theta_ik - mean_k)^2``, no small-sample correction.
    """
    thetas, weights = _validated_weights(thetas, weights)
    mean = weights @ thetas
    centered = thetas - mean
    var = weights @ (centered * centered)
    return mean, var


def weighted_covariance(thetas: np.ndarray, weights: np.ndarray):
    """Weighted mean and full covariance matrix (same estimator as weighted_moments)."""
    thetas, weights = _validated_weights(thetas, weights)
    mean = weights @ thetas
    centered = thetas - mean
    cov = (weights[:, None] * centered).T @ centered
    return mean, cov


def adapt_scale(thetas: np.ndarray, weights: np.ndarray, mode: str = "diagonal") -> KernelScale:
    """Kernel scale for the next generation: twice the weighted variance.

    Raises DegeneratePopulation when any dimension's weighted variance falls
    below the floor, which signals particle collapse rather than a usable
    spread estimate.
    """
    if mode == "diagonal":
        _, var = weighted_moments(thetas, weights)
        if np.any(var < VARIANCE_FLOOR):
            raise DegeneratePopulation(
                f"weighted variance below {VARIANCE_FLOOR} in at least one dimension"
            )
        return KernelScale(tau2=2.0 * var)
    if mode == "full":
        _, cov = weighted_covariance(thetas, weights)
        if np.any(np.diag(cov) < VARIANCE_FLOOR):
            raise DegeneratePopulation(
                f"weighted variance below {VARIANCE_FLOOR} in at least one dimension"
            )
        try:
            return KernelScale(cov=2.0 * cov)
        except ValueError as exc:
            raise DegeneratePopulation("adapted covariance not positive definite") from exc
    raise ValueError(f"unknown kernel mode {mode!r}")


def perturb(
    theta_star: np.ndarray,
    scale: KernelScale,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Gaussian move centered on theta_star with the given scale.

    ``size=None`` returns one vector; an integer returns a ``(size, d)`` block
    drawn from the same stream.
    """
    theta_star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    d = scale.dim
    if theta_star.shape != (d,):
        raise ValueError(f"theta_star has shape {theta_star.shape}, expected ({d},)")
    n = 1 if size is None else size
    noise = rng.standard_normal((n, d))
    if scale.mode == "diagonal":
        moved = theta_star + noise * scale._sigma
    else:
        moved = theta_star + noise @ scale._chol.T
    return moved[0] if size is None else moved


def kernel_logdensity(theta, center, scale: KernelScale) -> float:
    """Log-density of ``theta`` under a Gaussian centered at ``center``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = scale.dim
    if theta.shape != (d,) or center.shape != (d,):
        raise ValueError("theta/center dimensions do not match the kernel scale")
    diff = theta - center
    if scale.mode == "diagonal":
        q = float(np.sum(diff * diff / scale.tau2))
    else:
        z = np.linalg.solve(scale._chol, diff)
        q = float(np.dot(z, z))
    return scale._log_norm - 0.5 * q


def log_density_matrix(thetas: np.ndarray, centers: np.ndarray, scale: KernelScale) -> np.ndarray:
    """Matrix of kernel log-densities, entry (i, j) = logN(thetas[i]; centers[j], scale)."""
    thetas = np.asarray(thetas, dtype=float)
    centers = np.asarray(centers, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    if centers.ndim == 1:
        centers = centers[:, None]
    d = scale.dim
    if thetas.shape[1] != d or centers.shape[1] != d:
        raise ValueError("theta/center dimensions do not match the kernel scale")
    diff = thetas[:, None, :] - centers[None, :, :]
    if scale.mode == "diagonal":
        q = np.sum(diff * diff / scale.tau2, axis=2)
    else:
        flat = diff.reshape(-1, d)
        z = np.linalg.solve(scale._chol, flat.T)
        q = np.sum(z * z, axis=0).reshape(diff.shape[:2])
    return scale._log_norm - 0.5 * q
