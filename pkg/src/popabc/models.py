"""Generative model contract: priors, simulators and summary-space distances.

A model is a prior over parameters, a stochastic simulator mapping a
parameter vector to a vector of summary statistics, and the observed
summaries to compare against. Samplers only ever see the distance between
simulated and observed summaries, never raw data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

Simulator = Callable[[np.ndarray, np.random.Generator], np.ndarray]

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class UniformBoxPrior:
    """Independent uniform prior on an axis-aligned box.

    Parameters
    ----------
    lows, highs : array_like, shape (d,)
        Per-dimension bounds, ``lows[k] < highs[k]``.
    """

    lows: np.ndarray
    highs: np.ndarray
    _log_volume: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lows = np.atleast_1d(np.asarray(self.lows, dtype=float))
        highs = np.atleast_1d(np.asarray(self.highs, dtype=float))
        if lows.ndim != 1 or lows.shape != highs.shape:
            raise ValueError("lows and highs must be 1-d arrays of equal length")
        if not np.all(np.isfinite(lows)) or not np.all(np.isfinite(highs)):
            raise ValueError("prior bounds must be finite")
        if not np.all(lows < highs):
            raise ValueError("each dimension needs low < high")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        object.__setattr__(self, "_log_volume", float(np.sum(np.log(highs - lows))))

    @property
    def dim(self) -> int:
        return self.lows.size

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        if size is None:
            return rng.uniform(self.lows, self.highs)
        return rng.uniform(self.lows, self.highs, size=(size, self.dim))

    def logpdf(self, theta) -> float:
        theta = _check_theta(theta, self.dim)
        if np.all(theta >= self.lows) and np.all(theta <= self.highs):
            return -self._log_volume
        return -np.inf

    def logpdf_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = _check_thetas(thetas, self.dim)
        inside = np.all((thetas >= self.lows) & (thetas <= self.highs), axis=1)
        return np.where(inside, -self._log_volume, -np.inf)

    def in_support(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lows) and np.all(theta <= self.highs))


@dataclass(frozen=True)
class IndependentNormalPrior:
    """Independent Gaussian prior, one (mean, sd) pair per dimension."""

    means: np.ndarray
    sds: np.ndarray
    _log_norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        means = np.atleast_1d(np.asarray(self.means, dtype=float))
        sds = np.atleast_1d(np.asarray(self.sds, dtype=float))
        if means.ndim != 1 or means.shape != sds.shape:
            raise ValueError("means and sds must be 1-d arrays of equal length")
        if not np.all(sds > 0):
            raise ValueError("all sds must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)
        object.__setattr__(
            self, "_log_norm", float(-0.5 * np.sum(LOG_2PI + 2.0 * np.log(sds)))
        )

    @property
    def dim(self) -> int:
        return self.means.size

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        if size is None:
            return rng.normal(self.means, self.sds)
        return rng.normal(self.means, self.sds, size=(size, self.dim))

    def logpdf(self, theta) -> float:
        theta = _check_theta(theta, self.dim)
        z = (theta - self.means) / self.sds
        return self._log_norm - 0.5 * float(np.dot(z, z))

    def logpdf_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = _check_thetas(thetas, self.dim)
        z = (thetas - self.means) / self.sds
        return self._log_norm - 0.5 * np.sum(z * z, axis=1)

    def in_support(self, theta) -> bool:
        return True


PriorSpec = Union[UniformBoxPrior, IndependentNormalPrior]


def _check_theta(theta, dim: int) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (dim,):
        raise ValueError(f"parameter vector has shape {theta.shape}, expected ({dim},)")
    return theta


def _check_thetas(thetas, dim: int) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    if thetas.ndim != 2 or thetas.shape[1] != dim:
        raise ValueError(f"parameter array has shape {thetas.shape}, expected (n, {dim})")
    return thetas


def distance(a, b, metric: str = "euclidean", scale: np.ndarray | None = None) -> float:
    """Distance between two summary vectors.

    Euclidean by default; ``scale`` divides each coordinate first (used to
    put summaries of different magnitudes on a common footing).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"summary length mismatch: {a.shape} vs {b.shape}")
    if metric != "euclidean":
        raise ValueError(f"unknown metric {metric!r}")
    diff = a - b
    if scale is not None:
        diff = diff / scale
    return float(np.sqrt(np.dot(diff, diff)))


@dataclass(frozen=True)
class ModelSpec:
    """Bundle of prior, simulator and observed summaries for one problem.

    The simulator maps ``(theta, rng) -> summaries`` and must return a
    vector of the same length as ``observed`` on every call. The optional
    ``summary_scale`` divides each summary coordinate inside the distance.
    """

    name: str
    prior: PriorSpec
    simulator: Simulator
    observed: np.ndarray
    summary_scale: np.ndarray | None = None
    metric: str = "euclidean"

    def __post_init__(self):
        observed = np.atleast_1d(np.asarray(self.observed, dtype=float))
        if not np.all(np.isfinite(observed)):
            raise ValueError("observed summaries must be finite")
        object.__setattr__(self, "observed", observed)
        if self.summary_scale is not None:
            scale = np.atleast_1d(np.asarray(self.summary_scale, dtype=float))
            if scale.shape != observed.shape:
                raise ValueError("summary_scale must match observed length")
            if not np.all(scale > 0):
                raise ValueError("summary_scale entries must be positive")
            object.__setattr__(self, "summary_scale", scale)

    @property
    def dim(self) -> int:
        return self.prior.dim

    @property
    def n_summaries(self) -> int:
        return self.observed.size

    def simulate_distance(self, theta: np.ndarray, rng: np.random.Generator) -> float:
        """Run the simulator once and return the distance to the observed summaries."""
        summaries = np.atleast_1d(np.asarray(self.simulator(theta, rng), dtype=float))
        if summaries.shape != self.observed.shape:
            raise ValueError(
                f"simulator returned {summaries.shape[0]} summaries, "
                f"expected {self.observed.size}"
            )
        return distance(summaries, self.observed, self.metric, self.summary_scale)
