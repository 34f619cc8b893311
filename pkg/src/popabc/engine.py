"""Deterministic parallel particle propagation.

Every simulation attempt draws from its own RNG stream, derived from
(master seed, generation index, attempt counter) via the counter of a
Philox generator. Attempts are dispatched in waves whose sizes depend only
on accept/attempt counts so far, never on the worker count, and acceptances
are taken in attempt-counter order. Together this makes every run
bit-identical for a fixed seed whether it executes on 1 worker or 8.

Budget accounting is exact: a wave is either fully simulated or not started,
and ``sims_used`` counts every simulator invocation including the tail of
the final wave that overshoots the requested number of acceptances.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from . import kernel
from .errors import BudgetExhausted, ConfigError
from .models import ModelSpec

# chain namespace: generation indices start at 1, so t=0 is reserved for
# sequential (non-generation) consumers such as the MCMC chain
CHAIN_STREAM_T = 0


def attempt_stream(seed: int, t: int, counter: int) -> Generator:
    """Independent RNG stream for one attempt, pure in (seed, t, counter).

    The 256-bit Philox counter is laid out as (0, 0, t, counter), leaving
    2**128 draws per stream before any two streams could touch.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return Generator(Philox(key=int(seed), counter=(int(counter) << 192) | (int(t) << 128)))


class StreamFactory:
    """Reusable source of attempt streams for one seed.

    ``stream(t, counter)`` yields draws bit-identical to
    ``attempt_stream(seed, t, counter)`` but resets one Philox state in
    place instead of constructing fresh objects, which matters in the
    per-attempt hot loop.
    """

    def __init__(self, seed: int):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._bg = Philox(key=int(seed))
        self._gen = Generator(self._bg)
        self._state = self._bg.state
        self._counter = self._state["state"]["counter"]

    def stream(self, t: int, counter: int) -> Generator:
        self._counter[0] = 0
        self._counter[1] = 0
        self._counter[2] = t
        self._counter[3] = counter
        st = self._state
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self._gen


def resolve_workers(requested) -> int:
    """Worker count from config, with the ABC_WORKERS environment override."""
    env = os.environ.get("ABC_WORKERS")
    if env is not None and env != "":
        requested = env
    if requested is None or requested == "auto":
        return os.cpu_count() or 1
    try:
        workers = int(requested)
    except (TypeError, ValueError):
        raise ConfigError(f"workers must be an integer or 'auto', got {requested!r}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    return workers


class WorkerPool:
    """Maps attempt chunks over an optional process pool.

    Chunking only affects scheduling; results are reassembled in submission
    order, so the pool size never changes what a run produces.
    """

    def __init__(self, workers: int | str | None = 1):
        self.workers = resolve_workers(workers)
        self._executor = (
            ProcessPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        )

    def map_chunks(self, fn, arg_list):
        if self._executor is None:
            return [fn(args) for args in arg_list]
        return list(self._executor.map(fn, arg_list))

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


@dataclass(frozen=True)
class PropagationResult:
    """Raw output of one generation: accepted draws before weighting."""

    thetas: np.ndarray  # (n, d)
    dists: np.ndarray  # (n,)
    ancestors: np.ndarray | None  # (n,) indices into the previous generation
    sims_used: int


def pick_index(cum_weights: np.ndarray, u: float) -> int:
    """Inverse-CDF lookup: smallest j with cum_weights[j] > u."""
    j = int(np.searchsorted(cum_weights, u, side="right"))
    return min(j, cum_weights.size - 1)


def _run_attempt_chunk(args):
    """Evaluate attempts [lo, hi): one simulator call each, support-checked first.

    For perturbation generations an attempt redraws both the ancestor index
    and the Gaussian move until the proposal lands inside the prior support,
    so zero-prior parameters never reach the simulator and each attempt costs
    exactly one simulation.
    """
    model, epsilon, seed, t, lo, hi, prev_thetas, prev_cumw, scale = args
    m = hi - lo
    d = model.dim
    thetas = np.empty((m, d))
    dists = np.empty(m)
    ancestors = np.full(m, -1, dtype=np.int64)
    accept = np.zeros(m, dtype=bool)
    prior = model.prior
    factory = StreamFactory(seed)
    for i in range(m):
        rng = factory.stream(t, lo + i)
        if prev_thetas is None:
            theta = prior.sample(rng)
        else:
            while True:
                j = pick_index(prev_cumw, rng.random())
                theta = kernel.perturb(prev_thetas[j], scale, rng)
                if prior.in_support(theta):
                    break
            ancestors[i] = j
        dist = model.simulate_distance(theta, rng)
        thetas[i] = theta
        dists[i] = dist
        accept[i] = dist <= epsilon
    return lo, thetas, dists, ancestors, accept


def _wave_size(n: int, accepted: int, attempted: int) -> int:
    """Next wave size from deterministic progress counts only.

    The first wave equals n, so an accept-everything tolerance costs exactly
    n simulations; later waves target the remaining need at the observed
    acceptance rate with a little headroom.
    """
    if attempted == 0:
        return n
    need = n - accepted
    rate = max(accepted, 1) / attempted
    planned = int(math.ceil(1.15 * need / rate))
    return min(max(planned, 64), max(4 * n, 20_000))


def _split_chunks(start: int, size: int, workers: int):
    n_chunks = 1 if workers <= 1 else min(workers * 4, max(1, size // 256), size)
    bounds = np.linspace(start, start + size, n_chunks + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def _collect(
    model: ModelSpec,
    epsilon: float,
    t: int,
    n: int,
    seed: int,
    budget,
    pool: WorkerPool,
    prev_thetas=None,
    prev_weights=None,
    scale=None,
) -> PropagationResult:
    limit = math.inf if budget is None else int(budget)
    prev_cumw = None if prev_weights is None else np.cumsum(prev_weights)
    kept_thetas, kept_dists, kept_anc = [], [], []
    accepted = 0
    attempted = 0
    counter = 0
    while accepted < n:
        remaining = limit - attempted
        if remaining <= 0:
            raise BudgetExhausted(n, accepted, attempted)
        wave = _wave_size(n, accepted, attempted)
        if remaining < wave:
            wave = int(remaining)
        chunk_args = [
            (model, epsilon, seed, t, lo, hi, prev_thetas, prev_cumw, scale)
            for lo, hi in _split_chunks(counter, wave, pool.workers)
        ]
        for _, thetas, dists, ancestors, accept in pool.map_chunks(
            _run_attempt_chunk, chunk_args
        ):
            if accepted < n and np.any(accept):
                kept_thetas.append(thetas[accept])
                kept_dists.append(dists[accept])
                kept_anc.append(ancestors[accept])
                accepted += int(np.count_nonzero(accept))
        attempted += wave
        counter += wave
    thetas = np.concatenate(kept_thetas)[:n]
    dists = np.concatenate(kept_dists)[:n]
    ancestors = np.concatenate(kept_anc)[:n] if prev_thetas is not None else None
    return PropagationResult(thetas, dists, ancestors, attempted)


def initial_generation(
    model: ModelSpec,
    epsilon: float,
    n: int,
    *,
    seed: int,
    budget=None,
    pool: WorkerPool,
) -> PropagationResult:
    """First generation: accept prior draws whose distance is within epsilon."""
    return _collect(model, epsilon, 1, n, seed, budget, pool)


def propagate_generation(
    model: ModelSpec,
    epsilon: float,
    t: int,
    prev_thetas: np.ndarray,
    prev_weights: np.ndarray,
    scale: kernel.KernelScale,
    n: int,
    *,
    seed: int,
    budget=None,
    pool: WorkerPool,
) -> PropagationResult:
    """Generation t >= 2: resample, perturb, accept within epsilon.

    The i-th accepted particle is the i-th successful attempt in
    attempt-counter order, independent of scheduling.
    """
    if t < 2:
        raise ValueError("propagate_generation is for generations t >= 2")
    return _collect(
        model, epsilon, t, n, seed, budget, pool,
        prev_thetas=prev_thetas, prev_weights=prev_weights, scale=scale,
    )
