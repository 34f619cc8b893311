"""Run configuration: YAML documents parsed into validated dataclasses.

The config dialect is YAML (a single key-value tree per file). Required
keys for every run: ``algorithm``, ``model``, ``seed``, plus the
algorithm's own parameters (``n_particles`` and ``schedule`` for the
sequential samplers, ``epsilon`` for rejection, ``epsilon``/``n_iter``/
``proposal_sd`` for MCMC).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .samplers import AutoSchedule, ToleranceSchedule

ALGORITHMS = ("rejection", "pmc", "prc", "mcmc")
POPULATION_ALGORITHMS = ("rejection", "pmc", "prc")
SEQUENTIAL_ALGORITHMS = ("pmc", "prc")

_RUN_KEYS = {
    "algorithm", "model", "seed", "n_particles", "schedule", "epsilon",
    "workers", "budget", "out_dir", "kernel", "auto_schedule",
    "n_iter", "burn_in", "proposal_sd", "name",
}
_COMPARE_KEYS = {"model", "seed", "replicates", "out_dir", "workers", "budget", "algorithms"}


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    model: str
    seed: int
    n_particles: int | None = None
    schedule: tuple[float, ...] | None = None
    epsilon: float | None = None
    workers: int | str = 1
    budget: int | None = None
    out_dir: str | None = None
    kernel_mode: str = "diagonal"
    auto_schedule_quantile: float | None = None
    auto_schedule_generations: int | None = None
    n_iter: int | None = None
    burn_in: int = 0
    proposal_sd: float | list[float] | None = None
    name: str | None = None
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def label(self) -> str:
        return self.name or self.algorithm

    @property
    def final_epsilon(self) -> float:
        if self.algorithm in SEQUENTIAL_ALGORITHMS and self.auto_schedule_quantile is None:
            return self.schedule[-1]
        if self.algorithm in SEQUENTIAL_ALGORITHMS:
            raise ConfigError("auto-scheduled runs have no fixed final tolerance")
        return self.epsilon

    def build_schedule(self):
        if self.auto_schedule_quantile is not None:
            return AutoSchedule(
                first_epsilon=self.schedule[0],
                quantile=self.auto_schedule_quantile,
                n_generations=self.auto_schedule_generations,
            )
        return ToleranceSchedule(self.schedule)


@dataclass(frozen=True)
class CompareConfig:
    model: str
    seed: int
    replicates: int
    algorithms: tuple[RunConfig, ...]
    out_dir: str | None = None
    workers: int | str = 1
    budget: int | None = None
    raw: dict = field(default_factory=dict, compare=False)


def _require(doc: dict, key: str, context: str):
    if key not in doc or doc[key] is None:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return doc[key]


def _parse_seed(value, context: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{context}: seed must be an integer, got {value!r}")
    if not 0 <= value < 2**64:
        raise ConfigError(f"{context}: seed must be an unsigned 64-bit integer")
    return value


def _parse_positive_int(value, key: str, context: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{context}: {key} must be a positive integer, got {value!r}")
    return value


def _parse_schedule(value, context: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"{context}: schedule must be a non-empty list of tolerances")
    eps = []
    for entry in value:
        if not isinstance(entry, (int, float)) or isinstance(entry, bool):
            raise ConfigError(f"{context}: schedule entries must be numbers, got {entry!r}")
        eps.append(float(entry))
    for a, b in zip(eps, eps[1:]):
        if b >= a:
            raise ConfigError(
                f"{context}: schedule must be strictly decreasing, "
                f"but entry {a} is followed by {b}"
            )
    if any(e < 0 for e in eps):
        bad = [e for e in eps if e < 0]
        raise ConfigError(f"{context}: schedule entries must be nonnegative, got {bad}")
    return tuple(eps)


def parse_run_config(doc: dict, context: str = "run config") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(doc).__name__}")
    unknown = set(doc) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    algorithm = _require(doc, "algorithm", context)
    if algorithm not in ALGORITHMS:
        raise ConfigError(
            f"{context}: unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}"
        )
    model = _require(doc, "model", context)
    seed = _parse_seed(_require(doc, "seed", context), context)

    n_particles = None
    if algorithm in POPULATION_ALGORITHMS:
        n_particles = _parse_positive_int(
            _require(doc, "n_particles", context), "n_particles", context
        )
        if algorithm in SEQUENTIAL_ALGORITHMS and n_particles < 2:
            raise ConfigError(f"{context}: {algorithm} needs n_particles >= 2")

    schedule = None
    epsilon = None
    if algorithm in SEQUENTIAL_ALGORITHMS:
        schedule = _parse_schedule(_require(doc, "schedule", context), context)
    else:
        raw_eps = _require(doc, "epsilon", context)
        if not isinstance(raw_eps, (int, float)) or isinstance(raw_eps, bool) or raw_eps < 0:
            raise ConfigError(f"{context}: epsilon must be a nonnegative number")
        epsilon = float(raw_eps)

    kernel_mode = "diagonal"
    if "kernel" in doc and doc["kernel"] is not None:
        kernel_doc = doc["kernel"]
        if not isinstance(kernel_doc, dict) or set(kernel_doc) - {"mode"}:
            raise ConfigError(f"{context}: kernel section only accepts a 'mode' key")
        kernel_mode = kernel_doc.get("mode", "diagonal")
        if kernel_mode not in ("diagonal", "full"):
            raise ConfigError(f"{context}: kernel.mode must be 'diagonal' or 'full'")

    auto_quantile = None
    auto_generations = None
    if "auto_schedule" in doc and doc["auto_schedule"] is not None:
        if algorithm not in SEQUENTIAL_ALGORITHMS:
            raise ConfigError(f"{context}: auto_schedule only applies to pmc/prc")
        auto = doc["auto_schedule"]
        if not isinstance(auto, dict) or set(auto) - {"quantile", "generations"}:
            raise ConfigError(
                f"{context}: auto_schedule accepts only 'quantile' and 'generations'"
            )
        auto_quantile = auto.get("quantile")
        if not isinstance(auto_quantile, (int, float)) or not 0 < auto_quantile < 1:
            raise ConfigError(f"{context}: auto_schedule.quantile must lie in (0, 1)")
        auto_generations = _parse_positive_int(
            _require(auto, "generations", f"{context}: auto_schedule"),
            "generations",
            context,
        )
        if len(schedule) != 1:
            raise ConfigError(
                f"{context}: with auto_schedule, give schedule as the single "
                "starting tolerance [eps_1]"
            )

    n_iter = None
    proposal_sd = None
    burn_in = 0
    if algorithm == "mcmc":
        n_iter = _parse_positive_int(_require(doc, "n_iter", context), "n_iter", context)
        proposal_sd = _require(doc, "proposal_sd", context)
        if isinstance(proposal_sd, (int, float)) and not isinstance(proposal_sd, bool):
            proposal_sd = float(proposal_sd)
            ok = proposal_sd > 0
        elif isinstance(proposal_sd, list) and proposal_sd:
            ok = all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0
                for v in proposal_sd
            )
            proposal_sd = [float(v) for v in proposal_sd]
        else:
            ok = False
        if not ok:
            raise ConfigError(f"{context}: proposal_sd must be positive (scalar or list)")
        burn_in = doc.get("burn_in", 0)
        if not isinstance(burn_in, int) or isinstance(burn_in, bool) or burn_in < 0:
            raise ConfigError(f"{context}: burn_in must be a nonnegative integer")
        if burn_in >= n_iter:
            raise ConfigError(f"{context}: burn_in must be smaller than n_iter")

    budget = doc.get("budget")
    if budget is not None:
        budget = _parse_positive_int(budget, "budget", context)

    workers = doc.get("workers", 1)
    if workers is None:
        workers = 1
    if workers != "auto" and (not isinstance(workers, int) or isinstance(workers, bool) or workers < 1):
        raise ConfigError(f"{context}: workers must be a positive integer or 'auto'")

    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise ConfigError(f"{context}: name must be a string")

    return RunConfig(
        algorithm=algorithm,
        model=str(model),
        seed=seed,
        n_particles=n_particles,
        schedule=schedule,
        epsilon=epsilon,
        workers=workers,
        budget=budget,
        out_dir=doc.get("out_dir"),
        kernel_mode=kernel_mode,
        auto_schedule_quantile=auto_quantile,
        auto_schedule_generations=auto_generations,
        n_iter=n_iter,
        burn_in=burn_in,
        proposal_sd=proposal_sd,
        name=name,
        raw=dict(doc),
    )


def parse_compare_config(doc: dict) -> CompareConfig:
    context = "compare config"
    if not isinstance(doc, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(doc).__name__}")
    unknown = set(doc) - _COMPARE_KEYS
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    model = _require(doc, "model", context)
    seed = _parse_seed(_require(doc, "seed", context), context)
    replicates = _parse_positive_int(
        _require(doc, "replicates", context), "replicates", context
    )
    entries = _require(doc, "algorithms", context)
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{context}: algorithms must be a non-empty list")
    runs = []
    labels = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"{context}: algorithms[{i}] must be a mapping")
        entry = dict(entry)
        entry.setdefault("model", model)
        entry.setdefault("seed", seed)
        if "workers" in doc:
            entry.setdefault("workers", doc["workers"])
        if doc.get("budget") is not None:
            entry.setdefault("budget", doc["budget"])
        run = parse_run_config(entry, context=f"{context}: algorithms[{i}]")
        if run.model != model:
            raise ConfigError(
                f"{context}: algorithms[{i}] targets model {run.model!r}, "
                f"but the comparison is on {model!r}"
            )
        label = run.label
        if label in labels:
            label = f"{label}#{i}"
            run = parse_run_config({**entry, "name": label}, context=f"{context}: algorithms[{i}]")
        labels.add(label)
        runs.append(run)
    finals = {run.label: run.final_epsilon for run in runs}
    values = set(finals.values())
    if len(values) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in finals.items())
        raise ConfigError(f"{context}: final tolerances must match across algorithms ({detail})")
    budget = doc.get("budget")
    if budget is not None:
        budget = _parse_positive_int(budget, "budget", context)
    workers = doc.get("workers", 1)
    return CompareConfig(
        model=str(model),
        seed=seed,
        replicates=replicates,
        algorithms=tuple(runs),
        out_dir=doc.get("out_dir"),
        workers=workers,
        budget=budget,
        raw=dict(doc),
    )


def load_yaml(path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return doc


def load_run_config(path) -> RunConfig:
    return parse_run_config(load_yaml(path), context=str(path))


def load_compare_config(path) -> CompareConfig:
    return parse_compare_config(load_yaml(path))
