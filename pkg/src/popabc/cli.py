"""Command-line front end: run one sampler, compare several, validate configs.

Subcommands:
    popabc run --config run.yaml
    popabc compare --config compare.yaml
    popabc validate --config either.yaml

Exit codes: 0 success, 2 configuration/validation error, 3 budget exhausted
or degenerate population (partial outputs are kept and flagged in the
report).
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import benchmarks, engine, persist
from .config import (
    CompareConfig,
    RunConfig,
    load_compare_config,
    load_run_config,
    load_yaml,
    parse_compare_config,
    parse_run_config,
)
from .diagnostics import compare_to_oracle, generation_stats
from .errors import BudgetExhausted, ConfigError, DegeneratePopulation
from .kernel import KernelScale
from .samplers import Population, abc_mcmc, abc_pmc, abc_prc, abc_rejection


def _get_model(name: str):
    try:
        return benchmarks.get_model(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None


def _scale_payload(scale: KernelScale | None):
    if scale is None:
        return None
    if scale.mode == "diagonal":
        return {"mode": "diagonal", "tau2": [float(v) for v in scale.tau2]}
    return {"mode": "full", "cov": [[float(v) for v in row] for row in scale.cov]}


def _mcmc_population(cfg: RunConfig, model, seed: int) -> tuple[Population, dict]:
    result = abc_mcmc(
        model,
        cfg.epsilon,
        cfg.n_iter,
        cfg.proposal_sd,
        seed=seed,
        budget=cfg.budget,
    )
    kept = result.thetas[cfg.burn_in :]
    dists = result.dists[cfg.burn_in :]
    n = kept.shape[0]
    pop = Population(
        t=1,
        epsilon=cfg.epsilon,
        thetas=kept,
        weights=np.full(n, 1.0 / n),
        dists=dists,
        scale=None,
        sims_used=result.sims_used,
    )
    extra = {
        "n_iter": result.n_iter,
        "burn_in": cfg.burn_in,
        "acceptance_rate": result.acceptance_rate,
        "init_sims": result.init_sims,
    }
    return pop, extra


def _dispatch(cfg: RunConfig, model, seed: int, on_generation):
    """Run the configured algorithm, streaming populations to the callback."""
    if cfg.algorithm == "rejection":
        on_generation(
            abc_rejection(
                model, cfg.epsilon, cfg.n_particles,
                seed=seed, budget=cfg.budget, workers=cfg.workers,
            )
        )
        return None
    if cfg.algorithm == "mcmc":
        pop, extra = _mcmc_population(cfg, model, seed)
        on_generation(pop)
        return extra
    sampler = abc_pmc if cfg.algorithm == "pmc" else abc_prc
    sampler(
        model, cfg.build_schedule(), cfg.n_particles,
        seed=seed, budget=cfg.budget, workers=cfg.workers,
        kernel_mode=cfg.kernel_mode, on_generation=on_generation,
    )
    return None


def execute_run(cfg: RunConfig, seed: int | None = None, persist_to: Path | None = None):
    """Run one configured sampler; returns (exit_code, report, populations)."""
    model = _get_model(cfg.model)
    seed = cfg.seed if seed is None else seed
    out_dir = persist_to
    if out_dir is None and cfg.out_dir is not None:
        out_dir = Path(cfg.out_dir)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    populations: list[Population] = []
    mcmc_extra = None

    def on_generation(pop: Population):
        populations.append(pop)
        if out_dir is not None:
            persist.write_population(out_dir / persist.population_filename(pop.t), pop)
        print(
            f"[{cfg.algorithm} t={pop.t}] eps={pop.epsilon:g} n={pop.n} "
            f"sims={pop.sims_used} acc={pop.n / pop.sims_used:.3g}",
            file=sys.stderr,
        )

    status, error = "ok", None
    started = time.perf_counter()
    try:
        mcmc_extra = _dispatch(cfg, model, seed, on_generation)
    except BudgetExhausted as exc:
        status, error = "budget-exhausted", str(exc)
    except DegeneratePopulation as exc:
        status, error = "degenerate-population", str(exc)
    wall = time.perf_counter() - started

    oracle = benchmarks.get_oracle(cfg.model)
    oracle_block = None
    if oracle is not None and status == "ok" and populations:
        final = populations[-1]
        oracle_block = asdict(compare_to_oracle(final.thetas, final.weights, oracle))

    generations = []
    for pop in populations:
        block = asdict(generation_stats(pop))
        block["scale"] = _scale_payload(pop.scale)
        generations.append(block)

    report = {
        "config": cfg.raw,
        "algorithm": cfg.algorithm,
        "model": cfg.model,
        "seed": seed,
        "status": status,
        "error": error,
        "generations": generations,
        "mcmc": mcmc_extra,
        "totals": {
            "sims_used": int(sum(p.sims_used for p in populations)),
            "wall_time_s": wall,
        },
        "oracle_comparison": oracle_block,
    }
    if out_dir is not None:
        persist.write_report(out_dir / "report.json", report)
    return (0 if status == "ok" else 3), report, populations


def execute_compare(cfg: CompareConfig):
    """Replicated head-to-head comparison against the model's oracle."""
    oracle = benchmarks.get_oracle(cfg.model)
    if oracle is None:
        raise ConfigError(
            f"compare needs a model with an analytic reference posterior; "
            f"{cfg.model!r} has none"
        )
    started = time.perf_counter()
    model = _get_model(cfg.model)
    algorithms = {}
    status, error = "ok", None
    try:
        for run_cfg in cfg.algorithms:
            rows = []
            for r in range(cfg.replicates):
                seed_r = (cfg.seed + r) % 2**64
                populations: list[Population] = []
                _dispatch(run_cfg, model, seed_r, populations.append)
                final = populations[-1]
                total_sims = int(sum(p.sims_used for p in populations))
                metrics = compare_to_oracle(final.thetas, final.weights, oracle)
                w_mean = float(final.weights @ final.thetas[:, 0])
                w_var = float(final.weights @ (final.thetas[:, 0] - w_mean) ** 2)
                rows.append(
                    {
                        "replicate": r,
                        "seed": seed_r,
                        "sims_used": total_sims,
                        "mean_abs_err": metrics.mean_abs_err,
                        "var_rel_err": metrics.var_rel_err,
                        "ks_statistic": metrics.ks_statistic,
                        "weighted_mean": w_mean,
                        "weighted_var": w_var,
                    }
                )
            algorithms[run_cfg.label] = {
                "algorithm": run_cfg.algorithm,
                "replicates": rows,
                "means": {
                    key: float(np.mean([row[key] for row in rows]))
                    for key in ("mean_abs_err", "var_rel_err", "ks_statistic")
                },
                "total_sims": int(sum(row["sims_used"] for row in rows)),
            }
    except BudgetExhausted as exc:
        status, error = "budget-exhausted", str(exc)
    except DegeneratePopulation as exc:
        status, error = "degenerate-population", str(exc)

    winner = {}
    if status == "ok":
        for key in ("mean_abs_err", "var_rel_err", "ks_statistic"):
            winner[key] = min(algorithms, key=lambda a: algorithms[a]["means"][key])
        winner["sims_used"] = min(algorithms, key=lambda a: algorithms[a]["total_sims"])

    report = {
        "config": cfg.raw,
        "model": cfg.model,
        "master_seed": cfg.seed,
        "replicates": cfg.replicates,
        "final_epsilon": cfg.algorithms[0].final_epsilon,
        "status": status,
        "error": error,
        "algorithms": algorithms,
        "winner": winner or None,
        "totals": {
            "sims_used": int(sum(a["total_sims"] for a in algorithms.values())),
            "wall_time_s": time.perf_counter() - started,
        },
    }
    if cfg.out_dir is not None:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        persist.write_report(out_dir / "comparison.json", report)
    return (0 if status == "ok" else 3), report


def _print_run_summary(report: dict):
    print(f"algorithm: {report['algorithm']}  model: {report['model']}  status: {report['status']}")
    for gen in report["generations"]:
        mean = ", ".join(f"{v:.4g}" for v in gen["weighted_mean"])
        var = ", ".join(f"{v:.4g}" for v in gen["weighted_var"])
        print(
            f"  t={gen['t']} eps={gen['epsilon']:g} ess={gen['ess']:.1f} "
            f"acc={gen['acceptance_rate']:.3g} sims={gen['sims_used']} "
            f"mean=[{mean}] var=[{var}]"
        )
    print(f"total sims: {report['totals']['sims_used']}")
    if report.get("oracle_comparison"):
        oc = report["oracle_comparison"]
        print(
            f"vs oracle: |mean err|={oc['mean_abs_err']:.4g} "
            f"var rel err={oc['var_rel_err']:.4g} KS={oc['ks_statistic']:.4g}"
        )


def _print_compare_summary(report: dict):
    print(f"model: {report['model']}  replicates: {report['replicates']}  status: {report['status']}")
    header = f"{'algorithm':<14}{'|mean err|':>12}{'var rel err':>13}{'KS':>10}{'sims':>12}"
    print(header)
    for label, block in report["algorithms"].items():
        m = block["means"]
        print(
            f"{label:<14}{m['mean_abs_err']:>12.4g}{m['var_rel_err']:>13.4g}"
            f"{m['ks_statistic']:>10.4g}{block['total_sims']:>12}"
        )
    if report.get("winner"):
        wins = ", ".join(f"{k}: {v}" for k, v in report["winner"].items())
        print(f"winner by metric -> {wins}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="popabc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML config file")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            cfg = load_run_config(args.config)
            code, report, _ = execute_run(cfg)
            _print_run_summary(report)
            return code
        if args.command == "compare":
            cfg = load_compare_config(args.config)
            code, report = execute_compare(cfg)
            _print_compare_summary(report)
            return code
        # validate: accept either config flavor
        doc = load_yaml(args.config)
        if "algorithms" in doc:
            parse_compare_config(doc)
        else:
            parse_run_config(doc, context=str(args.config))
        print("config ok")
        return 0
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BudgetExhausted, DegeneratePopulation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
