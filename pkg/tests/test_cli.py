import json

import numpy as np
import pytest
import yaml

from popabc import persist
from popabc.cli import main
from popabc.config import load_run_config, parse_compare_config, parse_run_config
from popabc.errors import ConfigError


def write_config(tmp_path, doc, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def pmc_doc(**overrides):
    doc = {
        "algorithm": "pmc",
        "model": "mixture-toy",
        "seed": 42,
        "n_particles": 120,
        "schedule": [3.0, 1.5],
    }
    doc.update(overrides)
    return doc


# ---------------------------------------------------------------- validation


def test_validate_ok(tmp_path, capsys):
    path = write_config(tmp_path, pmc_doc())
    assert main(["validate", "--config", path]) == 0
    assert "config ok" in capsys.readouterr().out


def test_validate_nondecreasing_schedule_names_entries(tmp_path, capsys):
    path = write_config(tmp_path, pmc_doc(schedule=[1.0, 2.0]))
    assert main(["validate", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "1.0" in err and "2.0" in err


def test_validate_unknown_algorithm(tmp_path):
    path = write_config(tmp_path, pmc_doc(algorithm="smc"))
    assert main(["validate", "--config", path]) == 2


def test_validate_missing_required_key(tmp_path, capsys):
    doc = pmc_doc()
    del doc["n_particles"]
    path = write_config(tmp_path, doc)
    assert main(["validate", "--config", path]) == 2
    assert "n_particles" in capsys.readouterr().err


def test_validate_unknown_key(tmp_path, capsys):
    path = write_config(tmp_path, pmc_doc(particles=10))
    assert main(["validate", "--config", path]) == 2
    assert "particles" in capsys.readouterr().err


def test_validate_missing_file():
    assert main(["validate", "--config", "/nonexistent/cfg.yaml"]) == 2


def test_parse_rejects_bad_seed():
    with pytest.raises(ConfigError):
        parse_run_config(pmc_doc(seed=-1))
    with pytest.raises(ConfigError):
        parse_run_config(pmc_doc(seed=2**64))


def test_parse_mcmc_requires_chain_keys():
    doc = {"algorithm": "mcmc", "model": "mixture-toy", "seed": 1, "epsilon": 0.5}
    with pytest.raises(ConfigError, match="n_iter"):
        parse_run_config(doc)


def test_parse_auto_schedule():
    cfg = parse_run_config(
        pmc_doc(schedule=[2.0], auto_schedule={"quantile": 0.5, "generations": 4})
    )
    schedule = cfg.build_schedule()
    assert schedule.quantile == 0.5
    assert schedule.n_generations == 4
    with pytest.raises(ConfigError):
        parse_run_config(
            pmc_doc(schedule=[2.0, 1.0], auto_schedule={"quantile": 0.5, "generations": 4})
        )


def test_load_run_config_round_trip(tmp_path):
    path = write_config(tmp_path, pmc_doc(workers="auto", budget=10_000))
    cfg = load_run_config(path)
    assert cfg.workers == "auto"
    assert cfg.budget == 10_000
    assert cfg.schedule == (3.0, 1.5)


# ---------------------------------------------------------------- run


def test_run_pmc_happy_path(tmp_path, capsys):
    out_dir = tmp_path / "out"
    path = write_config(tmp_path, pmc_doc(out_dir=str(out_dir)))
    assert main(["run", "--config", path]) == 0
    assert (out_dir / "gen_001.csv").exists()
    assert (out_dir / "gen_002.csv").exists()
    report = persist.read_report(out_dir / "report.json")
    assert report["status"] == "ok"
    assert report["config"]["seed"] == 42
    assert len(report["generations"]) == 2
    assert report["totals"]["sims_used"] == sum(
        g["sims_used"] for g in report["generations"]
    )
    assert report["oracle_comparison"] is not None
    # populations on disk agree with the report
    for gen in report["generations"]:
        t, thetas, weights, dists = persist.read_population_csv(
            out_dir / persist.population_filename(gen["t"])
        )
        assert t == gen["t"]
        assert abs(weights.sum() - 1.0) < 1e-9
        assert np.all(dists <= gen["epsilon"])
        recomputed_mean = float(weights @ thetas[:, 0])
        assert recomputed_mean == pytest.approx(gen["weighted_mean"][0], abs=1e-12)
    out = capsys.readouterr().out
    assert "total sims" in out


def test_run_records_proposal_scales(tmp_path):
    out_dir = tmp_path / "out"
    path = write_config(tmp_path, pmc_doc(out_dir=str(out_dir)))
    main(["run", "--config", path])
    report = persist.read_report(out_dir / "report.json")
    assert report["generations"][0]["scale"] is None
    assert report["generations"][1]["scale"]["mode"] == "diagonal"
    assert len(report["generations"][1]["scale"]["tau2"]) == 1


def test_run_unreachable_tolerance_flags_partial(tmp_path):
    out_dir = tmp_path / "out"
    path = write_config(
        tmp_path,
        pmc_doc(schedule=[10.0, 0.0], n_particles=60, budget=600, out_dir=str(out_dir)),
    )
    assert main(["run", "--config", path]) == 3
    assert (out_dir / "gen_001.csv").exists()
    assert not (out_dir / "gen_002.csv").exists()
    report = persist.read_report(out_dir / "report.json")
    assert report["status"] == "budget-exhausted"
    assert report["error"]
    assert len(report["generations"]) == 1


def test_run_unknown_model(tmp_path, capsys):
    path = write_config(tmp_path, pmc_doc(model="unknown-model"))
    assert main(["run", "--config", path]) == 2
    assert "unknown-model" in capsys.readouterr().err


def test_run_rejection(tmp_path):
    out_dir = tmp_path / "out"
    doc = {
        "algorithm": "rejection",
        "model": "mixture-toy",
        "seed": 3,
        "n_particles": 100,
        "epsilon": 1.0,
        "out_dir": str(out_dir),
    }
    path = write_config(tmp_path, doc)
    assert main(["run", "--config", path]) == 0
    report = persist.read_report(out_dir / "report.json")
    assert len(report["generations"]) == 1
    assert report["generations"][0]["epsilon"] == 1.0


def test_run_mcmc(tmp_path):
    out_dir = tmp_path / "out"
    doc = {
        "algorithm": "mcmc",
        "model": "mixture-toy",
        "seed": 4,
        "epsilon": 0.5,
        "n_iter": 3000,
        "burn_in": 500,
        "proposal_sd": 1.0,
        "out_dir": str(out_dir),
    }
    path = write_config(tmp_path, doc)
    assert main(["run", "--config", path]) == 0
    report = persist.read_report(out_dir / "report.json")
    assert report["mcmc"]["n_iter"] == 3000
    assert report["mcmc"]["burn_in"] == 500
    t, thetas, weights, dists = persist.read_population_csv(out_dir / "gen_001.csv")
    assert thetas.shape[0] == 2500
    assert np.all(dists <= 0.5)


def test_run_coalescent_small(tmp_path):
    out_dir = tmp_path / "out"
    doc = {
        "algorithm": "rejection",
        "model": "coalescent-msat",
        "seed": 5,
        "n_particles": 40,
        "epsilon": 2.5,
        "out_dir": str(out_dir),
    }
    path = write_config(tmp_path, doc)
    assert main(["run", "--config", path]) == 0
    report = persist.read_report(out_dir / "report.json")
    assert report["oracle_comparison"] is None


# ---------------------------------------------------------------- compare


def compare_doc(out_dir, replicates=2):
    return {
        "model": "mixture-toy",
        "seed": 900,
        "replicates": replicates,
        "out_dir": str(out_dir),
        "algorithms": [
            {"algorithm": "pmc", "n_particles": 150, "schedule": [2.0, 0.5]},
            {"algorithm": "prc", "n_particles": 150, "schedule": [2.0, 0.5]},
            {
                "algorithm": "mcmc",
                "epsilon": 0.5,
                "n_iter": 4000,
                "burn_in": 500,
                "proposal_sd": 1.0,
            },
        ],
    }


def test_compare_happy_path(tmp_path, capsys):
    out_dir = tmp_path / "cmp"
    path = write_config(tmp_path, compare_doc(out_dir))
    assert main(["compare", "--config", path]) == 0
    report = persist.read_report(out_dir / "comparison.json")
    assert set(report["algorithms"]) == {"pmc", "prc", "mcmc"}
    for block in report["algorithms"].values():
        assert len(block["replicates"]) == 2
        assert block["total_sims"] == sum(r["sims_used"] for r in block["replicates"])
        for key in ("mean_abs_err", "var_rel_err", "ks_statistic"):
            assert block["means"][key] == pytest.approx(
                float(np.mean([r[key] for r in block["replicates"]])), rel=1e-12
            )
    assert report["totals"]["sims_used"] == sum(
        b["total_sims"] for b in report["algorithms"].values()
    )
    assert report["winner"] is not None
    assert "winner by metric" in capsys.readouterr().out


def test_compare_same_algorithm_twice_same_seed_identical(tmp_path):
    out_dir = tmp_path / "cmp"
    doc = {
        "model": "mixture-toy",
        "seed": 901,
        "replicates": 1,
        "out_dir": str(out_dir),
        "algorithms": [
            {"algorithm": "pmc", "n_particles": 100, "schedule": [2.0, 0.8]},
            {"algorithm": "pmc", "n_particles": 100, "schedule": [2.0, 0.8]},
        ],
    }
    path = write_config(tmp_path, doc)
    assert main(["compare", "--config", path]) == 0
    report = persist.read_report(out_dir / "comparison.json")
    labels = list(report["algorithms"])
    assert len(labels) == 2
    first = report["algorithms"][labels[0]]["replicates"][0]
    second = report["algorithms"][labels[1]]["replicates"][0]
    assert first == second


def test_compare_requires_matched_final_tolerance(tmp_path, capsys):
    doc = compare_doc(tmp_path / "cmp")
    doc["algorithms"][2]["epsilon"] = 0.4
    path = write_config(tmp_path, doc)
    assert main(["compare", "--config", path]) == 2
    assert "final tolerances" in capsys.readouterr().err


def test_compare_requires_oracle_model(tmp_path, capsys):
    doc = {
        "model": "coalescent-msat",
        "seed": 1,
        "replicates": 1,
        "algorithms": [
            {"algorithm": "rejection", "n_particles": 10, "epsilon": 3.0},
        ],
    }
    path = write_config(tmp_path, doc)
    assert main(["compare", "--config", path]) == 2
    assert "reference posterior" in capsys.readouterr().err


def test_compare_validate_subcommand(tmp_path):
    path = write_config(tmp_path, compare_doc(tmp_path / "cmp"))
    assert main(["validate", "--config", path]) == 0


def test_parse_compare_inherits_seed_and_model():
    cfg = parse_compare_config(
        {
            "model": "mixture-toy",
            "seed": 5,
            "replicates": 2,
            "algorithms": [
                {"algorithm": "rejection", "n_particles": 10, "epsilon": 0.5}
            ],
        }
    )
    assert cfg.algorithms[0].model == "mixture-toy"
    assert cfg.algorithms[0].seed == 5


def test_bundled_configs_validate():
    from pathlib import Path

    configs = sorted(Path(__file__).resolve().parent.parent.glob("configs/*.yaml"))
    assert configs, "bundled configs missing"
    for cfg_path in configs:
        assert main(["validate", "--config", str(cfg_path)]) == 0


def test_report_is_valid_json_document(tmp_path):
    out_dir = tmp_path / "out"
    path = write_config(tmp_path, pmc_doc(out_dir=str(out_dir)))
    main(["run", "--config", path])
    parsed = json.loads((out_dir / "report.json").read_text())
    assert parsed["algorithm"] == "pmc"
