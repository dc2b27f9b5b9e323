import csv
import json

import numpy as np
import pytest

from sspreduce.cli import main
from sspreduce.envs import chain_ssp
from sspreduce.harness import (CSV_COLUMNS, ConfigError, ExperimentConfig, _stderr, compute_regret,
                               emit_plot_data, run_experiment)
from sspreduce.mdp import load_instance, save_instance
from sspreduce.reduction import RunLog

from conftest import make_ssp


def chain_config(tmp_path, seeds=(1, 2), k=30, **extra):
    inst = tmp_path / "chain.json"
    save_instance(chain_ssp(2, 0.5, 0.3), inst)
    raw = {"instance": {"path": "chain.json"}, "k": k, "seeds": list(seeds),
           "algorithm": {"name": "ulcvi", "delta": 0.1}, "output_dir": "out", **extra}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


def test_compute_regret_example():
    log = RunLog(k=2, horizon=1, seed=0, config={}, episode_costs=[1.0, 0.0])
    assert compute_regret(log, 0.5).tolist() == [0.5, 0.0]


def test_stderr_formula():
    vals = [1.0, 2.0, 4.0]
    assert _stderr(vals) == pytest.approx(np.std(vals, ddof=1) / np.sqrt(3))
    assert _stderr([3.0]) == 0.0


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"k": 1, "seeds": [0]})
    with pytest.raises(ConfigError):
        ExperimentConfig(instance={"path": "x"}, k=1, seeds=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(instance={"path": "x"}, k=1, seeds=[0], algorithm="magic")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig.load(chain_config(tmp_path))
    assert cfg.instance["path"] == str(tmp_path / "chain.json")
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_two_seeds_write_csvs_and_summary(tmp_path):
    cfg = ExperimentConfig.load(chain_config(tmp_path))
    res = run_experiment(cfg, tmp_path / "out")
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == \
        ["seed_1.csv", "seed_2.csv", "summary.json"]
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    for key in ("k", "b_star", "t_star", "horizon", "m_intervals", "final_regret_mean",
                "final_regret_stderr", "incomplete_runs"):
        assert key in summary
    assert summary["incomplete_runs"] == 0
    # closed forms of the 2-chain: J* = 2c/p, T* = 2/p
    assert summary["b_star"] == pytest.approx(1.2, abs=1e-8)
    assert summary["t_star"] == pytest.approx(4.0, abs=1e-8)
    with open(tmp_path / "out" / "seed_1.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 31
    last = rows[-1]
    assert float(last[5]) == pytest.approx(float(last[4]) - 30 * 1.2, abs=1e-9)
    finals = [r.curve[-1] for r in res.runs]
    assert summary["final_regret_mean"] == pytest.approx(np.mean(finals))


def test_reruns_are_byte_identical(tmp_path):
    cfg = ExperimentConfig.load(chain_config(tmp_path))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("seed_1.csv", "seed_2.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_deterministic_instance_has_zero_regret(tmp_path):
    P = np.zeros((1, 2, 2))
    P[0, :, 1] = 1.0
    save_instance(make_ssp(P, [[0.3, 0.3]], cost_model="deterministic"), tmp_path / "i.json")
    cfg = ExperimentConfig(instance={"path": str(tmp_path / "i.json")}, k=25, seeds=[0])
    res = run_experiment(cfg, tmp_path / "out")
    assert np.allclose(res.runs[0].curve, 0.0, atol=1e-12)


def test_diagnostics_only_on_request(tmp_path):
    cfg = ExperimentConfig.load(chain_config(tmp_path, seeds=(3,)))
    run_experiment(cfg, tmp_path / "plain")
    assert not list((tmp_path / "plain").glob("diagnostics_*"))
    cfg.emit_diagnostics = True
    run_experiment(cfg, tmp_path / "diag")
    lines = [json.loads(x) for x in (tmp_path / "diag" / "diagnostics_seed_3.jsonl").read_text().splitlines()]
    replans = [x for x in lines if x["type"] == "replan"]
    assert replans and all({"m", "cause", "max_gap"} <= set(x) for x in replans)
    assert replans[0]["cause"] == "init"
    assert lines[-1]["type"] == "intervals"


def test_emit_plot_data(tmp_path):
    cfg = ExperimentConfig.load(chain_config(tmp_path))
    res = run_experiment(cfg, tmp_path / "out")
    paths = emit_plot_data([res], tmp_path / "plots")
    with open(paths["regret_vs_k"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert int(rows[0]["k"]) == 30 and int(rows[0]["num_seeds"]) == 2
    with open(paths["regret_curve"]) as fh:
        assert len(list(csv.reader(fh))) == 31
    with pytest.raises(ValueError):
        emit_plot_data([], tmp_path)


def test_generator_instances_follow_run_seed(tmp_path):
    cfg = ExperimentConfig(instance={"generator": "random_ssp",
                                     "params": {"num_states": 3, "num_actions": 2}},
                           k=5, seeds=[0, 1])
    res = run_experiment(cfg, tmp_path)
    a, b = (r.instance for r in res.runs)
    assert not np.array_equal(a.transitions, b.transitions)


def test_cli_gen_plan_run(tmp_path, capsys):
    inst = tmp_path / "chain.json"
    assert main(["gen", "--name", "chain_ssp", "--params",
                 json.dumps({"length": 1, "forward_prob": 0.5, "step_cost": 0.5}),
                 "--seed", "0", "--out", str(inst)]) == 0
    assert load_instance(inst).num_states == 1
    capsys.readouterr()
    assert main(["plan", "--instance", str(inst)]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["b_star"] == pytest.approx(1.0, abs=1e-8)
    assert plan["t_star"] == pytest.approx(2.0, abs=1e-8)

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"instance": {"path": "chain.json"}, "k": 10, "seeds": [0]}))
    out = tmp_path / "res"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seeds", "4,5", "--diagnostics"]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["diagnostics_seed_4.jsonl", "diagnostics_seed_5.jsonl", "regret_curve.csv",
                     "regret_vs_k.csv", "seed_4.csv", "seed_5.csv", "summary.json"]


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["gen", "--name", "bogus", "--out", str(tmp_path / "x.json")]) == 2
    assert "error" in capsys.readouterr().err
