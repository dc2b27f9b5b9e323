"""Experiment orchestration: seeded runs, regret against the exact baseline, artifacts."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .envs import generate
from .mdp import SspMdp, load_instance
from .planning import instance_parameters
from .reduction import (IncompleteRun, ReductionConfig, RunLog, interval_diagnostics,
                        run_ssp_reduction, ulcvi_factory, uniform_random_factory)
from .rng import RngStream
from .ulcvi import UlcviLearner, admissibility_profile

log = logging.getLogger(__name__)

CSV_COLUMNS = ("episode", "steps", "intervals", "episode_cost", "cum_cost", "cum_regret")
ALGORITHMS = ("ulcvi", "uniform")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    instance: dict
    k: int
    seeds: list
    algorithm: str = "ulcvi"
    delta: float = 0.1
    bonus_scale: float = 1.0
    b_star: Union[str, float] = "auto"
    t_star: Union[str, float] = "auto"
    output_dir: str = "results"
    emit_regret_curve: bool = True
    emit_diagnostics: bool = False
    max_total_steps: Optional[int] = None

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if int(self.k) < 1:
            raise ConfigError("k must be at least 1")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if "path" not in self.instance and "generator" not in self.instance:
            raise ConfigError("instance needs either 'path' or 'generator'")
        for name in ("b_star", "t_star"):
            v = getattr(self, name)
            if not (v == "auto" or isinstance(v, (int, float))):
                raise ConfigError(f"{name} must be 'auto' or a number")
        self.k = int(self.k)
        self.seeds = [int(s) for s in self.seeds]

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        raw = dict(raw)
        try:
            algo = raw.pop("algorithm", {})
            if isinstance(algo, str):
                algo = {"name": algo}
            emit = raw.pop("emit", {})
            instance = dict(raw.pop("instance"))
            if "path" in instance and base_dir is not None:
                p = Path(instance["path"])
                instance["path"] = str(p if p.is_absolute() else base_dir / p)
            return cls(
                instance=instance,
                k=raw.pop("k"),
                seeds=list(raw.pop("seeds")),
                algorithm=algo.get("name", "ulcvi"),
                delta=float(algo.get("delta", 0.1)),
                bonus_scale=float(algo.get("bonus_scale", 1.0)),
                b_star=algo.get("b_star", "auto"),
                t_star=algo.get("t_star", "auto"),
                output_dir=raw.pop("output_dir", "results"),
                emit_regret_curve=bool(emit.get("regret_curve", True)),
                emit_diagnostics=bool(emit.get("diagnostics", False)),
                max_total_steps=raw.pop("max_total_steps", None),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "k": self.k,
            "seeds": self.seeds,
            "algorithm": {"name": self.algorithm, "delta": self.delta, "bonus_scale": self.bonus_scale,
                          "b_star": self.b_star, "t_star": self.t_star},
            "output_dir": self.output_dir,
            "emit": {"regret_curve": self.emit_regret_curve, "diagnostics": self.emit_diagnostics},
            "max_total_steps": self.max_total_steps,
        }


@dataclass
class SeedRun:
    seed: int
    instance: SspMdp
    params: dict
    runlog: RunLog
    curve: np.ndarray
    complete: bool
    diagnostics: Optional[dict] = None
    replan_log: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    summary: dict
    paths: dict
    runs: list

    @property
    def mean_curve(self) -> np.ndarray:
        curves = [r.curve for r in self.runs if r.complete]
        if not curves:
            return np.zeros(0)
        return np.mean(np.vstack(curves), axis=0)


def compute_regret(runlog: RunLog, baseline_per_episode: float) -> np.ndarray:
    """Cumulative regret ``R_k = sum_{j<=k} cost_j - k * baseline``."""
    costs = np.asarray(runlog.episode_costs, dtype=np.float64)
    k = np.arange(1, len(costs) + 1)
    return np.cumsum(costs) - k * baseline_per_episode


def build_instance(cfg: ExperimentConfig, seed: int) -> SspMdp:
    inst = cfg.instance
    if "path" in inst:
        return load_instance(inst["path"])
    try:
        return generate(inst["generator"], inst.get("params", {}), seed)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad generator spec {inst}: {exc}") from None


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(int(x))


def write_seed_csv(path: Path, runlog: RunLog, curve: np.ndarray) -> None:
    cum_cost = np.cumsum(runlog.episode_costs)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i in range(len(runlog.episode_costs)):
            w.writerow([i + 1, runlog.episode_steps[i], runlog.episode_intervals[i],
                        _fmt(runlog.episode_costs[i]), _fmt(cum_cost[i]), _fmt(curve[i])])


def _stderr(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedRun:
    ssp = build_instance(cfg, seed)
    ip = instance_parameters(ssp)
    b_star = ip.b_star if cfg.b_star == "auto" else float(cfg.b_star)
    t_star = ip.t_star if cfg.t_star == "auto" else float(cfg.t_star)
    rcfg = ReductionConfig(k=cfg.k, delta=cfg.delta, b_star=b_star, t_star=t_star,
                           max_total_steps=cfg.max_total_steps, bonus_scale=cfg.bonus_scale,
                           allow_zero_cost=cfg.algorithm == "uniform")
    factory = ulcvi_factory() if cfg.algorithm == "ulcvi" else uniform_random_factory()
    learners: list = []
    try:
        runlog = run_ssp_reduction(ssp, factory, rcfg, RngStream(seed, "run"), learners)
        complete = True
    except IncompleteRun as exc:
        log.warning("seed %d incomplete: %s", seed, exc)
        runlog, complete = exc.runlog, False
    curve = compute_regret(runlog, ip.j_opt_init)
    params = dict(ip.to_dict(), b_star_used=b_star, t_star_used=t_star, horizon=rcfg.horizon)

    run = SeedRun(seed, ssp, params, runlog, curve, complete)
    learner = learners[0] if learners else None
    if isinstance(learner, UlcviLearner):
        run.replan_log = list(learner.replan_log)
        profile = admissibility_profile(learner.params, learner.num_states, learner.num_actions)
        run.diagnostics = interval_diagnostics(runlog, profile)
    return run


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run every seed, write ``seed_<n>.csv`` files and ``summary.json``."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict = {"csv": [], "diagnostics": []}
    runs = [run_seed(cfg, seed) for seed in cfg.seeds]

    for run in runs:
        if cfg.emit_regret_curve:
            p = out / f"seed_{run.seed}.csv"
            write_seed_csv(p, run.runlog, run.curve)
            paths["csv"].append(str(p))
        if cfg.emit_diagnostics:
            p = out / f"diagnostics_seed_{run.seed}.jsonl"
            with p.open("w") as fh:
                for rec in run.replan_log:
                    fh.write(json.dumps({"type": "replan", **rec}) + "\n")
                if run.diagnostics is not None:
                    fh.write(json.dumps({"type": "intervals", **run.diagnostics}) + "\n")
            paths["diagnostics"].append(str(p))

    finals = [float(r.curve[-1]) for r in runs if r.complete]
    summary = {
        "k": cfg.k,
        "b_star": float(np.mean([r.params["b_star_used"] for r in runs])),
        "t_star": float(np.mean([r.params["t_star_used"] for r in runs])),
        "horizon": int(runs[0].params["horizon"]),
        "m_intervals": float(np.mean([r.runlog.m_intervals for r in runs])),
        "final_regret_mean": float(np.mean(finals)) if finals else None,
        "final_regret_stderr": _stderr(finals) if finals else None,
        "incomplete_runs": sum(1 for r in runs if not r.complete),
        "algorithm": cfg.algorithm,
        "delta": cfg.delta,
        "bonus_scale": cfg.bonus_scale,
        "seeds": cfg.seeds,
        "per_seed": [{
            "seed": r.seed,
            "final_regret": float(r.curve[-1]) if r.complete else None,
            "m_intervals": r.runlog.m_intervals,
            "total_steps": r.runlog.total_steps,
            "complete": r.complete,
            **r.params,
        } for r in runs],
    }
    p = out / "summary.json"
    p.write_text(json.dumps(summary, indent=2) + "\n")
    paths["summary"] = str(p)
    return ExperimentResult(summary, paths, runs)


def emit_plot_data(results: list, out_dir) -> dict:
    """Write ``regret_vs_k.csv`` and ``regret_curve.csv`` from one or more results.

    ``regret_vs_k.csv``: ``k,final_regret_mean,final_regret_stderr,num_seeds``.
    ``regret_curve.csv``: ``k,episode,mean_cum_regret`` over complete runs.
    """
    if not results:
        raise ValueError("need at least one experiment result")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p_k = out / "regret_vs_k.csv"
    with p_k.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "final_regret_mean", "final_regret_stderr", "num_seeds"))
        for res in results:
            s = res.summary
            mean = "" if s["final_regret_mean"] is None else _fmt(s["final_regret_mean"])
            se = "" if s["final_regret_stderr"] is None else _fmt(s["final_regret_stderr"])
            w.writerow((s["k"], mean, se, sum(1 for r in res.runs if r.complete)))
    p_c = out / "regret_curve.csv"
    with p_c.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "episode", "mean_cum_regret"))
        for res in results:
            for i, v in enumerate(res.mean_curve):
                w.writerow((res.summary["k"], i + 1, _fmt(v)))
    return {"regret_vs_k": str(p_k), "regret_curve": str(p_c)}

