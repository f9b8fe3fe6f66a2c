"""Run configuration and the analyze / simulate / sweep pipelines."""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import criteria, seeding
from .analysis import (
    NONDEMOLITION_RTOL,
    SEPARABILITY_RTOL,
    check_nondemolition,
    check_separability,
)
from .dynamics import (
    correlation_amplitude,
    factorized_z,
    simulate_dense,
    simulate_spin_bath,
    time_grid,
    write_trajectory,
)
from .errors import ConfigError
from .models import ModelSpec, env_factors, haar_qubit
from .system import DENSE_CAP

SEED_ENV_VAR = "EINSELECT_SEED"

DEFAULT_THRESHOLDS = {
    "vanishing": criteria.VANISHING_THRESHOLD,
    "time_average": criteria.TIME_AVERAGE_THRESHOLD,
    "stability": criteria.STABILITY_TOL,
    "monotone_rtol": criteria.MONOTONE_RTOL,
    "separability_rtol": SEPARABILITY_RTOL,
    "nondemolition_rtol": NONDEMOLITION_RTOL,
}


@dataclass
class RunConfig:
    model: ModelSpec
    t_max: float = 200.0
    n_samples: int = 2000
    sweep_n: list[int] | None = None
    sweep_seeds: int = 5
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    output_dir: Path = Path("einselect_out")
    seed: int = 0
    nondemolition_points: int = 11
    stability_points: int = 201
    stability_env_states: int = 5

    @property
    def times(self) -> np.ndarray:
        return time_grid(self.t_max, self.n_samples)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".", env=None) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object")
        env = os.environ if env is None else env
        allowed = {"model", "times", "sweep", "thresholds", "output_dir", "seed", "stability", "nondemolition_points"}
        extra = set(raw) - allowed
        if extra:
            raise ConfigError(f"{sorted(extra)[0]}: unknown field")
        if "model" not in raw:
            raise ConfigError("model: missing required field")
        seed = raw.get("seed", 0)
        if env.get(SEED_ENV_VAR):
            try:
                seed = int(env[SEED_ENV_VAR])
            except ValueError:
                raise ConfigError(f"{SEED_ENV_VAR}: not an integer") from None
            model_raw = dict(raw["model"], seed=seed)
        else:
            model_raw = dict(raw["model"])
            model_raw.setdefault("seed", seed)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed: must be a non-negative integer")
        if model_raw.get("env_state") == "haar":
            model_raw["env_state"] = f"haar:{seed}"
        model = ModelSpec.from_dict(model_raw, base_dir)

        times = raw.get("times", {})
        t_max = times.get("t_max", 200.0)
        n_samples = times.get("n_samples", 2000)
        if not isinstance(t_max, (int, float)) or t_max <= 0:
            raise ConfigError("times.t_max: must be > 0")
        if not isinstance(n_samples, int) or n_samples < 100:
            raise ConfigError("times.n_samples: must be an integer >= 100")

        sweep = raw.get("sweep")
        sweep_n, sweep_seeds = None, 5
        if sweep is not None:
            sweep_n = sweep.get("N")
            if not sweep_n or not all(isinstance(n, int) and n >= 1 for n in sweep_n):
                raise ConfigError("sweep.N: expected a list of positive integers")
            if len(set(sweep_n)) != len(sweep_n):
                raise ConfigError("sweep.N: values must be distinct")
            sweep_n = sorted(sweep_n)
            sweep_seeds = sweep.get("seeds", 5)
            if not isinstance(sweep_seeds, int) or sweep_seeds < 1:
                raise ConfigError("sweep.seeds: must be a positive integer")

        thresholds = dict(DEFAULT_THRESHOLDS)
        for key, val in raw.get("thresholds", {}).items():
            if key not in thresholds:
                raise ConfigError(f"thresholds.{key}: unknown threshold")
            if not isinstance(val, (int, float)) or val < 0:
                raise ConfigError(f"thresholds.{key}: must be a non-negative number")
            thresholds[key] = float(val)

        stab = raw.get("stability", {})
        out = Path(raw.get("output_dir", "einselect_out"))
        if not out.is_absolute():
            out = Path(base_dir) / out
        return cls(
            model=model,
            t_max=float(t_max),
            n_samples=n_samples,
            sweep_n=sweep_n,
            sweep_seeds=sweep_seeds,
            thresholds=thresholds,
            output_dir=out,
            seed=seed,
            nondemolition_points=raw.get("nondemolition_points", 11),
            stability_points=stab.get("points", 201),
            stability_env_states=stab.get("env_states", 5),
        )

    @classmethod
    def load(cls, path, env=None) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from None
        return cls.from_dict(raw, base_dir=path.parent, env=env)

    def describe(self) -> dict:
        m = self.model
        return {
            "model": {
                "kind": m.kind,
                "N": m.N,
                "seed": m.seed,
                "env_state": m.env_state if isinstance(m.env_state, str) else "explicit",
                "g": None if m.g is None else list(m.g),
                "g_range": list(m.g_range),
            },
            "times": {"t_max": self.t_max, "n_samples": self.n_samples},
            "sweep": None if self.sweep_n is None else {"N": self.sweep_n, "seeds": self.sweep_seeds},
            "thresholds": self.thresholds,
            "seed": self.seed,
        }


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir: not writable ({exc})") from None
    return path


def write_json(obj: dict, path: Path) -> None:
    obj = dict(obj, generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    path.write_text(json.dumps(obj, indent=2) + "\n")


def structural_checks(cfg: RunConfig, model):
    sep = check_separability(model.h_int, model.d_s, model.d_e, rtol=cfg.thresholds["separability_rtol"])
    grid = np.linspace(0.0, cfg.t_max, max(cfg.nondemolition_points, 2))
    nd = check_nondemolition(model, grid, rtol=cfg.thresholds["nondemolition_rtol"])
    return sep, nd


def verdict_block(sep, nd) -> dict:
    """JSON block combining the separability and nondemolition verdicts."""
    out = sep.to_dict()
    out.update(nd.to_dict())
    return out


def run_analyze(cfg: RunConfig) -> tuple[dict, int]:
    model, _ = cfg.model.build()
    sep, nd = structural_checks(cfg, model)
    report = {"config": cfg.describe(), "verdict": verdict_block(sep, nd)}
    write_json(report, _ensure_dir(cfg.output_dir / "analyze") / "report.json")
    return report, 0 if (sep.separable and nd.passed) else 2


def run_simulate(cfg: RunConfig, figures: bool = False) -> tuple[dict, int]:
    out = _ensure_dir(cfg.output_dir / "simulate")
    spec = cfg.model
    model, init = spec.build()
    times = cfg.times
    sep, nd = structural_checks(cfg, model)
    report = {"config": cfg.describe(), "verdict": verdict_block(sep, nd)}
    if not sep.separable:
        report["error"] = "pointer basis does not exist: z_mm'(t) is undefined for this model"
        write_json(report, out / "report.json")
        return report, 2
    if spec.product_family:
        g, _ = spec.couplings()
        traj = simulate_spin_bath(g, init, times)
    else:
        traj = simulate_dense(model, init, times, pointer=sep.certificate)
    write_trajectory(traj, out)
    cond_b = {}
    for (m, mp), z in sorted(traj.z.items()):
        cond_b[f"{m}_{mp}"] = criteria.check_time_average(z, times, cfg.thresholds["time_average"]).to_dict()
    report["backend"] = traj.backend
    report["flags"] = traj.flags
    report["cond_b"] = cond_b
    passed = bool(cond_b) and all(r["pass"] for r in cond_b.values())
    if figures:
        from .plotting import plot_trajectory

        plot_trajectory(traj, out / "z_abs.png")
    write_json(report, out / "report.json")
    return report, 0 if passed else 2


def sweep_point(spec: ModelSpec, n: int, replica: int, t_max: float, n_samples: int) -> tuple[int, int, np.ndarray]:
    """``z_01(t)`` for one ``(N, replica)`` draw of the model family."""
    times = time_grid(t_max, n_samples)
    if spec.product_family:
        g, _ = spec.couplings(n, replica)
        factors = env_factors(spec.env_state, n, replica)
        z = factorized_z(g, [f[0] for f in factors], [f[1] for f in factors], times)
    else:
        model, init = spec.build(n, replica)
        z = correlation_amplitude(model, init, times, 0, 1)
    return n, replica, z


def _stability_env_states(cfg: RunConfig, model) -> list[np.ndarray]:
    states = []
    rng = seeding.stream(cfg.seed, seeding.STABILITY, model.n_env)
    for _ in range(cfg.stability_env_states):
        factors = []
        for d in model.env_dims:
            if d == 2:
                factors.append(haar_qubit(rng))
            else:
                v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
                factors.append(v / np.linalg.norm(v))
        vec = factors[0]
        for f in factors[1:]:
            vec = np.kron(vec, f)
        states.append(vec)
    for idx in (0, model.d_e - 1):
        e = np.zeros(model.d_e, dtype=complex)
        e[idx] = 1
        states.append(e)
    return states


def run_criteria(cfg: RunConfig, jobs: int | None = None) -> tuple[criteria.CriteriaReport, list[tuple]]:
    """Full pipeline: (A), (B), then (a)-(d), then the overall verdict.

    Returns the report and the scaling rows ``(N, seed, delta_z, mean_abs_z)``.
    """
    spec = cfg.model
    th = cfg.thresholds
    times = cfg.times
    model, init = spec.build()
    sep, nd = structural_checks(cfg, model)
    sep_dict = sep.to_dict()
    nd_dict = nd.to_dict()
    stab_times = np.linspace(0.0, cfg.t_max, cfg.stability_points)
    rows: list[tuple] = []

    def stability(states, basis):
        if model.dim > DENSE_CAP:
            return {"skipped": True, "reason": f"dense cap {DENSE_CAP} exceeded", "pass": False}
        env_states = _stability_env_states(cfg, model)
        return criteria.check_pointer_stability(model, states, env_states, stab_times, th["stability"], basis)

    if not (sep.separable and nd.passed):
        cond_d = stability(np.eye(model.d_s), "computational (candidate)")
        return criteria.verdict_R1(sep_dict, nd_dict, None, None, None, cond_d), rows

    pointer = sep.certificate
    rank1 = [m for m in pointer.labels if pointer.system_ranks[m] == 1]
    if rank1:
        cond_d = stability(np.column_stack([pointer.pointer_state(m) for m in rank1]), "pointer")
    else:
        cond_d = {"skipped": True, "reason": "no rank-1 pointer states", "pass": False}

    if not spec.product_family and len(rank1) < 2:
        skip = {"skipped": True, "reason": "fewer than two rank-1 pointer sectors; z undefined", "pass": False}
        return criteria.verdict_R1(sep_dict, nd_dict, skip, skip, skip, cond_d), rows

    n_list = cfg.sweep_n or [spec.N]
    n_seeds = cfg.sweep_seeds if cfg.sweep_n else 1
    tasks = [(n, r) for n in n_list for r in range(n_seeds)]
    results = _run_points(spec, tasks, cfg.t_max, cfg.n_samples, jobs)
    z_by = {key: results[key] for key in sorted(results)}
    for (n, r), z in z_by.items():
        rows.append((n, r, criteria.estimate_deviation(z, times), criteria.window_mean_abs(z, times)))

    if (spec.N, 0) in z_by:
        z_base = z_by[(spec.N, 0)]
    else:
        z_base = _run_points(spec, [(spec.N, 0)], cfg.t_max, cfg.n_samples, 1)[(spec.N, 0)]
    cond_b = criteria.check_time_average(z_base, times, th["time_average"])

    series = {n: [z_by[(n, r)] for r in range(n_seeds)] for n in n_list}
    if len(n_list) >= 3:
        cond_a = criteria.check_vanishing(series, times, th["vanishing"], th["monotone_rtol"])
    else:
        cond_a = {
            "skipped": True,
            "reason": "fewer than 3 environment sizes",
            "means": {
                str(n): float(np.mean([criteria.window_mean_abs(z, times) for z in s])) for n, s in series.items()
            },
            "pass": False,
        }
    dz = {n: [row[2] for row in rows if row[0] == n] for n in n_list}
    if len(n_list) >= 4 and n_seeds >= 5:
        cond_c = criteria.check_deviation_scaling(dz, th["monotone_rtol"])
    else:
        cond_c = {
            "skipped": True,
            "reason": "need >= 4 environment sizes and >= 5 seeds",
            "table": {str(n): float(np.mean(v)) for n, v in dz.items()},
            "pass": False,
        }
    return criteria.verdict_R1(sep_dict, nd_dict, cond_a, cond_b, cond_c, cond_d), rows


def _run_points(spec, tasks, t_max, n_samples, jobs) -> dict:
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        out = [sweep_point(spec, n, r, t_max, n_samples) for n, r in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(
                pool.map(
                    sweep_point,
                    [spec] * len(tasks),
                    [n for n, _ in tasks],
                    [r for _, r in tasks],
                    [t_max] * len(tasks),
                    [n_samples] * len(tasks),
                )
            )
    return {(n, r): z for n, r, z in out}


def write_scaling(rows, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "seed", "delta_z", "mean_abs_z"])
        for n, r, dz, mz in sorted(rows):
            writer.writerow([n, r, repr(float(dz)), repr(float(mz))])


def run_sweep(cfg: RunConfig, jobs: int | None = None, figures: bool = False) -> tuple[dict, int]:
    out = _ensure_dir(cfg.output_dir / "sweep")
    report, rows = run_criteria(cfg, jobs)
    write_scaling(rows, out / "scaling.csv")
    body = {"config": cfg.describe(), **report.to_dict()}
    if figures and rows:
        from .plotting import plot_scaling

        plot_scaling(rows, report, out / "scaling.png")
    write_json(body, out / "report.json")
    return body, 0 if report.r1_verdict == criteria.EISR_CANDIDATE else 2


def read_json_report(path) -> dict:
    """Load a report, dropping the timestamp field."""
    data = json.loads(Path(path).read_text())
    data.pop("generated_at", None)
    return data


__all__ = [
    "RunConfig",
    "run_analyze",
    "run_criteria",
    "run_simulate",
    "run_sweep",
]
