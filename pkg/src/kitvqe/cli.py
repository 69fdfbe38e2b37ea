"""Experiment runner: every benchmark as a reproducible subcommand.

Config values come from defaults, then a JSON config file, then command
line flags (flags win).  Every run writes its data files plus a
manifest holding the resolved config, seeds, code version, timings, and
output hashes; re-running a manifest reproduces the CSV outputs
byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import ANSATZ_KINDS, AnsatzSpec
from .backend import BACKEND
from .lattice import PRESET_NAMES, build_preset
from .model import PRESETS, ModelParams, build_hamiltonian, preset
from . import ed
from .mitigation import NoiseModel, ReadoutModel, zne_pipeline
from .optim import OptResult, TrustRegionConfig
from .vqe import (OPTIMIZERS, SWEEP_AXES, GroundStrategy, VqeProblem,
                  optimize_ground, reference_ground_energy, sweep)

COMMANDS = ("ed", "benchmark-optimizers", "benchmark-ansatz", "sweep", "zne")
OUTPUT_ROOT_ENV = "KITVQE_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one run; every key is validated and unknown
    keys are rejected before anything executes."""

    experiment: str
    lattice: str = "open8"
    model: str = "GL+h"
    params: tuple[float, ...] | None = None   # (jx, jy, jz, hx, hy, hz) override
    seed: int = 0
    output_dir: str = "."
    workers: int = 1
    desk_scale: bool = False
    # ansatz block
    ansatz_kind: str = "HVA"
    layers: int = 4
    # optimizer strategy block
    optimizer: str = "mixed"
    restarts: int = 1
    cma_restarts: int = 1
    per_restart_evals: int | None = None
    cma_evals: int | None = None
    trust_mode: str = "standard"
    # shots policy (per measurement group; None = exact expectations)
    shots: int | None = None
    # ed
    k: int = 1
    # benchmark-optimizers
    optimizers: tuple[str, ...] = ("mixed",)
    repetitions: int = 1
    # benchmark-ansatz
    ansatz_kinds: tuple[str, ...] = ("HVA", "HEA-CZ", "HEA-XY")
    layers_grid: tuple[int, ...] = (1, 2, 3, 4)
    # sweep
    axis: str = "j_perp"
    values: tuple[float, ...] = ()
    penalty: float | None = None
    warm_start: bool = False
    # zne / noise block
    case: str = "open4-hva1"
    theta: tuple[float, ...] | None = None
    p2: float = 0.0
    eps: float = 0.0
    eps0: float | None = None
    eps1: float | None = None
    twirl: bool = False
    circuits_per_scheme: int | None = None
    exclude_lambdas: tuple[float, ...] = ()
    calibration_shots: int = 10_000
    trajectories: str = "per-shot"


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
_COMMON_KEYS = {"experiment", "lattice", "model", "params", "seed",
                "output_dir", "workers", "desk_scale"}
_STRATEGY_KEYS = {"optimizer", "restarts", "cma_restarts",
                  "per_restart_evals", "cma_evals", "trust_mode"}
COMMAND_KEYS: dict[str, set[str]] = {
    "ed": _COMMON_KEYS | {"k"},
    "benchmark-optimizers": _COMMON_KEYS | _STRATEGY_KEYS | {
        "ansatz_kind", "layers", "optimizers", "repetitions", "shots"},
    "benchmark-ansatz": _COMMON_KEYS | _STRATEGY_KEYS | {
        "ansatz_kinds", "layers_grid", "repetitions"},
    "sweep": _COMMON_KEYS | _STRATEGY_KEYS | {
        "ansatz_kind", "layers", "axis", "values", "penalty", "warm_start",
        "shots"},
    "zne": _COMMON_KEYS | _STRATEGY_KEYS | {
        "case", "theta", "p2", "eps", "eps0", "eps1", "twirl", "shots",
        "circuits_per_scheme", "exclude_lambdas", "calibration_shots",
        "trajectories"},
}

# desk-scale budget table: per command, keyed by lattice where it matters
DESK_SCALE_BUDGETS = {
    "benchmark-optimizers": {
        "open16": {"restarts": 50, "cma_restarts": 8,
                   "per_restart_evals": 1500, "cma_evals": 2500},
        "*": {"restarts": 100, "cma_restarts": 16},
    },
    "benchmark-ansatz": {
        "*": {"restarts": 24, "cma_restarts": 8, "per_restart_evals": 20000,
              "cma_evals": 6000},
    },
    "sweep": {
        "*": {"restarts": 12, "cma_restarts": 4, "per_restart_evals": 20000,
              "cma_evals": 6000},
    },
    "zne": {"*": {"restarts": 40, "cma_restarts": 8}},
    "ed": {"*": {}},
}

_TUPLE_KEYS = {"params", "optimizers", "ansatz_kinds", "layers_grid",
               "values", "theta", "exclude_lambdas"}


def make_config(experiment: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Merge defaults < config file < flags, then validate."""
    if experiment not in COMMANDS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    allowed = COMMAND_KEYS[experiment]
    merged: dict = {}
    provided: set[str] = set()
    for source, origin in ((file_values, "config file"), (flag_values, "flag")):
        for key, val in source.items():
            if key == "experiment":
                if val != experiment:
                    raise ConfigError(
                        f"config is for experiment {val!r}, not {experiment!r}")
                continue
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r} ({origin})")
            if key not in allowed:
                raise ConfigError(
                    f"key {key!r} does not apply to {experiment!r} ({origin})")
            if key in _TUPLE_KEYS and val is not None:
                val = tuple(val)
            merged[key] = val
            provided.add(key)
    cfg = RunConfig(experiment=experiment, **merged)
    if cfg.desk_scale:
        table = DESK_SCALE_BUDGETS[experiment]
        budget = table.get(cfg.lattice, table["*"])
        cfg = dataclasses.replace(cfg, **{k: v for k, v in budget.items()
                                          if k not in provided})
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.lattice not in PRESET_NAMES:
        raise ConfigError(f"unknown lattice preset {cfg.lattice!r}; "
                          f"choose from {PRESET_NAMES}")
    if cfg.params is None and cfg.model not in PRESETS:
        raise ConfigError(f"unknown model preset {cfg.model!r}; "
                          f"choose from {tuple(PRESETS)}")
    if cfg.params is not None and len(cfg.params) != 6:
        raise ConfigError("params must be (jx, jy, jz, hx, hy, hz)")
    if cfg.optimizer not in OPTIMIZERS:
        raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
    for name in cfg.optimizers:
        if name not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {name!r} in optimizers")
    if cfg.ansatz_kind not in ANSATZ_KINDS:
        raise ConfigError(f"ansatz_kind must be one of {ANSATZ_KINDS}")
    for kind in cfg.ansatz_kinds:
        if kind not in ANSATZ_KINDS:
            raise ConfigError(f"unknown ansatz kind {kind!r}")
    if cfg.axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}")
    if cfg.trust_mode not in ("standard", "noisy"):
        raise ConfigError("trust_mode must be standard or noisy")
    for key in ("restarts", "cma_restarts", "repetitions", "k", "workers"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be >= 1")
    for key in ("per_restart_evals", "cma_evals", "shots",
                "circuits_per_scheme"):
        v = getattr(cfg, key)
        if v is not None and v < 1:
            raise ConfigError(f"{key} must be positive")
    if (cfg.eps0 is None) != (cfg.eps1 is None):
        raise ConfigError("eps0 and eps1 must be given together")
    if not 0.0 <= cfg.p2 <= 1.0:
        raise ConfigError("p2 must lie in [0, 1]")


def config_dict(cfg: RunConfig) -> dict:
    """JSON-ready form holding the experiment's own keys; reparsing it
    yields an equal config (out-of-scope fields always sit at their
    defaults, since make_config rejects them)."""
    out = {"experiment": cfg.experiment}
    for f in dataclasses.fields(RunConfig):
        if f.name not in COMMAND_KEYS[cfg.experiment]:
            continue
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    if data.get("kind") == "run-manifest":
        data = data.get("config", {})
    return data


# ---------------------------------------------------------------------------
# run plumbing


class StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def mark(self, stage: str) -> None:
        now = time.perf_counter()
        self.timings[stage] = self.timings.get(stage, 0.0) + (now - self._t0)
        self._t0 = now

    @property
    def total(self) -> float:
        return float(sum(self.timings.values()))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, out_dir: Path, timer: StageTimer,
                   outputs: list[Path], started_unix: float) -> Path:
    manifest = {
        "kind": "run-manifest",
        "experiment": cfg.experiment,
        "config": config_dict(cfg),
        "seed": cfg.seed,
        "code_version": __version__,
        "backend": BACKEND,
        "started_unix": started_unix,
        "wall_clock_s": timer.total,
        "stage_timings_s": timer.timings,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out_dir / "manifest.json"
    tmp = out_dir / ".manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def resolve_output_dir(cfg: RunConfig) -> Path:
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
    out = Path(cfg.output_dir)
    if not out.is_absolute():
        out = root / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_params(cfg: RunConfig) -> ModelParams:
    if cfg.params is not None:
        return ModelParams(*cfg.params)
    return preset(cfg.model)


def _unit_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence((master,) + key).generate_state(1)[0])


def _strategy(cfg: RunConfig, name: str, master_seed: int) -> GroundStrategy:
    trust = TrustRegionConfig(mode=cfg.trust_mode)
    return GroundStrategy(
        optimizer=name, restarts=cfg.restarts,
        per_restart_evals=cfg.per_restart_evals,
        cma_restarts=cfg.cma_restarts, cma_evals=cfg.cma_evals,
        master_seed=master_seed, trust=trust)


# ---------------------------------------------------------------------------
# checkpointing


def _result_to_dict(branch: str, restart: int, res: OptResult) -> dict:
    return {"branch": branch, "restart": restart,
            "theta": list(res.best_theta), "value": res.best_value,
            "evaluations": res.evaluations,
            "trajectory": [list(t) for t in res.trajectory],
            "reason": res.reason}


def _result_from_dict(d: dict) -> OptResult:
    return OptResult(tuple(d["theta"]), d["value"], d["evaluations"],
                     tuple((int(i), float(v)) for i, v in d["trajectory"]),
                     d["reason"])


class Checkpoint:
    """Append-only per-unit restart log; loads back as the ``completed``
    map so an interrupted benchmark resumes where it stopped."""

    def __init__(self, out_dir: Path, unit_key: str):
        digest = hashlib.sha256(unit_key.encode()).hexdigest()[:16]
        ckpt_dir = out_dir / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        self.path = ckpt_dir / f"ckpt-{digest}.jsonl"

    def load(self) -> dict[str, dict[int, OptResult]]:
        completed: dict[str, dict[int, OptResult]] = {}
        if not self.path.exists():
            return completed
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            completed.setdefault(d["branch"], {})[d["restart"]] = \
                _result_from_dict(d)
        return completed

    def record(self, branch: str, restart: int, res: OptResult) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(_result_to_dict(branch, restart, res)) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ed(cfg: RunConfig, out_dir: Path, timer: StageTimer) -> list[Path]:
    lattice = build_preset(cfg.lattice)
    params = _resolve_params(cfg)
    h = build_hamiltonian(lattice, params)
    timer.mark("setup")
    spectrum = ed.low_spectrum(h, k=cfg.k, seed=cfg.seed if cfg.seed else 1234)
    timer.mark("diagonalize")
    payload = {
        "lattice": cfg.lattice,
        "model": cfg.model if cfg.params is None else "explicit",
        "params": [params.jx, params.jy, params.jz,
                   params.hx, params.hy, params.hz],
        "n_qubits": lattice.n_qubits,
        "k": cfg.k,
        "method": spectrum.method,
        "energies": list(spectrum.eigenvalues),
    }
    path = out_dir / "spectrum.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"ground energy {spectrum.eigenvalues[0]:.6f} "
          f"({cfg.lattice}, {payload['model']}, {spectrum.method})")
    timer.mark("write")
    return [path]


def _bench_unit(args: tuple) -> dict:
    """One (optimizer, repetition) cell; module-level for the pool."""
    cfg, name, opt_idx, rep, e0, out_dir_s = args
    lattice = build_preset(cfg.lattice)
    problem = VqeProblem(lattice, _resolve_params(cfg),
                         AnsatzSpec(cfg.ansatz_kind, cfg.layers, lattice),
                         shots=cfg.shots,
                         seed=_unit_seed(cfg.seed, 1, opt_idx, rep))
    strategy = _strategy(cfg, name, _unit_seed(cfg.seed, 0, opt_idx, rep))
    ckpt = Checkpoint(Path(out_dir_s),
                      f"{cfg.experiment}|{name}|{rep}|{cfg.seed}|{cfg.lattice}|"
                      f"{cfg.ansatz_kind}|{cfg.layers}|{cfg.shots}|"
                      f"{cfg.restarts}|{cfg.cma_restarts}|"
                      f"{cfg.per_restart_evals}|{cfg.cma_evals}")
    report = optimize_ground(problem, strategy, e0=e0,
                             on_restart=ckpt.record, completed=ckpt.load())
    total_evals = sum(r.evaluations for _, r in report.per_restart)
    return {
        "optimizer": name, "repetition": rep,
        "restarts": len(report.per_restart), "error": report.error,
        "energy": report.energy, "e0": e0,
        "e_sampled": report.best.best_value,
        "mean_evals": float(np.mean([r.evaluations
                                     for _, r in report.per_restart])),
        "max_evals": max(r.evaluations for _, r in report.per_restart),
        "total_evals": total_evals,
        "trajectories": [(name, rep, branch, idx, i, v)
                         for idx, (branch, res) in enumerate(report.per_restart)
                         for i, v in res.trajectory],
        "theta": list(report.best.best_theta),
    }


def _pmap(fn, items: list, workers: int) -> list:
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=1))


def cmd_benchmark_optimizers(cfg: RunConfig, out_dir: Path,
                             timer: StageTimer) -> list[Path]:
    lattice = build_preset(cfg.lattice)
    params = _resolve_params(cfg)
    e0 = ed.ground_energy(build_hamiltonian(lattice, params))
    timer.mark("oracle")
    units = [(cfg, name, i, rep, e0, str(out_dir))
             for i, name in enumerate(cfg.optimizers)
             for rep in range(cfg.repetitions)]
    results = _pmap(_bench_unit, units, cfg.workers)
    timer.mark("optimize")
    shot_mode = cfg.shots is not None
    header = ["optimizer", "repetition", "restarts", "error", "energy", "e0",
              "mean_evals", "max_evals", "total_evals"]
    if shot_mode:
        header += ["e_noisy", "e_noiseless"]
    rows = []
    traj_rows = []
    for r in results:
        row = [r["optimizer"], r["repetition"], r["restarts"], r["error"],
               r["energy"], r["e0"], r["mean_evals"], r["max_evals"],
               r["total_evals"]]
        if shot_mode:
            row += [r["e_sampled"], r["energy"]]
        rows.append(tuple(row))
        traj_rows.extend(r["trajectories"])
        print(f"{r['optimizer']:>7s} rep {r['repetition']}: "
              f"error {r['error']:.3e} evals {r['total_evals']}")
    csv_path = out_dir / "optimizers.csv"
    write_csv(csv_path, header, rows)
    traj_path = out_dir / "trajectories.csv"
    write_csv(traj_path, ["optimizer", "repetition", "branch", "restart",
                          "eval_index", "incumbent_value"], traj_rows)
    best_path = out_dir / "best_theta.json"
    best = min(results, key=lambda r: r["error"])
    best_path.write_text(json.dumps(
        {"optimizer": best["optimizer"], "repetition": best["repetition"],
         "energy": best["energy"], "theta": best["theta"]}, indent=2) + "\n",
        encoding="utf-8")
    timer.mark("write")
    return [csv_path, traj_path, best_path]


def _ansatz_unit(args: tuple) -> dict:
    cfg, kind, k_idx, layers, e0, out_dir_s = args
    lattice = build_preset(cfg.lattice)
    problem = VqeProblem(lattice, _resolve_params(cfg),
                         AnsatzSpec(kind, layers, lattice))
    strategy = _strategy(cfg, cfg.optimizer, _unit_seed(cfg.seed, k_idx, layers))
    ckpt = Checkpoint(Path(out_dir_s),
                      f"{cfg.experiment}|{kind}|{layers}|{cfg.seed}|"
                      f"{cfg.lattice}|{cfg.restarts}|{cfg.cma_restarts}|"
                      f"{cfg.per_restart_evals}|{cfg.cma_evals}")
    report = optimize_ground(problem, strategy, e0=e0,
                             on_restart=ckpt.record, completed=ckpt.load())
    return {"kind": kind, "layers": layers, "params": problem.n_params,
            "error": report.error, "energy": report.energy, "e0": e0,
            "total_evals": sum(r.evaluations for _, r in report.per_restart)}


def cmd_benchmark_ansatz(cfg: RunConfig, out_dir: Path,
                         timer: StageTimer) -> list[Path]:
    lattice = build_preset(cfg.lattice)
    params = _resolve_params(cfg)
    e0 = ed.ground_energy(build_hamiltonian(lattice, params))
    timer.mark("oracle")
    units = [(cfg, kind, k_idx, layers, e0, str(out_dir))
             for k_idx, kind in enumerate(cfg.ansatz_kinds)
             for layers in cfg.layers_grid]
    results = _pmap(_ansatz_unit, units, cfg.workers)
    timer.mark("optimize")
    rows = [(r["kind"], r["layers"], r["params"], r["error"], r["energy"],
             r["e0"], r["total_evals"]) for r in results]
    for r in results:
        print(f"{r['kind']:>7s} L={r['layers']}: error {r['error']:.3e}")
    path = out_dir / "ansatz.csv"
    write_csv(path, ["ansatz", "layers", "param_count", "error", "energy",
                     "e0", "total_evals"], rows)
    timer.mark("write")
    return [path]


def cmd_sweep(cfg: RunConfig, out_dir: Path, timer: StageTimer) -> list[Path]:
    if not cfg.values:
        raise ConfigError("sweep needs at least one value")
    lattice = build_preset(cfg.lattice)
    problem = VqeProblem(lattice, _resolve_params(cfg),
                         AnsatzSpec(cfg.ansatz_kind, cfg.layers, lattice),
                         shots=cfg.shots, seed=cfg.seed)
    strategy = _strategy(cfg, cfg.optimizer, cfg.seed)
    timer.mark("setup")
    points = sweep(problem, cfg.axis, cfg.values, strategy,
                   excited_penalty=cfg.penalty, warm_start=cfg.warm_start)
    timer.mark("optimize")
    rows = []
    for pt in points:
        o = pt.observables
        rows.append((cfg.axis, pt.value, pt.energy, pt.e0, pt.error,
                     o.x, o.y, o.z, o.cxx, o.cyy, o.czz,
                     pt.excited_energy, pt.gap))
        gap_s = "" if pt.gap is None else f" gap {pt.gap:.4f}"
        print(f"{cfg.axis}={pt.value:g}: E {pt.energy:.6f} "
              f"(err {pt.error:.2e}){gap_s}")
    path = out_dir / "sweep.csv"
    write_csv(path, ["axis", "value", "energy", "e0", "error", "x", "y", "z",
                     "cxx", "cyy", "czz", "excited_energy", "gap"], rows)
    timer.mark("write")
    return [path]


def cmd_zne(cfg: RunConfig, out_dir: Path, timer: StageTimer) -> list[Path]:
    if cfg.theta is not None:
        theta = np.asarray(cfg.theta, dtype=np.float64)
    else:
        from .mitigation import case_components
        lattice, params, circuit = case_components(cfg.case)
        problem = VqeProblem(lattice, params, AnsatzSpec("HVA", 1, lattice))
        if circuit.param_count != problem.n_params:
            raise ConfigError("case circuit does not match the HVA slots")
        report = optimize_ground(problem, _strategy(cfg, "mixed", cfg.seed))
        theta = np.asarray(report.best.best_theta)
        print(f"optimized theta for {cfg.case}: E {report.energy:.6f}")
    readout = None
    if cfg.eps0 is not None:
        n = 4 if cfg.case == "open4-hva1" else 8
        readout = ReadoutModel.per_qubit(n, cfg.eps0, cfg.eps1)
    noise = NoiseModel(p2=cfg.p2, eps=cfg.eps, readout=readout)
    timer.mark("setup")
    out = zne_pipeline(cfg.case, theta, noise, twirl=cfg.twirl,
                       shots=cfg.shots if cfg.shots else 1000,
                       circuits_per_scheme=cfg.circuits_per_scheme,
                       exclude_lambdas=cfg.exclude_lambdas,
                       master_seed=cfg.seed,
                       calibration_shots=cfg.calibration_shots,
                       trajectories=cfg.trajectories)
    timer.mark("pipeline")
    rows_path = out_dir / "zne_rows.csv"
    write_csv(rows_path,
              ["lambda", "scheme_id", "instance", "raw_energy",
               "mitigated_energy"],
              [(r.label, r.scheme, r.instance, r.raw_energy,
                r.mitigated_energy) for r in out.rows])
    reg = out.result
    reg_payload = {
        "case": cfg.case,
        "intercept": reg.intercept,
        "intercept_ci": [reg.intercept_lo, reg.intercept_hi],
        "slope": reg.slope,
        "slope_ci": [reg.slope_lo, reg.slope_hi],
        "mode": reg.mode,
        "points": [list(p) for p in reg.points],
        "noiseless_energy": out.noiseless_energy,
        "lambda_means": [list(t) for t in out.lambda_means],
        "theta": [float(t) for t in theta],
        "excluded_lambdas": list(cfg.exclude_lambdas),
    }
    reg_path = out_dir / "regression.json"
    reg_path.write_text(json.dumps(reg_payload, indent=2) + "\n",
                        encoding="utf-8")
    outputs = [rows_path, reg_path]
    if out.confusion is not None:
        conf_path = out_dir / "confusion.csv"
        mat = out.confusion
        write_csv(conf_path, [f"prepared_{j}" for j in range(mat.shape[1])],
                  [tuple(float(x) for x in row) for row in mat])
        outputs.append(conf_path)
    print(f"intercept {reg.intercept:.4f} "
          f"[{reg.intercept_lo:.4f}, {reg.intercept_hi:.4f}] "
          f"noiseless {out.noiseless_energy:.4f}")
    timer.mark("write")
    return outputs


RUNNERS = {
    "ed": cmd_ed,
    "benchmark-optimizers": cmd_benchmark_optimizers,
    "benchmark-ansatz": cmd_benchmark_ansatz,
    "sweep": cmd_sweep,
    "zne": cmd_zne,
}


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file or a prior manifest")
    p.add_argument("--lattice")
    p.add_argument("--model", help="model preset label")
    p.add_argument("--params", type=float, nargs=6,
                   metavar=("JX", "JY", "JZ", "HX", "HY", "HZ"))
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", "-o", dest="output_dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--desk-scale", dest="desk_scale", action="store_true",
                   default=None)


def _add_strategy(p: argparse.ArgumentParser) -> None:
    p.add_argument("--optimizer")
    p.add_argument("--restarts", type=int)
    p.add_argument("--cma-restarts", dest="cma_restarts", type=int)
    p.add_argument("--per-restart-evals", dest="per_restart_evals", type=int)
    p.add_argument("--cma-evals", dest="cma_evals", type=int)
    p.add_argument("--trust-mode", dest="trust_mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kitvqe",
        description="Kitaev-model VQE benchmark runner")
    sub = parser.add_subparsers(dest="experiment", required=True)

    p = sub.add_parser("ed", help="exact low spectrum")
    _add_common(p)
    p.add_argument("--k", type=int, help="number of eigenvalues")

    p = sub.add_parser("benchmark-optimizers", help="optimizer comparison")
    _add_common(p)
    _add_strategy(p)
    p.add_argument("--ansatz-kind", dest="ansatz_kind")
    p.add_argument("--layers", type=int)
    p.add_argument("--optimizers", nargs="+")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--shots", type=int)

    p = sub.add_parser("benchmark-ansatz", help="ansatz family comparison")
    _add_common(p)
    _add_strategy(p)
    p.add_argument("--ansatz-kinds", dest="ansatz_kinds", nargs="+")
    p.add_argument("--layers-grid", dest="layers_grid", type=int, nargs="+")
    p.add_argument("--repetitions", type=int)

    p = sub.add_parser("sweep", help="coupling or field sweep")
    _add_common(p)
    _add_strategy(p)
    p.add_argument("--ansatz-kind", dest="ansatz_kind")
    p.add_argument("--layers", type=int)
    p.add_argument("--axis")
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--penalty", type=float)
    p.add_argument("--warm-start", dest="warm_start", action="store_true",
                   default=None)
    p.add_argument("--shots", type=int)

    p = sub.add_parser("zne", help="noise-scaling extrapolation pipeline")
    _add_common(p)
    _add_strategy(p)
    p.add_argument("--case")
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--p2", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--eps1", type=float)
    p.add_argument("--twirl", action="store_true", default=None)
    p.add_argument("--no-twirl", dest="twirl", action="store_false",
                   default=None)
    p.add_argument("--shots", type=int)
    p.add_argument("--circuits-per-scheme", dest="circuits_per_scheme",
                   type=int)
    p.add_argument("--exclude-lambdas", dest="exclude_lambdas", type=float,
                   nargs="+")
    p.add_argument("--calibration-shots", dest="calibration_shots", type=int)
    p.add_argument("--trajectories")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        flag_values = {k: v for k, v in vars(args).items()
                       if k not in ("experiment", "config") and v is not None}
        cfg = make_config(args.experiment, file_values, flag_values)
        out_dir = resolve_output_dir(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    started = time.time()
    timer = StageTimer()
    try:
        outputs = RUNNERS[cfg.experiment](cfg, out_dir, timer)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, np.linalg.LinAlgError,
            RuntimeError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = write_manifest(cfg, out_dir, timer, outputs, started)
    print(f"wrote {manifest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
