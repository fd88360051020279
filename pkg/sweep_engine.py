import json
import logging
import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool, cpu_count
from pathlib import Path
from time import perf_counter
from typing import Dict, Tuple

import pandas as pd
from dotenv import dotenv_values

from gradlab import HYPERPARAMS, Imports
from gradlab.core import ROSTER, applicable_cells, get_method
from gradlab._types import GradientLevel, method_label
from gradlab.toylab import make_problem, train_run
from gradlab.utils import InvalidConfig

# --- LOGGING SETUP ---
logger = logging.getLogger("Sweep")

# --- CONFIGURATION ---
DEFAULT_SETTINGS = {
    "METHOD": "baseline",
    "LEVEL": "param",
    "ITERS": "500",
    "CADENCE": "10",
    "SEEDS": "0,1,2",
    "OUT": "runs",
    "JOBS": "1",
    "LR": "0.05",
    "INIT": "random",
    "PROBLEM_SEED": "0",
    "INPUT_DIM": "16",
    "FEATURE_DIM": "32",
    "TASKS": "2",
    "SAMPLES": "256",
    "OVERLAP": "0.0",
    "NOISE": "0.0",
    "ACTIVATION": "identity",
    "METHODS": ",".join(ROSTER),
    "LEVELS": "param,feature",
}

# CLI flag -> config key
FLAG_KEYS = {
    "method": "METHOD",
    "level": "LEVEL",
    "iters": "ITERS",
    "cadence": "CADENCE",
    "seeds": "SEEDS",
    "out": "OUT",
    "jobs": "JOBS",
    "methods": "METHODS",
    "levels": "LEVELS",
}

MANIFEST_COLUMNS = ["cell", "method", "level", "status", "detail"]


def hyperparam_key(method: str, param: str) -> str:
    return f"{method.upper()}_{param.upper()}"


HYPERPARAM_KEYS = {
    hyperparam_key(method, param): (method, param)
    for method, params in HYPERPARAMS.items()
    for param in params
}


def _setting(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def resolve_settings(config_path=None, flags: dict = None) -> Dict[str, str]:
    """Built-in defaults < config file < CLI flags, all as strings."""
    settings = dict(DEFAULT_SETTINGS)
    settings.update({key: _setting(HYPERPARAMS[m][p]) for key, (m, p) in HYPERPARAM_KEYS.items()})

    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise InvalidConfig(f"[X] Config file not found: {path}")
        for key, value in dotenv_values(path).items():
            key = key.upper()
            if key not in settings:
                raise InvalidConfig(f"[X] Unknown config key {key!r} in {path}")
            if value is None:
                raise InvalidConfig(f"[X] Config key {key!r} has no value")
            settings[key] = value.strip()

    for flag, value in (flags or {}).items():
        if value is not None and flag in FLAG_KEYS:
            settings[FLAG_KEYS[flag]] = _setting(value)
    return settings


def _parse(settings: dict, key: str, cast):
    try:
        return cast(settings[key])
    except (TypeError, ValueError):
        raise InvalidConfig(f"[X] {key}={settings[key]!r} is not a valid {cast.__name__}")


def _csv(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in str(text).split(",") if item.strip())


@dataclass(frozen=True)
class ProblemSpec:
    seed: int = 0
    n: int = 16
    m: int = 32
    T: int = 2
    N: int = 256
    overlap: float = 0.0
    noise: float = 0.0
    activation: str = "identity"

    def __post_init__(self):
        if min(self.n, self.m, self.N) < 1 or self.T < 2:
            raise InvalidConfig("[X] Need INPUT_DIM, FEATURE_DIM, SAMPLES >= 1 and TASKS >= 2")
        if not 0.0 <= self.overlap <= 1.0:
            raise InvalidConfig(f"[X] OVERLAP must lie in [0, 1], got {self.overlap}")
        if self.noise < 0:
            raise InvalidConfig(f"[X] NOISE must be >= 0, got {self.noise}")
        if self.activation not in ("identity", "tanh"):
            raise InvalidConfig(f"[X] ACTIVATION must be 'identity' or 'tanh', got {self.activation!r}")

    def build(self):
        return make_problem(
            seed=self.seed, n=self.n, m=self.m, T=self.T, N=self.N,
            overlap=self.overlap, noise=self.noise, activation=self.activation,
        )


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    method: str = "baseline"
    level: GradientLevel = GradientLevel.PARAM
    iters: int = 500
    cadence: int = 10
    seeds: Tuple[int, ...] = (0, 1, 2)
    lr: float = 0.05
    start: str = "random"
    hyperparams: Dict[str, dict] = field(default_factory=dict)
    out: Path = Path("runs")
    jobs: int = 1
    methods: Tuple[str, ...] = ROSTER
    levels: Tuple[GradientLevel, ...] = (GradientLevel.PARAM, GradientLevel.FEATURE)

    def __post_init__(self):
        object.__setattr__(self, "method", get_method(self.method).name)
        object.__setattr__(self, "methods", tuple(get_method(m).name for m in self.methods))
        try:
            object.__setattr__(self, "level", GradientLevel(self.level))
            object.__setattr__(self, "levels", tuple(GradientLevel(x) for x in self.levels))
        except ValueError as e:
            raise InvalidConfig(f"[X] Levels must be 'param' or 'feature': {e}")
        if self.iters < 1 or self.cadence < 1 or self.jobs < 1:
            raise InvalidConfig("[X] ITERS, CADENCE and JOBS must be >= 1")
        if not self.seeds:
            raise InvalidConfig("[X] SEEDS needs at least one repeat seed")
        if not self.lr > 0:
            raise InvalidConfig(f"[X] LR must be > 0, got {self.lr}")
        if self.start not in ("random", "pretrained"):
            raise InvalidConfig(f"[X] INIT must be 'random' or 'pretrained', got {self.start!r}")

    @classmethod
    def from_settings(cls, settings: dict) -> "RunConfig":
        hyperparams = {}
        for key, (method, param) in HYPERPARAM_KEYS.items():
            default = HYPERPARAMS[method][param]
            if settings.get(key, "") != "" and settings[key] != _setting(default):
                cast = int if isinstance(default, int) else float
                hyperparams.setdefault(method, {})[param] = _parse(settings, key, cast)

        problem = ProblemSpec(
            seed=_parse(settings, "PROBLEM_SEED", int),
            n=_parse(settings, "INPUT_DIM", int),
            m=_parse(settings, "FEATURE_DIM", int),
            T=_parse(settings, "TASKS", int),
            N=_parse(settings, "SAMPLES", int),
            overlap=_parse(settings, "OVERLAP", float),
            noise=_parse(settings, "NOISE", float),
            activation=settings["ACTIVATION"].lower(),
        )
        try:
            seeds = tuple(int(s) for s in _csv(settings["SEEDS"]))
        except ValueError:
            raise InvalidConfig(f"[X] SEEDS={settings['SEEDS']!r} is not a list of integers")
        return cls(
            problem=problem,
            method=settings["METHOD"],
            level=settings["LEVEL"],
            iters=_parse(settings, "ITERS", int),
            cadence=_parse(settings, "CADENCE", int),
            seeds=seeds,
            lr=_parse(settings, "LR", float),
            start=settings["INIT"].lower(),
            hyperparams=hyperparams,
            out=Path(settings["OUT"]),
            jobs=_parse(settings, "JOBS", int),
            methods=_csv(settings["METHODS"]),
            levels=_csv(settings["LEVELS"]),
        )

    def to_settings(self) -> Dict[str, str]:
        settings = {
            "METHOD": self.method,
            "LEVEL": self.level.value,
            "ITERS": str(self.iters),
            "CADENCE": str(self.cadence),
            "SEEDS": _setting(self.seeds),
            "OUT": str(self.out),
            "JOBS": str(self.jobs),
            "LR": repr(self.lr),
            "INIT": self.start,
            "PROBLEM_SEED": str(self.problem.seed),
            "INPUT_DIM": str(self.problem.n),
            "FEATURE_DIM": str(self.problem.m),
            "TASKS": str(self.problem.T),
            "SAMPLES": str(self.problem.N),
            "OVERLAP": repr(self.problem.overlap),
            "NOISE": repr(self.problem.noise),
            "ACTIVATION": self.problem.activation,
            "METHODS": ",".join(self.methods),
            "LEVELS": ",".join(level.value for level in self.levels),
        }
        for key, (method, param) in HYPERPARAM_KEYS.items():
            value = self.hyperparams.get(method, {}).get(param, HYPERPARAMS[method][param])
            settings[key] = _setting(value)
        return settings

    def for_cell(self, method: str, level) -> "RunConfig":
        return replace(self, method=method, level=GradientLevel(level))


def cell_name(method: str, level) -> str:
    return f"{get_method(method).name}_{GradientLevel(level).value}"


def _write_atomic(path: Path, text: str):
    """Complete file or nothing: write a sibling temp file, then rename."""
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_config(config: RunConfig, directory: Path):
    lines = [f"{key}={value}" for key, value in config.to_settings().items()]
    _write_atomic(Path(directory) / "config.txt", "\n".join(lines) + "\n")


def trajectory_lines(traj) -> str:
    """One snapshot record per line, closed by the final losses record."""
    lines = [json.dumps(s.to_record()) for s in traj.snapshots]
    if traj.final_losses is not None:
        final = {"final": True, "iter": len(traj.loss_curve), "losses": [float(x) for x in traj.final_losses.values]}
        lines.append(json.dumps(final))
    return "".join(line + "\n" for line in lines)


# ==========================================================
# 1. SINGLE RUN (one method, one level, every repeat seed)
# ==========================================================
def run_cell(config: RunConfig, run_dir=None) -> pd.DataFrame:
    """Trains every repeat seed and persists the run directory.

    Writes config.txt, seed_<s>.jsonl per seed and summary.csv with the
    final losses averaged over seeds. On error a FAILED marker replaces
    the summary and the error propagates.
    """
    run_dir = Path(run_dir) if run_dir else config.out / cell_name(config.method, config.level)
    run_dir.mkdir(parents=True, exist_ok=True)
    marker = run_dir / "FAILED"
    if marker.exists():
        marker.unlink()
    write_config(config, run_dir)

    label = method_label(config.method, config.level)
    try:
        problem = config.problem.build()
        finals = []
        for seed in config.seeds:
            stime = perf_counter()
            traj = train_run(
                problem,
                config.method,
                config.level,
                iters=config.iters,
                seed=seed,
                hyperparams=config.hyperparams.get(config.method),
                cadence=config.cadence,
                lr=config.lr,
                start=config.start,
            )
            _write_atomic(run_dir / f"seed_{seed}.jsonl", trajectory_lines(traj))
            finals.append(traj.final_losses.values)
            logger.info(
                f"[+] {label} seed {seed}: total loss {traj.final_losses.total():.6g} "
                f"({perf_counter() - stime:.2f}s)"
            )
    except Exception as e:
        _write_atomic(marker, f"{e}\n")
        summary = run_dir / "summary.csv"
        if summary.exists():
            summary.unlink()
        raise

    mean = pd.DataFrame(finals).mean(axis=0)
    row = {
        "method": config.method,
        "level": config.level.value,
        "label": label,
        "seeds": _setting(config.seeds),
        "iters": config.iters,
    }
    row.update({f"loss_{i + 1}": float(v) for i, v in enumerate(mean)})
    row["total"] = float(mean.sum())
    summary = pd.DataFrame([row])
    _write_atomic(run_dir / "summary.csv", summary.to_csv(index=False))
    return summary


def _cell_worker(task) -> Tuple[str, str, str, str, str]:
    """Pool worker: runs one sweep cell and never raises."""
    config, directory = task
    name = directory.name
    try:
        run_cell(config, directory)
        return name, config.method, config.level.value, "ok", ""
    except Exception as e:
        logger.error(f"[X] Cell {name} failed: {e}")
        return name, config.method, config.level.value, "failed", str(e).replace("\t", " ").replace("\n", " ")


# ==========================================================
# 2. SWEEP (every applicable method x level cell)
# ==========================================================
def sweep(config: RunConfig, methods=None, levels=None) -> Path:
    """Runs every applicable cell under config.out and writes manifest.txt.

    Failing cells are recorded as 'failed' and never stop the sweep.
    """
    cells = applicable_cells(methods or config.methods, levels or config.levels)
    if not cells:
        raise InvalidConfig("[X] Sweep grid is empty: no applicable (method, level) cell")

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config(config, out)
    tasks = [(config.for_cell(m, level), out / cell_name(m, level)) for m, level in cells]

    jobs = min(config.jobs, cpu_count(), len(tasks))
    stime = perf_counter()
    logger.info(f"[i] Sweep of {len(tasks)} cells x {len(config.seeds)} seeds with {jobs} job(s) into {out}")

    if jobs > 1:
        with Pool(jobs) as pool:
            results = pool.imap(_cell_worker, tasks, 1)
            if Imports["tqdm"]:
                from tqdm import tqdm

                results = tqdm(results, total=len(tasks), desc="cells")
            results = list(results)
    else:
        iterator = tasks
        if Imports["tqdm"]:
            from tqdm import tqdm

            iterator = tqdm(tasks, desc="cells")
        results = [_cell_worker(task) for task in iterator]

    manifest = pd.DataFrame(results, columns=MANIFEST_COLUMNS)
    _write_atomic(out / "manifest.txt", manifest.to_csv(sep="\t", index=False))

    failed = int((manifest["status"] != "ok").sum())
    logger.info(
        f"[i] Sweep done: {len(manifest) - failed} ok, {failed} failed "
        f"({perf_counter() - stime:.2f}s)"
    )
    return out


def read_manifest(sweep_dir) -> pd.DataFrame:
    path = Path(sweep_dir) / "manifest.txt"
    if not path.is_file():
        raise InvalidConfig(f"[X] No manifest.txt in {sweep_dir}")
    return pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
