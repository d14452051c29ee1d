"""Experiment configuration: a YAML tree validated into plain Python values.

Every validation failure raises :class:`ConfigError` naming the offending
field path (and the line for YAML syntax errors).
"""

import copy
import math
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError, HardyCritError
from .fields import lambda_N

EXPERIMENTS = ("verify-groundstate", "hardy", "thresholds", "pohozaev-audit", "solve",
               "multiplicity", "concentration", "hypotheses")

DEFAULTS = {
    "grid": {"r_min": 1e-8, "r_max": 1e8, "M": 2000, "angular_order": 64},
    "solver": {"max_iterations": 2000, "tolerance": 1e-5, "step": 1.0, "backstep": 0.5,
               "armijo": 1e-4, "positivity": True, "delta": None, "trace": True},
    "sweep": {},
    "output": {"dir": "out", "fields": False},
    "workers": 1,
}

_TOP = {"experiment", "problem", "grid", "solver", "sweep", "output", "workers", "init", "checks"}
_PROBLEM = {"N", "A", "lambda", "A_over_Lambda", "h", "k"}


@dataclass
class ExperimentConfig:
    experiment: str
    N: int
    A: float
    h: dict
    k: dict
    grid: dict
    solver: dict
    sweep: dict
    output: dict
    workers: int = 1
    init: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        return {"experiment": self.experiment,
                "problem": {"N": self.N, "A": self.A, "h": self.h, "k": self.k},
                "grid": self.grid, "solver": self.solver, "sweep": self.sweep,
                "output": self.output, "workers": self.workers, "init": self.init,
                "checks": self.checks}


def _num(value, path, kind=float):
    """Accept numbers and numeric strings such as '1e-8' (YAML keeps those as text)."""
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{path}: expected a finite number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _coerce_tree(obj):
    """Numeric strings inside preset parameters become floats."""
    if isinstance(obj, dict):
        return {k: _coerce_tree(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_coerce_tree(v) for v in obj]
    if isinstance(obj, str):
        try:
            return float(obj)
        except ValueError:
            return obj
    return obj


def _block(raw, name):
    val = raw.get(name, {})
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"{name}: expected a mapping")
    return val


def _preset(raw, path, default):
    if raw is None:
        return {"preset": default, "params": {}}
    if isinstance(raw, str):
        return {"preset": raw, "params": {}}
    if not isinstance(raw, dict) or "preset" not in raw:
        raise ConfigError(f"{path}: expected a mapping with a 'preset' tag")
    extra = set(raw) - {"preset", "params"}
    if extra:
        raise ConfigError(f"{path}: unknown keys {sorted(extra)}")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{path}.params: expected a mapping")
    return {"preset": str(raw["preset"]), "params": _coerce_tree(params)}


def parse_config(text, experiment=None):
    """Parse and validate YAML text; ``experiment`` overrides or checks the tag."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{where}malformed YAML ({getattr(exc, 'problem', exc)})") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    unknown = set(raw) - _TOP
    if unknown:
        raise ConfigError(f"top level: unknown keys {sorted(unknown)}")

    tag = raw.get("experiment", experiment)
    if experiment is not None and tag != experiment:
        raise ConfigError(f"experiment: config is for {tag!r}, command is {experiment!r}")
    if tag not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown tag {tag!r}; choose from {', '.join(EXPERIMENTS)}")

    prob = _block(raw, "problem")
    unknown = set(prob) - _PROBLEM
    if unknown:
        raise ConfigError(f"problem: unknown keys {sorted(unknown)}")
    if "N" not in prob:
        raise ConfigError("problem.N: missing")
    N = _num(prob["N"], "problem.N", int)
    if N < 3:
        raise ConfigError(f"problem.N: must be an integer >= 3, got {N}")
    given = [key for key in ("A", "lambda", "A_over_Lambda") if key in prob]
    if len(given) > 1:
        raise ConfigError(f"problem: give only one of A, lambda, A_over_Lambda (got {given})")
    if not given:
        raise ConfigError("problem.A: missing (or lambda / A_over_Lambda)")
    A = _num(prob[given[0]], f"problem.{given[0]}")
    if given[0] == "A_over_Lambda":
        A *= lambda_N(N)

    grid = dict(DEFAULTS["grid"])
    g = _block(raw, "grid")
    for key, val in g.items():
        if key not in grid:
            raise ConfigError(f"grid.{key}: unknown key")
        grid[key] = _num(val, f"grid.{key}", int if key in ("M", "angular_order") else float)
    if not 0 < grid["r_min"] < grid["r_max"]:
        raise ConfigError("grid: need 0 < r_min < r_max")
    if grid["M"] < 16:
        raise ConfigError("grid.M: must be at least 16")
    if grid["angular_order"] < 8:
        raise ConfigError("grid.angular_order: must be at least 8")

    solver = dict(DEFAULTS["solver"])
    for key, val in _block(raw, "solver").items():
        if key not in solver:
            raise ConfigError(f"solver.{key}: unknown key")
        if key in ("positivity", "trace"):
            if not isinstance(val, bool):
                raise ConfigError(f"solver.{key}: expected true or false")
            solver[key] = val
        elif key == "delta" and val is None:
            solver[key] = None
        else:
            solver[key] = _num(val, f"solver.{key}", int if key == "max_iterations" else float)
    try:
        from .solver import SolverOptions
        SolverOptions(**solver)
    except HardyCritError as exc:
        raise ConfigError(f"solver: {exc}") from None

    sweep = {}
    for key, val in _block(raw, "sweep").items():
        if isinstance(val, list):
            if not val:
                raise ConfigError(f"sweep.{key}: list must be nonempty")
            sweep[key] = [_num(v, f"sweep.{key}[{i}]") for i, v in enumerate(val)]
        else:
            sweep[key] = _num(val, f"sweep.{key}")

    output = dict(DEFAULTS["output"])
    for key, val in _block(raw, "output").items():
        if key not in output:
            raise ConfigError(f"output.{key}: unknown key")
        output[key] = val
    workers = _num(raw.get("workers", 1), "workers", int)
    if workers < 1:
        raise ConfigError("workers: must be at least 1")

    cfg = ExperimentConfig(tag, N, A, _preset(prob.get("h"), "problem.h", "zero"),
                           _preset(prob.get("k"), "problem.k", "constant_one"),
                           grid, solver, sweep, output, workers,
                           _coerce_tree(_block(raw, "init")), _coerce_tree(_block(raw, "checks")))
    build_problem(cfg)
    return cfg


def load_config(path, experiment=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, experiment)


def build_problem(cfg, A=None):
    """ProblemSpec for the config (presets are validated here)."""
    from .coefficients import make_h_preset, make_k_preset
    from .problem import ProblemSpec
    from .quadrature import build_grid

    try:
        h = make_h_preset(cfg.h["preset"], copy.deepcopy(cfg.h["params"]), cfg.N)
    except HardyCritError as exc:
        raise ConfigError(f"problem.h: {exc}") from None
    try:
        k = make_k_preset(cfg.k["preset"], copy.deepcopy(cfg.k["params"]), cfg.N)
    except HardyCritError as exc:
        raise ConfigError(f"problem.k: {exc}") from None
    g = cfg.grid
    grid = build_grid(cfg.N, g["r_min"], g["r_max"], g["M"])
    return ProblemSpec.make(cfg.N, cfg.A if A is None else A, h, k, grid, g["angular_order"])
