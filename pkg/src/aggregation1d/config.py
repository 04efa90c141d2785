"""JSON experiment configuration with materialised defaults and validation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .grid import Grid
from .kernel import HypothesisViolation, KernelSpec, make_kernel
from .solver import required_half_width

SCENARIOS = ("decay", "rarefaction", "epsilon_limit", "rescale", "particles", "validate", "reference")

LOG_CHECKPOINTS = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]

BASE_DEFAULTS = {
    "kernel": {"family": "ExponentialBump", "A": 2.0, "beta": 0.5},
    "initial": {"kind": "Gaussian", "center": 0.0, "variance": 1.0},
    "grid": {"L": 1600.0, "N": 16384},
    "solver": {
        "epsilon": 0.1,
        "cfl": 0.4,
        "t_end": 1000.0,
        "checkpoints": LOG_CHECKPOINTS,
        "boundary_tol": 1e-8,
    },
    "diagnostics": {
        "p": [1, 2, "inf"],
        "fit_window": [10.0, 1000.0],
        "bound_slack": 1.05,
    },
    "output": "out",
    "seed": 0,
    "write_profiles": False,
}

SCENARIO_DEFAULTS = {
    "decay": {
        "kernels": [
            {"family": "ExponentialBump", "A": 2.0, "beta": 0.5},
            {"family": "ExponentialBump", "A": 2.0, "beta": 0.0},
        ],
        "solver": {"epsilons": [0.1, 0.0]},
        "diagnostics": {"decay_slope": [-1.05, -0.90], "mass_tol": 1e-10},
    },
    "rarefaction": {
        "solver": {"epsilon": 0.5},
        "diagnostics": {
            "rate_slope": {"inf": [-0.55, -0.30], "2": [-0.35, -0.15]},
            "log_monitor_split": 100.0,
            "mass_tol": 1e-10,
        },
    },
    "epsilon_limit": {
        "grid": {"L": 800.0, "N": 8192},
        "solver": {"epsilons": [0.5, 0.1, 0.02, 0.0], "t_end": 500.0, "checkpoints": [1, 2, 5, 10, 20, 50, 100, 200, 500]},
        "diagnostics": {"fit_window": [10.0, 500.0], "compare_time": 500.0, "max_ratio": 3.0},
    },
    "rescale": {
        "grid": {"L": 800.0, "N": 8192},
        "solver": {"epsilon": 0.0, "t_end": 320.0, "checkpoints": [5, 20, 80, 320]},
        "diagnostics": {
            "t0": 5.0,
            "lambdas": [1, 4, 16, 64],
            "test_functions": [
                {"kind": "Bump", "center": 0.0, "width": 3.0},
                {"kind": "GaussianTest", "center": 0.0, "width": 1.5},
            ],
            "pairing_threshold": 0.02,
            "monotone_slack": 0.10,
        },
    },
    "particles": {
        "grid": {"L": 100.0, "N": 32768},
        "solver": {"epsilon": 0.0, "t_end": 50.0, "checkpoints": [50]},
        "particles": {"n": 10000, "refine_factor": 4, "dt": 0.05, "replicates": 8, "sup_tol": 0.05, "ratio_range": [1.4, 2.6]},
    },
    "validate": {
        "validate": {
            "sign_grid": {"L": 10.0, "N": [1024, 2048, 4096]},
            "sign_min_factor": 3.5,
            "oracle": {"A": 1.0, "eps": 0.5, "t": 5.0, "L": 12.0, "N": 1200, "tol": 1e-4},
            "rate": {"A": 2.0, "eps": 1.0, "window": [10.0, 1000.0], "slope": -0.5, "tol": 0.1},
            "zx_ratio": {"A": 2.0, "eps": [1.0, 0.1], "max_factor": 2.0, "ref_time": 10.0},
            "times": LOG_CHECKPOINTS,
            "L": 1600.0,
            "N": 32768,
        },
    },
    "reference": {
        "reference": {"A": 2.0, "eps": 0.1, "times": [1, 10, 100], "L": 200.0, "N": 4096},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _num(d: dict, path: str, key: str, positive=False, nonneg=False, integer=False):
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}: expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v!r}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{path}.{key}: must be nonnegative, got {v!r}")
    return v


def support_radius(initial: dict) -> float:
    """Radius outside which the initial datum is numerically negligible."""
    kind = initial.get("kind")
    if kind == "Gaussian":
        return abs(initial.get("center", 0.0)) + 8.0 * math.sqrt(initial.get("variance", 1.0))
    if kind == "Box":
        return max(abs(initial.get("lo", -1.0)), abs(initial.get("hi", 1.0)))
    if kind == "DoubleBump":
        return max(abs(c) for c in initial.get("centers", (-3.0, 3.0))) + 8.0 * math.sqrt(initial.get("variance", 1.0))
    raise ConfigError(f"initial.kind: unknown datum kind {kind!r}")


@dataclass
class ExperimentConfig:
    scenario: str
    data: dict
    kernels: list

    @property
    def kernel(self) -> KernelSpec:
        return self.kernels[0]

    @property
    def grid(self) -> Grid:
        return Grid(float(self.data["grid"]["L"]), int(self.data["grid"]["N"]))

    @property
    def solver(self) -> dict:
        return self.data["solver"]

    @property
    def diagnostics(self) -> dict:
        return self.data["diagnostics"]

    @property
    def epsilons(self) -> list:
        s = self.data["solver"]
        return list(s["epsilons"]) if "epsilons" in s else [s["epsilon"]]

    @property
    def output(self) -> Path:
        return Path(self.data["output"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def resolve(raw: dict, scenario: str | None = None) -> ExperimentConfig:
    """Merge ``raw`` over the defaults for its scenario and validate it."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    scenario = scenario or raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: expected one of {', '.join(SCENARIOS)}, got {scenario!r}")
    data = _merge(_merge(BASE_DEFAULTS, SCENARIO_DEFAULTS[scenario]), raw)
    data["scenario"] = scenario
    if "kernel" in raw and "kernels" not in raw:
        data.pop("kernels", None)

    kernel_dicts = data["kernels"] if "kernels" in data else [data["kernel"]]
    kernels = []
    for i, kd in enumerate(kernel_dicts):
        path = f"kernels[{i}]" if "kernels" in data else "kernel"
        if not isinstance(kd, dict):
            raise ConfigError(f"{path}: expected an object")
        _num(kd, path, "A", positive=True)
        _num(kd, path, "beta")
        try:
            kernels.append(make_kernel(kd.get("family", "ZeroV"), kd["A"], kd["beta"]))
        except HypothesisViolation as exc:
            raise ConfigError(f"{path}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{path}.family: {exc}") from None

    if scenario in ("reference", "validate"):
        return ExperimentConfig(scenario, data, kernels)

    _num(data["grid"], "grid", "L", positive=True)
    _num(data["grid"], "grid", "N", positive=True, integer=True)
    if data["grid"]["N"] < 16:
        raise ConfigError("grid.N: need at least 16 cells")
    s = data["solver"]
    _num(s, "solver", "t_end", positive=True)
    cfl = _num(s, "solver", "cfl", positive=True)
    if cfl > 1:
        raise ConfigError(f"solver.cfl: must lie in (0, 1], got {cfl}")
    _num(s, "solver", "boundary_tol", positive=True)
    if "epsilons" in s:
        if not isinstance(s["epsilons"], list) or not s["epsilons"]:
            raise ConfigError("solver.epsilons: must be a nonempty list")
        for j, e in enumerate(s["epsilons"]):
            _num({"e": e}, f"solver.epsilons[{j}]", "e", nonneg=True)
    else:
        _num(s, "solver", "epsilon", nonneg=True)
    cps = s.get("checkpoints", [])
    if sorted(cps) != list(cps) or any(c < 0 for c in cps):
        raise ConfigError("solver.checkpoints: must be sorted and nonnegative")
    if cps and cps[-1] > s["t_end"]:
        raise ConfigError(f"solver.checkpoints: {cps[-1]} exceeds t_end = {s['t_end']}")

    if scenario == "rescale":
        _check_rescale(data)

    radius = support_radius(data["initial"])
    L = data["grid"]["L"]
    for i, k in enumerate(kernels):
        need = required_half_width(k.A, s["t_end"], radius)
        if L < need:
            raise ConfigError(
                f"grid.L: L = {L:g} < 1.5*(A*t_end/2) + support radius = {need:g} "
                f"(A = {k.A:g}, t_end = {s['t_end']:g}); the profile would reach the boundary"
            )
    return ExperimentConfig(scenario, data, kernels)


def _check_rescale(data: dict):
    from .diagnostics import TestFunction

    d = data["diagnostics"]
    t0 = _num(d, "diagnostics", "t0", positive=True)
    lams = d.get("lambdas", [])
    if not lams or any(not isinstance(x, (int, float)) or x <= 0 for x in lams):
        raise ConfigError("diagnostics.lambdas: must be a nonempty list of positive numbers")
    if max(lams) * t0 > data["solver"]["t_end"]:
        raise ConfigError(f"diagnostics.lambdas: lambda * t0 = {max(lams) * t0:g} exceeds solver.t_end")
    L = data["grid"]["L"]
    for i, spec in enumerate(d.get("test_functions", [])):
        path = f"diagnostics.test_functions[{i}]"
        try:
            phi = TestFunction(spec["kind"], spec.get("center", 0.0), spec.get("width", 1.0))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        lo, hi = phi.dilated(max(lams)).support
        if lo < -L or hi > L:
            raise ConfigError(f"{path}: support [{lo:g}, {hi:g}] dilated by lambda = {max(lams):g} leaves the grid [-{L:g}, {L:g}]")


def parse_config(path, scenario: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Load, merge with defaults and validate a JSON config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: malformed JSON ({exc})") from None
    if overrides:
        raw = _merge(raw, overrides)
    return resolve(raw, scenario)
