"""Batch job configuration, execution, and run reports.

A job names one input (a point file or an analytic model), the spline
dimensions, a weight specification, and the stopping rule; running it
produces a RunReport that serializes losslessly and, with timestamps
suppressed, byte-identically for identical configs and seeds.

Weight specifications resolve to one omega per control point. The base
layer is a uniform value, an explicit vector, or the second-difference
rule; optional index ranges (1-based, inclusive, later entries win) are
painted on top.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import AssemblyBundle, WeightConfig, build_curve_bundle, build_surface_bundle
from .datasets import load_points, sample_starfish, sample_viviani
from .iteration import (
    IterationState,
    IterationTrace,
    StoppingRule,
    initial_state,
    run,
    zero_state,
)
from .metrics import second_difference_weights
from .splines import (
    DataSet,
    KnotVector,
    SplineCurve,
    SplineSurface,
    make_knot_vector,
    select_initial_controls,
)

__all__ = [
    "JobConfigError",
    "JobConfig",
    "RunReport",
    "JobResult",
    "resolve_weights",
    "apply_weight_ranges",
    "run_job",
]


class JobConfigError(ValueError):
    """A job description that cannot be executed as written."""


_MODELS = ("starfish", "viviani")
_MU_POLICIES = ("per-row", "uniform")
_INITS = ("selected", "zero")


def apply_weight_ranges(omega: np.ndarray, ranges: list[dict]) -> np.ndarray:
    """Paint 1-based inclusive index ranges onto a weight vector.

    Ranges apply in list order, so a later range wins on overlap.
    """
    omega = np.array(omega, dtype=float)
    n = omega.size
    for rng in ranges:
        try:
            lo, hi, value = int(rng["from"]), int(rng["to"]), float(rng["omega"])
        except (KeyError, TypeError, ValueError) as exc:
            raise JobConfigError(f"bad weight range {rng!r}: {exc}") from None
        if not 1 <= lo <= hi <= n:
            raise JobConfigError(
                f"weight range {lo}..{hi} outside control indices 1..{n}"
            )
        if not 0.0 <= value <= 1.0:
            raise JobConfigError(f"weight {value!r} outside [0, 1]")
        omega[lo - 1 : hi] = value
    return omega


def resolve_weights(
    spec: dict | None,
    n: int,
    data: DataSet | None = None,
    control_indices: np.ndarray | None = None,
) -> np.ndarray:
    """Turn a weight specification into a length-n vector in [0, 1]."""
    spec = dict(spec or {"omega": 0.0})
    ranges = spec.pop("ranges", [])
    base_keys = [k for k in ("omega", "vector", "rule") if k in spec]
    if len(base_keys) != 1:
        raise JobConfigError(
            "weights need exactly one of 'omega', 'vector' or 'rule'"
            f" (got {base_keys or 'none'})"
        )
    key = base_keys[0]
    if key == "omega":
        value = float(spec["omega"])
        if not 0.0 <= value <= 1.0:
            raise JobConfigError(f"omega {value!r} outside [0, 1]")
        omega = np.full(n, value)
    elif key == "vector":
        omega = np.asarray(spec["vector"], dtype=float)
        if omega.shape != (n,):
            raise JobConfigError(
                f"weight vector has {omega.size} entries for {n} controls"
            )
        if np.any(omega < 0.0) or np.any(omega > 1.0):
            raise JobConfigError("weight vector entries must lie in [0, 1]")
    else:
        rule = spec["rule"]
        if data is None or control_indices is None:
            raise JobConfigError(
                "the second-difference rule needs data-point control selection"
            )
        try:
            omega = second_difference_weights(
                data,
                control_indices,
                int(rule["high_count"]),
                float(rule["high_omega"]),
                float(rule["base_omega"]),
            )
        except (KeyError, TypeError) as exc:
            raise JobConfigError(f"bad second-difference rule: {exc}") from None
    return apply_weight_ranges(omega, ranges)


@dataclass(frozen=True)
class JobConfig:
    """One fairing job, as read from a JSON config file."""

    input: dict
    n: int | None = None
    n1: int | None = None
    n2: int | None = None
    grid: tuple[int, int] | None = None
    degree: int = 3
    r: int = 2
    weights: dict | None = None
    mu_policy: str = "per-row"
    stop: dict = field(default_factory=dict)
    init: str = "selected"
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.input, dict):
            raise JobConfigError("input must be an object")
        has_path = "path" in self.input
        has_model = "model" in self.input
        if has_path == has_model:
            raise JobConfigError(
                "input needs exactly one of 'path' or 'model'"
            )
        if has_model and self.input["model"] not in _MODELS:
            raise JobConfigError(
                f"unknown model {self.input['model']!r}; pick from {_MODELS}"
            )
        surface = self.grid is not None
        if surface:
            if self.n1 is None or self.n2 is None:
                raise JobConfigError("surface jobs need n1 and n2")
            if self.n is not None:
                raise JobConfigError("surface jobs take n1 x n2, not n")
        elif self.n is None:
            raise JobConfigError("curve jobs need n")
        if self.r not in (1, 2, 3):
            raise JobConfigError(f"smoothing order r must be 1, 2 or 3, got {self.r}")
        if self.mu_policy not in _MU_POLICIES:
            raise JobConfigError(
                f"mu_policy must be one of {_MU_POLICIES}, got {self.mu_policy!r}"
            )
        if self.init not in _INITS:
            raise JobConfigError(f"init must be one of {_INITS}, got {self.init!r}")

    @property
    def is_surface(self) -> bool:
        return self.grid is not None

    def stopping_rule(self) -> StoppingRule:
        extra = set(self.stop) - {"tol", "max_iters", "mode"}
        if extra:
            raise JobConfigError(f"unknown stop fields {sorted(extra)}")
        return StoppingRule(
            tol=float(self.stop.get("tol", 1e-6)),
            max_iters=int(self.stop.get("max_iters", 10_000)),
            mode=self.stop.get("mode", "delta"),
        )

    def to_dict(self) -> dict:
        body = {
            "input": self.input,
            "degree": self.degree,
            "r": self.r,
            "weights": self.weights,
            "mu_policy": self.mu_policy,
            "stop": self.stop,
            "init": self.init,
            "outputs": self.outputs,
        }
        if self.is_surface:
            body["n1"], body["n2"] = self.n1, self.n2
            body["grid"] = list(self.grid)
        else:
            body["n"] = self.n
        return body

    @classmethod
    def from_dict(cls, body: dict) -> "JobConfig":
        if not isinstance(body, dict):
            raise JobConfigError("job config must be a JSON object")
        known = {
            "input", "n", "n1", "n2", "grid", "degree", "r", "weights",
            "mu_policy", "stop", "init", "outputs",
        }
        extra = set(body) - known
        if extra:
            raise JobConfigError(f"unknown config fields {sorted(extra)}")
        kwargs = dict(body)
        if kwargs.get("grid") is not None:
            grid = kwargs["grid"]
            if len(grid) != 2:
                raise JobConfigError("grid must be [rows, columns]")
            kwargs["grid"] = (int(grid[0]), int(grid[1]))
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise JobConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "JobConfig":
        try:
            body = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise JobConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
        return cls.from_dict(body)


@dataclass(frozen=True)
class RunReport:
    """Outcome of one job: what ran, how it stopped, and the error trace."""

    config: dict
    m: int
    n: int
    dim: int
    iterations: int
    stop_reason: str
    initial_fit_abs: float
    final_fit_abs: float
    initial_energy_abs: float
    final_energy_abs: float
    trace: list
    diagnostics: dict
    wall_time: float | None = None
    timestamp: str | None = None

    def to_dict(self) -> dict:
        body = {
            "config": self.config,
            "m": self.m,
            "n": self.n,
            "dim": self.dim,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "initial_fit_abs": self.initial_fit_abs,
            "final_fit_abs": self.final_fit_abs,
            "initial_energy_abs": self.initial_energy_abs,
            "final_energy_abs": self.final_energy_abs,
            "trace": self.trace,
            "diagnostics": self.diagnostics,
        }
        if self.wall_time is not None:
            body["wall_time"] = self.wall_time
        if self.timestamp is not None:
            body["timestamp"] = self.timestamp
        return body

    @classmethod
    def from_dict(cls, body: dict) -> "RunReport":
        return cls(
            config=body["config"],
            m=body["m"],
            n=body["n"],
            dim=body["dim"],
            iterations=body["iterations"],
            stop_reason=body["stop_reason"],
            initial_fit_abs=body["initial_fit_abs"],
            final_fit_abs=body["final_fit_abs"],
            initial_energy_abs=body["initial_energy_abs"],
            final_energy_abs=body["final_energy_abs"],
            trace=body["trace"],
            diagnostics=body["diagnostics"],
            wall_time=body.get("wall_time"),
            timestamp=body.get("timestamp"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class JobResult:
    report: RunReport
    state: IterationState
    trace: IterationTrace
    data: DataSet
    curve: SplineCurve | None = None
    surface: SplineSurface | None = None


def _load_input(config: JobConfig) -> DataSet:
    src = config.input
    if "path" in src:
        return load_points(src["path"])
    m = int(src.get("samples", 100))
    if src["model"] == "starfish":
        return sample_starfish(m)
    return sample_viviani(
        m, float(src.get("sigma", 0.0)), int(src.get("seed", 0))
    )


def _uniform_axis(count: int) -> np.ndarray:
    return np.arange(count) / (count - 1)


def _select_axis(m: int, n: int) -> np.ndarray:
    j = np.arange(n)
    return np.floor(j * (m - 1) / (n - 1) + 0.5).astype(int)


def _curve_setup(config: JobConfig, data: DataSet):
    indices, control0 = select_initial_controls(data, config.n, config.degree)
    kv = make_knot_vector(data.params, indices, config.degree)
    omega = resolve_weights(config.weights, config.n, data, indices)
    bundle = build_curve_bundle(
        kv, data.params, data.points, WeightConfig(omega, config.r, config.mu_policy)
    )
    return bundle, control0, (kv,)


def _surface_setup(config: JobConfig, data: DataSet):
    m1, m2 = config.grid
    if data.points.shape[0] != m1 * m2:
        raise JobConfigError(
            f"grid {m1}x{m2} needs {m1 * m2} points, got {data.points.shape[0]}"
        )
    if config.weights and "rule" in config.weights:
        raise JobConfigError("the second-difference rule applies to curves only")
    s_axis, t_axis = _uniform_axis(m1), _uniform_axis(m2)
    params = np.column_stack(
        [np.repeat(s_axis, m2), np.tile(t_axis, m1)]
    )
    data = DataSet(data.points, params)
    si, tj = _select_axis(m1, config.n1), _select_axis(m2, config.n2)
    kv_s = make_knot_vector(s_axis, si, config.degree)
    kv_t = make_knot_vector(t_axis, tj, config.degree)
    grid = data.points.reshape(m1, m2, -1)
    control0 = grid[np.ix_(si, tj)].reshape(config.n1 * config.n2, -1)
    omega = resolve_weights(config.weights, config.n1 * config.n2)
    bundle = build_surface_bundle(
        kv_s, kv_t, params, data.points,
        WeightConfig(omega, config.r, config.mu_policy),
    )
    return bundle, control0, (kv_s, kv_t), data


def run_job(config: JobConfig, no_timestamp: bool = False) -> JobResult:
    """Execute a job and assemble its report.

    With no_timestamp the report omits both the timestamp and the wall
    time, making it byte-reproducible.
    """
    data = _load_input(config)
    if config.is_surface:
        bundle, control0, kvs, data = _surface_setup(config, data)
    else:
        if config.n > data.points.shape[0]:
            raise JobConfigError(
                f"n={config.n} exceeds the {data.points.shape[0]} data points"
            )
        bundle, control0, kvs = _curve_setup(config, data)
    state0 = (
        zero_state(bundle) if config.init == "zero" else initial_state(bundle, control0)
    )
    began = time.perf_counter()
    state, trace = run(state0, config.stopping_rule())
    elapsed = time.perf_counter() - began

    table = trace.table
    diag = bundle.diagnostics
    report = RunReport(
        config=config.to_dict(),
        m=data.points.shape[0],
        n=bundle.n,
        dim=data.points.shape[1],
        iterations=state.k,
        stop_reason=trace.stop_reason,
        initial_fit_abs=float(table[0, 0]),
        final_fit_abs=float(table[-1, 0]),
        initial_energy_abs=float(table[0, 1]),
        final_energy_abs=float(table[-1, 1]),
        trace=[[float(v) for v in row] for row in table],
        diagnostics={
            "inf_norm": diag.inf_norm,
            "diagonally_dominant": diag.diagonally_dominant,
            "spectral_radius": diag.spectral_radius,
            "reliable": diag.reliable,
        },
        wall_time=None if no_timestamp else elapsed,
        timestamp=None
        if no_timestamp
        else time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    )
    if config.is_surface:
        surface = SplineSurface(kvs[0], kvs[1], state.control)
        return JobResult(report, state, trace, data, surface=surface)
    curve = SplineCurve(kvs[0], state.control)
    return JobResult(report, state, trace, data, curve=curve)
