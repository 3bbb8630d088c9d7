"""Scenario runner.

Scenarios are JSON files naming a model, its coefficient expressions,
the deformation parameter, initial conditions with a chart tag, and a
sample grid.  ``run`` evaluates the model's closed-form solution on the
grid, integrates the same system numerically as an independent check,
and writes a CSV time series plus a JSON report.  ``compare`` sweeps the
deformation parameter and tabulates how fast the deformed flow and its
first-order truncation collapse onto the classical one.  ``invariants``
runs the randomized structure checks, ``window`` reports the validity
window of a deformed scenario.

Exit codes: 0 pass, 1 tolerance violation, 2 input error, 3 domain exit
(validity window or singular locus reached inside the grid).

Outputs are deterministic: re-running a scenario produces byte-identical
files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import canonical, deformed, invariants as invariants_mod, oracle, sis
from .canonical import BookSystem, CanonicalState, IntegrationConstants
from .deformed import DeformedBookSystem, DeformedSisSystem
from .errors import (
    BooksisError,
    ExpressionError,
    NonFiniteSampleError,
    ScenarioError,
)
from .sis import EpidemicState, MomentState, SisSystem
from .timefn import CoefficientFunction

__all__ = [
    "Scenario",
    "TrajectorySample",
    "Trajectory",
    "load_scenario",
    "run_scenario",
    "compare_scenario",
    "main",
]

EXIT_PASS = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2
EXIT_DOMAIN = 3

_MODELS = (
    "book-canonical",
    "sis",
    "sis-constant",
    "moments",
    "deformed-book",
    "deformed-sis",
)

_CHART_FOR_MODEL = {
    "book-canonical": "xy",
    "sis": "qp",
    "sis-constant": "qp",
    "moments": "moments",
    "deformed-book": "xy",
    "deformed-sis": "qp",
}

_COEFFS_FOR_MODEL = {
    "book-canonical": ("bA", "bB"),
    "sis": ("rho0", "b"),
    "sis-constant": ("rho0",),
    "moments": ("rho0",),
    "deformed-book": ("bA", "bB"),
    "deformed-sis": ("rho0", "b"),
}

_CHART_FIELDS = {
    "xy": ("x", "y"),
    "qp": ("q", "p"),
    "moments": ("mean", "variance"),
}

_RESIDUAL_DELTA = 1e-4


# --- scenario files ----------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    model: str
    coefficients: dict[str, str]
    z: float
    a: float
    chart: str
    initial: tuple[float, float]
    t_start: float
    t_end: float
    n_samples: int
    deviation_tol: float
    quadrature_tol: float
    seed: int
    name: str = "scenario"


def _as_number(value, label: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{label} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ScenarioError(f"{label} must be finite, got {value!r}")
    return v


def parse_scenario(data: dict, name: str = "scenario") -> Scenario:
    """Validate a decoded scenario document."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    known = {"model", "coefficients", "z", "a", "initial", "grid",
             "tolerances", "seed"}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")

    model = data.get("model")
    if model not in _MODELS:
        raise ScenarioError(f"model must be one of {_MODELS}, got {model!r}")

    grid = data.get("grid")
    if not isinstance(grid, dict):
        raise ScenarioError("grid must be an object with t_start/t_end/n_samples")
    t_start = _as_number(grid.get("t_start"), "grid.t_start")
    t_end = _as_number(grid.get("t_end"), "grid.t_end")
    n_samples = grid.get("n_samples")
    if not isinstance(n_samples, int) or isinstance(n_samples, bool) or n_samples < 2:
        raise ScenarioError(f"grid.n_samples must be an integer >= 2, got {n_samples!r}")
    if not t_start < t_end:
        raise ScenarioError("grid must satisfy t_start < t_end")

    coeffs = data.get("coefficients")
    if not isinstance(coeffs, dict):
        raise ScenarioError("coefficients must be an object of expression texts")
    required = _COEFFS_FOR_MODEL[model]
    optional = ("b",) if model == "sis-constant" else ()
    for key in coeffs:
        if key not in required and key not in optional:
            raise ScenarioError(f"coefficient {key!r} not used by model {model!r}")
    for key in required:
        if key not in coeffs:
            raise ScenarioError(f"model {model!r} requires coefficient {key!r}")
        if not isinstance(coeffs[key], str):
            raise ScenarioError(f"coefficient {key!r} must be expression text")

    z = _as_number(data.get("z", 0.0), "z")
    if model not in ("deformed-book", "deformed-sis") and z != 0.0:
        raise ScenarioError(f"model {model!r} is classical; z must be 0")

    a = _as_number(data.get("a", t_start), "a")
    if a != t_start:
        raise ScenarioError(
            "base point a must equal grid.t_start (constants are fitted at the "
            f"initial time); got a={a!r}, t_start={t_start!r}"
        )
    if model in ("sis-constant", "moments") and a != 0.0:
        raise ScenarioError(f"model {model!r} requires a == 0 (closed form is pinned there)")

    initial = data.get("initial")
    if not isinstance(initial, dict):
        raise ScenarioError("initial must be an object with chart/values")
    chart = initial.get("chart")
    expected_chart = _CHART_FOR_MODEL[model]
    if chart != expected_chart:
        raise ScenarioError(
            f"model {model!r} uses chart {expected_chart!r}, got {chart!r}"
        )
    values = initial.get("values")
    if not isinstance(values, list) or len(values) != 2:
        raise ScenarioError("initial.values must be a list of two numbers")
    s0 = (_as_number(values[0], "initial.values[0]"),
          _as_number(values[1], "initial.values[1]"))

    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ScenarioError("tolerances must be an object")
    deviation_tol = _as_number(tolerances.get("deviation", 1e-6), "tolerances.deviation")
    quadrature_tol = _as_number(tolerances.get("quadrature", 1e-10), "tolerances.quadrature")
    if deviation_tol <= 0.0 or quadrature_tol <= 0.0:
        raise ScenarioError("tolerances must be positive")

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError(f"seed must be an integer, got {seed!r}")

    return Scenario(
        model=model,
        coefficients={k: v for k, v in sorted(coeffs.items())},
        z=z,
        a=a,
        chart=chart,
        initial=s0,
        t_start=t_start,
        t_end=t_end,
        n_samples=n_samples,
        deviation_tol=deviation_tol,
        quadrature_tol=quadrature_tol,
        seed=seed,
        name=name,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return parse_scenario(data, name=path.stem)


# --- model adapters --------------------------------------------------------------

class ModelAdapter:
    """Uniform view of one scenario model: closed-form evaluator,
    right-hand side, companion-chart image, physicality flag."""

    companion_fields: tuple[str, str] | None = None

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.fields = _CHART_FIELDS[scenario.chart]
        self.constants: IntegrationConstants

    def _coefficient(self, key: str) -> CoefficientFunction:
        try:
            return CoefficientFunction.from_text(self.scenario.coefficients[key])
        except ExpressionError as exc:
            raise ScenarioError(f"coefficient {key!r}: {exc}") from exc

    def _constant_value(self, key: str) -> float:
        fn = self._coefficient(key)
        if not fn.is_constant():
            raise ScenarioError(
                f"model {self.scenario.model!r} needs a constant {key!r}, "
                f"got {self.scenario.coefficients[key]!r}"
            )
        return fn(self.scenario.t_start)

    # hooks -------------------------------------------------------------
    def exact_evaluator(self, tol: float) -> Callable[[float], tuple[float, float]]:
        raise NotImplementedError

    def rhs(self, t: float, state: tuple[float, float]) -> tuple[float, float]:
        raise NotImplementedError

    def companion(self, state: tuple[float, float]) -> tuple[float, float] | None:
        return None

    def physical(self, state: tuple[float, float]) -> bool:
        raise NotImplementedError

    def validity_t_max(self, horizon: float) -> float:
        return math.inf


def _canonical_companion(state: tuple[float, float]):
    try:
        e = sis.from_canonical(CanonicalState(state[0], state[1]))
    except (BooksisError, ValueError):
        return None
    return (e.q, e.p)


def _epidemic_companion(state: tuple[float, float]):
    try:
        c = sis.to_canonical(EpidemicState(state[0], state[1]))
    except (BooksisError, ValueError):
        return None
    return (c.x, c.y)


class _BookModel(ModelAdapter):
    companion_fields = ("q", "p")

    def __init__(self, scenario: Scenario):
        super().__init__(scenario)
        self.system = BookSystem(self._coefficient("bA"), self._coefficient("bB"),
                                 scenario.a)
        self.constants = canonical.fit_constants(
            self.system, scenario.t_start, CanonicalState(*scenario.initial)
        )

    def exact_evaluator(self, tol):
        evaluate = canonical.solution_evaluator(self.system, self.constants, tol)

        def at(t):
            s = evaluate(t)
            return (s.x, s.y)

        return at

    def rhs(self, t, state):
        return canonical.rhs(self.system, t, CanonicalState(state[0], state[1]))

    def companion(self, state):
        return _canonical_companion(state)

    def physical(self, state):
        image = self.companion(state)
        return image is not None and image[0] > 0.0 and image[1] > 0.0


class _SisModel(ModelAdapter):
    companion_fields = ("x", "y")

    def __init__(self, scenario: Scenario):
        super().__init__(scenario)
        self.system = SisSystem(self._coefficient("rho0"), self._coefficient("b"),
                                scenario.a)
        start = sis.to_canonical(EpidemicState(*scenario.initial))
        self.constants = IntegrationConstants(start.x, start.y)

    def exact_evaluator(self, tol):
        evaluate = sis.sis_solution_evaluator(self.system, self.constants, tol)

        def at(t):
            s = evaluate(t)
            return (s.q, s.p)

        return at

    def rhs(self, t, state):
        return sis.sis_rhs(self.system, t, EpidemicState(state[0], state[1]))

    def companion(self, state):
        return _epidemic_companion(state)

    def physical(self, state):
        return state[0] > 0.0 and state[1] > 0.0


class _SisConstantModel(ModelAdapter):
    companion_fields = ("x", "y")

    def __init__(self, scenario: Scenario):
        super().__init__(scenario)
        self.rho0_value = self._constant_value("rho0")
        if self.rho0_value == 0.0:
            raise ScenarioError("sis-constant requires rho0 != 0")
        if "b" in scenario.coefficients:
            b_fn = self._coefficient("b")
            if not b_fn.is_constant() or b_fn(scenario.t_start) != 1.0:
                raise ScenarioError("sis-constant fixes b == 1")
        self.system = SisSystem(
            CoefficientFunction.constant(self.rho0_value),
            CoefficientFunction.constant(1.0),
            scenario.a,
        )
        start = sis.to_canonical(EpidemicState(*scenario.initial))
        self.constants = IntegrationConstants(start.x, start.y)

    def exact_evaluator(self, tol):
        def at(t):
            s = sis.sis_constant_solution(self.rho0_value, self.constants, t)
            return (s.q, s.p)

        return at

    def rhs(self, t, state):
        return sis.sis_rhs(self.system, t, EpidemicState(state[0], state[1]))

    def companion(self, state):
        return _epidemic_companion(state)

    def physical(self, state):
        return state[0] > 0.0 and state[1] > 0.0


class _MomentsModel(ModelAdapter):
    companion_fields = ("q", "p")

    def __init__(self, scenario: Scenario):
        super().__init__(scenario)
        self.rho0_value = self._constant_value("rho0")
        if self.rho0_value == 0.0:
            raise ScenarioError("moments requires rho0 != 0")
        mean0, var0 = scenario.initial
        if var0 <= 0.0:
            raise ScenarioError("moments requires a positive initial variance")
        start_qp = sis.state_from_moments(MomentState(mean0, var0))
        start = sis.to_canonical(start_qp)
        self.constants = IntegrationConstants(start.x, start.y)

    def exact_evaluator(self, tol):
        def at(t):
            s = sis.sis_constant_solution(self.rho0_value, self.constants, t)
            m = sis.moments_from_state(s)
            return (m.mean, m.variance)

        return at

    def rhs(self, t, state):
        return sis.moment_rhs(self.rho0_value, MomentState(state[0], state[1]))

    def companion(self, state):
        try:
            s = sis.state_from_moments(MomentState(state[0], state[1]))
        except (BooksisError, ValueError):
            return None
        return (s.q, s.p)

    def physical(self, state):
        return state[0] > 0.0 and state[1] > 0.0


class _DeformedBookModel(ModelAdapter):
    companion_fields = ("q", "p")

    def __init__(self, scenario: Scenario):
        super().__init__(scenario)
        base = BookSystem(self._coefficient("bA"), self._coefficient("bB"), scenario.a)
        self.system = DeformedBookSystem(base, scenario.z)
        self.constants = deformed.deformed_fit_constants(
            self.system, scenario.t_start, CanonicalState(*scenario.initial)
        )

    def exact_evaluator(self, tol):
        evaluate = deformed.deformed_solution_evaluator(self.system, self.constants, tol)

        def at(t):
            s = evaluate(t)
            return (s.x, s.y)

        return at

    def rhs(self, t, state):
        return deformed.deformed_rhs(self.system, t, CanonicalState(state[0], state[1]))

    def companion(self, state):
        return _canonical_companion(state)

    def physical(self, state):
        image = self.companion(state)
        return image is not None and image[0] > 0.0 and image[1] > 0.0

    def validity_t_max(self, horizon):
        return deformed.validity_window(self.system, self.constants.c1, horizon).t_max


class _DeformedSisModel(ModelAdapter):
    companion_fields = ("x", "y")

    def __init__(self, scenario: Scenario):
        super().__init__(scenario)
        base = SisSystem(self._coefficient("rho0"), self._coefficient("b"), scenario.a)
        self.system = DeformedSisSystem(base, scenario.z)
        # the validity window lives in the canonical picture
        self._book = DeformedBookSystem(
            BookSystem(base.rho0, base.b, base.a), scenario.z
        )
        start = sis.to_canonical(EpidemicState(*scenario.initial))
        self.constants = deformed.deformed_fit_constants(
            self._book, scenario.t_start, start
        )

    def exact_evaluator(self, tol):
        evaluate = deformed.deformed_sis_solution_evaluator(
            self.system, self.constants, tol
        )

        def at(t):
            s = evaluate(t)
            return (s.q, s.p)

        return at

    def rhs(self, t, state):
        return deformed.deformed_sis_rhs(
            self.system, t, EpidemicState(state[0], state[1])
        )

    def companion(self, state):
        return _epidemic_companion(state)

    def physical(self, state):
        return state[0] > 0.0 and state[1] > 0.0

    def validity_t_max(self, horizon):
        return deformed.validity_window(self._book, self.constants.c1, horizon).t_max


_ADAPTERS = {
    "book-canonical": _BookModel,
    "sis": _SisModel,
    "sis-constant": _SisConstantModel,
    "moments": _MomentsModel,
    "deformed-book": _DeformedBookModel,
    "deformed-sis": _DeformedSisModel,
}


def build_adapter(scenario: Scenario) -> ModelAdapter:
    """Instantiate the scenario's model; domain problems with the initial
    state (e.g. on the singular locus) surface as ScenarioError."""
    try:
        return _ADAPTERS[scenario.model](scenario)
    except BooksisError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"initial state rejected: {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


# --- trajectory -----------------------------------------------------------------

@dataclass(frozen=True)
class TrajectorySample:
    t: float
    state: tuple[float, float]
    companion: tuple[float, float] | None
    deviation: float
    residual: float
    physical: bool


@dataclass(frozen=True)
class Trajectory:
    samples: list[TrajectorySample]
    metadata: dict


def _residual(adapter: ModelAdapter, evaluate, t: float,
              state: tuple[float, float]) -> float:
    """Relative defect between the finite-difference time derivative of
    the closed form and the model right-hand side."""
    d = _RESIDUAL_DELTA
    try:
        sp = evaluate(t + d)
        sm = evaluate(t - d)
        fd = ((sp[0] - sm[0]) / (2 * d), (sp[1] - sm[1]) / (2 * d))
    except BooksisError:
        try:  # fall back to a one-sided difference at a domain edge
            sm = evaluate(t - d)
            fd = ((state[0] - sm[0]) / d, (state[1] - sm[1]) / d)
        except BooksisError:
            return math.nan
    try:
        f = adapter.rhs(t, state)
    except BooksisError:
        return math.nan
    scale = max(1.0, abs(f[0]), abs(f[1]))
    return max(abs(fd[0] - f[0]), abs(fd[1] - f[1])) / scale


def run_scenario(
    path: str | Path,
    method: str = "adaptive",
    tol: float | None = None,
    out_dir: str | Path | None = None,
    fmt: str = "csv",
) -> tuple[Trajectory, dict, int]:
    """Execute one scenario; returns (trajectory, report, exit_code) and
    writes CSV/report files when ``out_dir`` is given."""
    if fmt != "csv":
        raise ScenarioError(f"unsupported output format {fmt!r}")
    scenario = load_scenario(path)
    adapter = build_adapter(scenario)
    deviation_tol = scenario.deviation_tol if tol is None else float(tol)

    grid = np.linspace(scenario.t_start, scenario.t_end, scenario.n_samples)
    t_max = adapter.validity_t_max(scenario.t_end + 1.0)
    domain_exit = None

    times = [float(t) for t in grid]
    if t_max <= scenario.t_end:
        kept = [t for t in times if t < t_max]
        skipped = [t for t in times if t >= t_max]
        domain_exit = {
            "first_failing_t": skipped[0] if skipped else t_max,
            "reason": f"validity window ends at t_max={t_max!r}",
        }
        times = kept

    evaluate = adapter.exact_evaluator(scenario.quadrature_tol)
    exact_states: list[tuple[float, float]] = []
    evaluated_times: list[float] = []
    for t in times:
        try:
            exact_states.append(evaluate(t))
        except BooksisError as exc:
            if domain_exit is None:
                domain_exit = {"first_failing_t": t, "reason": str(exc)}
            break
        evaluated_times.append(t)

    solver_stats: dict = {}
    numeric_states: list[np.ndarray] = []
    if evaluated_times:
        # cap the adaptive step so the dense-output (Hermite) error stays
        # well inside the deviation tolerance on growing trajectories
        config = oracle.IntegratorConfig(method=method, max_step=0.02)

        def vector_rhs(tv: float, v: np.ndarray) -> np.ndarray:
            a0, a1 = float(v[0]), float(v[1])
            if not (math.isfinite(a0) and math.isfinite(a1)):
                raise NonFiniteSampleError(f"non-finite trial state at t={tv!r}")
            return np.asarray(adapter.rhs(tv, (a0, a1)))

        problem = oracle.OdeProblem(
            rhs=vector_rhs,
            t0=scenario.t_start,
            state0=np.asarray(exact_states[0]),
            t_end=evaluated_times[-1],
        )
        try:
            solution = oracle.integrate_ode(problem, config, evaluated_times)
            numeric_states = [solution.states[i] for i in range(len(evaluated_times))]
            solver_stats = dict(solution.stats)
        except BooksisError as exc:
            last = getattr(exc, "last_time", scenario.t_start)
            keep = [i for i, t in enumerate(evaluated_times) if t <= last]
            if domain_exit is None:
                domain_exit = {
                    "first_failing_t": (
                        evaluated_times[len(keep)] if len(keep) < len(evaluated_times)
                        else last
                    ),
                    "reason": f"numerical integration stopped: {exc}",
                }
            evaluated_times = [evaluated_times[i] for i in keep]
            exact_states = [exact_states[i] for i in keep]
            if evaluated_times:
                solution = oracle.integrate_ode(
                    oracle.OdeProblem(
                        rhs=problem.rhs, t0=scenario.t_start,
                        state0=problem.state0, t_end=evaluated_times[-1],
                    ),
                    config, evaluated_times,
                )
                numeric_states = [solution.states[i] for i in range(len(evaluated_times))]
                solver_stats = dict(solution.stats)

    samples = []
    max_dev = 0.0
    max_res = 0.0
    for i, t in enumerate(evaluated_times):
        state = exact_states[i]
        num = numeric_states[i]
        dev = max(abs(state[0] - float(num[0])), abs(state[1] - float(num[1])))
        res = _residual(adapter, evaluate, t, state)
        max_dev = max(max_dev, dev)
        if math.isfinite(res):
            max_res = max(max_res, res)
        samples.append(
            TrajectorySample(
                t=t,
                state=state,
                companion=adapter.companion(state),
                deviation=dev,
                residual=res,
                physical=adapter.physical(state),
            )
        )

    if domain_exit is not None:
        exit_code = EXIT_DOMAIN
        result = "domain-exit"
    elif max_dev > deviation_tol:
        exit_code = EXIT_TOLERANCE
        result = "tolerance-violation"
    else:
        exit_code = EXIT_PASS
        result = "pass"

    metadata = {
        "scenario": scenario.name,
        "model": scenario.model,
        "z": scenario.z,
        "seed": scenario.seed,
        "constants": {"c1": adapter.constants.c1, "c2": adapter.constants.c2},
        "validity_t_max": None if math.isinf(t_max) else t_max,
        "method": method,
        "solver_stats": solver_stats,
        "grid": {
            "t_start": scenario.t_start,
            "t_end": scenario.t_end,
            "n_samples": scenario.n_samples,
        },
        "deviation_tolerance": deviation_tol,
        "quadrature_tolerance": scenario.quadrature_tol,
        "samples_evaluated": len(samples),
        "max_deviation": max_dev,
        "max_residual": max_res,
        "domain_exit": domain_exit,
        "result": result,
        "exit_code": exit_code,
    }
    trajectory = Trajectory(samples=samples, metadata=metadata)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(out_dir / f"{scenario.name}.csv", adapter, trajectory)
        _write_report(out_dir / f"{scenario.name}.report.json", metadata)

    return trajectory, metadata, exit_code


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, adapter: ModelAdapter, trajectory: Trajectory) -> None:
    fields = adapter.fields
    companion = adapter.companion_fields or ()
    header = ["t", *fields, *companion, "deviation", "residual", "physical"]
    lines = [",".join(header)]
    for s in trajectory.samples:
        row = [_fmt(s.t), _fmt(s.state[0]), _fmt(s.state[1])]
        if companion:
            if s.companion is None:
                row += ["nan", "nan"]
            else:
                row += [_fmt(s.companion[0]), _fmt(s.companion[1])]
        row += [_fmt(s.deviation), _fmt(s.residual), "1" if s.physical else "0"]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _write_report(path: Path, metadata: dict) -> None:
    path.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")


# --- compare ----------------------------------------------------------------------

def compare_scenario(
    path: str | Path,
    z_values: Sequence[float] | None = None,
    out_dir: str | Path | None = None,
) -> tuple[list[dict], int]:
    """Deformation sweep: for each z report the deviation of the deformed
    flow from the classical one (expected first order in z) and the
    right-hand-side residual of the first-order truncation (expected
    second order), with observed convergence orders between consecutive
    sweep entries."""
    scenario = load_scenario(path)
    if scenario.model not in ("deformed-book", "deformed-sis"):
        raise ScenarioError("compare needs a deformed-book or deformed-sis scenario")
    if z_values is None:
        if scenario.z == 0.0:
            raise ScenarioError("scenario has z == 0; pass an explicit --z-sweep")
        z_values = [scenario.z, scenario.z / 2.0, scenario.z / 4.0]
    z_values = [float(z) for z in z_values]

    grid = [float(t) for t in np.linspace(scenario.t_start, scenario.t_end,
                                          scenario.n_samples)]

    def variant(z: float) -> Scenario:
        return replace(scenario, z=z)

    # classical reference from the same initial state
    classical = build_adapter(variant(0.0))
    classical_states = _sweep_exact(classical, scenario, grid)

    rows: list[dict] = []
    for z in z_values:
        adapter = build_adapter(variant(z))
        t_max = adapter.validity_t_max(scenario.t_end + 1.0)
        if t_max <= scenario.t_end:
            raise BooksisError(
                f"z={z!r}: validity window ends at {t_max!r}, inside the grid; "
                "shrink the grid or the sweep"
            )
        states = _sweep_exact(adapter, scenario, grid)
        dev = max(
            max(abs(s[0] - c[0]), abs(s[1] - c[1]))
            for s, c in zip(states, classical_states)
        )
        res = 0.0
        for t, s in zip(grid, states):
            if scenario.model == "deformed-book":
                state = CanonicalState(s[0], s[1])
            else:
                state = EpidemicState(s[0], s[1])
            full = adapter.rhs(t, s)
            trunc = deformed.perturbed_rhs_first_order(adapter.system, t, state)
            res = max(res, abs(full[0] - trunc[0]), abs(full[1] - trunc[1]))
        rows.append({"z": z, "deviation_vs_classical": dev,
                     "first_order_residual": res})

    for i in range(len(rows) - 1):
        z0, z1 = rows[i]["z"], rows[i + 1]["z"]
        if z0 > 0 and z1 > 0 and z0 != z1:
            denom = math.log(z0 / z1)
            d0, d1 = rows[i]["deviation_vs_classical"], rows[i + 1]["deviation_vs_classical"]
            r0, r1 = rows[i]["first_order_residual"], rows[i + 1]["first_order_residual"]
            rows[i]["deviation_order"] = (
                math.log(d0 / d1) / denom if d0 > 0 and d1 > 0 else None
            )
            rows[i]["residual_order"] = (
                math.log(r0 / r1) / denom if r0 > 0 and r1 > 0 else None
            )
        else:
            rows[i]["deviation_order"] = None
            rows[i]["residual_order"] = None
    if rows:
        rows[-1]["deviation_order"] = None
        rows[-1]["residual_order"] = None

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        header = ["z", "deviation_vs_classical", "deviation_order",
                  "first_order_residual", "residual_order"]
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(
                "" if row.get(k) is None else _fmt(row[k]) for k in header
            ))
        (out_dir / f"{scenario.name}.compare.csv").write_text("\n".join(lines) + "\n")

    return rows, EXIT_PASS


def _sweep_exact(adapter: ModelAdapter, scenario: Scenario, grid: list[float]):
    evaluate = adapter.exact_evaluator(scenario.quadrature_tol)
    return [evaluate(t) for t in grid]


# --- entry point ---------------------------------------------------------------------

def _cmd_run(args) -> int:
    try:
        trajectory, metadata, code = run_scenario(
            args.scenario, method=args.method, tol=args.tol,
            out_dir=args.output, fmt=args.format,
        )
    except (ScenarioError, ExpressionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BooksisError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    md = metadata
    print(f"model={md['model']} samples={md['samples_evaluated']} "
          f"max_deviation={md['max_deviation']:.3e} "
          f"max_residual={md['max_residual']:.3e} "
          f"tol={md['deviation_tolerance']:.3e} -> {md['result']}")
    if md["domain_exit"] is not None:
        print(f"domain exit at t={md['domain_exit']['first_failing_t']!r}: "
              f"{md['domain_exit']['reason']}", file=sys.stderr)
    return code


def _cmd_compare(args) -> int:
    sweep = None
    if args.z_sweep:
        try:
            sweep = [float(part) for part in args.z_sweep.split(",") if part.strip()]
        except ValueError as exc:
            print(f"input error: bad --z-sweep: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        rows, code = compare_scenario(args.scenario, sweep, out_dir=args.output)
    except (ScenarioError, ExpressionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BooksisError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    print(f"{'z':>12} {'dev_vs_classical':>18} {'order':>7} "
          f"{'first_order_resid':>18} {'order':>7}")
    for row in rows:
        dev_order = row.get("deviation_order")
        res_order = row.get("residual_order")
        dev_text = "-" if dev_order is None else f"{dev_order:.2f}"
        res_text = "-" if res_order is None else f"{res_order:.2f}"
        print(f"{row['z']:>12.3e} {row['deviation_vs_classical']:>18.6e} "
              f"{dev_text:>7} {row['first_order_residual']:>18.6e} {res_text:>7}")
    return code


def _cmd_invariants(args) -> int:
    results = invariants_mod.run_all(seed=args.seed, count=args.count)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  samples={r.samples:<6d} "
              f"max_defect={r.max_defect:.3e}  tol={r.tolerance:.1e}  {status}")
        failed = failed or not r.passed
    return EXIT_TOLERANCE if failed else EXIT_PASS


def _cmd_window(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        adapter = build_adapter(scenario)
        horizon = args.horizon if args.horizon is not None else scenario.t_end
        if horizon <= scenario.t_start:
            raise ScenarioError("--horizon must exceed the grid start")
        t_max = adapter.validity_t_max(horizon)
    except (ScenarioError, ExpressionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BooksisError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if math.isinf(t_max):
        print(f"t_max=inf (no validity exit up to horizon {horizon!r})")
    else:
        print(f"t_max={t_max!r}")
    return EXIT_PASS


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="booksis",
        description="Exact solutions of generalized time-dependent SIS "
                    "Hamiltonian systems and their quantum deformations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and verify it")
    p_run.add_argument("scenario")
    p_run.add_argument("--tol", type=float, default=None,
                       help="override the scenario deviation tolerance")
    p_run.add_argument("--method", choices=("adaptive", "fixed"), default="adaptive")
    p_run.add_argument("--output", default=None, help="directory for CSV/report files")
    p_run.add_argument("--format", default="csv", choices=("csv",))
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="deformation-parameter sweep")
    p_cmp.add_argument("scenario")
    p_cmp.add_argument("--z-sweep", default=None,
                       help="comma-separated z values (default: z, z/2, z/4)")
    p_cmp.add_argument("--output", default=None)
    p_cmp.set_defaults(func=_cmd_compare)

    p_inv = sub.add_parser("invariants", help="randomized structure checks")
    p_inv.add_argument("--seed", type=int, default=0)
    p_inv.add_argument("--count", type=int, default=1000)
    p_inv.set_defaults(func=_cmd_invariants)

    p_win = sub.add_parser("window", help="validity window of a deformed scenario")
    p_win.add_argument("scenario")
    p_win.add_argument("--horizon", type=float, default=None)
    p_win.set_defaults(func=_cmd_window)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
