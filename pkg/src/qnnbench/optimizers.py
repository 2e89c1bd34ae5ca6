"""Derivative-free minimizers with explicit iteration/step/evaluation accounting.

Three methods cover the study grid:

* SPSA: exactly two objective evaluations per iteration, regardless of
  dimension, with the classic power-law gain sequences.
* Nelder-Mead: simplex method, optionally with dimension-adaptive
  coefficients (reflection 1, expansion 1+2/d, contraction 0.75-1/(2d),
  shrink 1-1/d).
* COBYLA-style: linear interpolation model over d+1 points minimized on a
  shrinking trust radius (the unconstrained core of Powell's method).

Iterations are outer-loop rounds; steps count accepted moves; evaluations
count objective calls. Early stopping on the best-so-far loss is available
for COBYLA and Nelder-Mead only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

OPTIMIZER_KINDS = ("cobyla", "spsa", "nelder_mead")

DEFAULT_BUDGETS = {"cobyla": 500, "spsa": 300, "nelder_mead": 250}

TERMINATED_BUDGET = "budget"
TERMINATED_EARLY_STOP = "early_stop"
TERMINATED_CONVERGENCE = "internal_convergence"

# SPSA gain-sequence exponents (standard published values).
_SPSA_ALPHA = 0.602
_SPSA_GAMMA = 0.101


@dataclass(frozen=True)
class OptimizerSpec:
    kind: str
    max_iterations: int | None = None
    early_stop_tolerance: float | None = None
    adaptive: bool = True          # nelder_mead only
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    spsa_stability: float | None = None  # A; defaults to 0.01 * budget
    rho_begin: float = 1.0
    rho_end: float = 1e-4

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.kind == "spsa" and self.early_stop_tolerance is not None:
            raise ValueError("early stopping is not supported by spsa")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.rho_end <= 0 or self.rho_begin <= self.rho_end:
            raise ValueError("need rho_begin > rho_end > 0")

    @property
    def budget(self) -> int:
        if self.max_iterations is None:
            return DEFAULT_BUDGETS[self.kind]
        return self.max_iterations


@dataclass
class OptimizeResult:
    best_point: np.ndarray
    best_value: float
    iterations_used: int
    steps_used: int
    evaluations_used: int
    loss_trace: list = field(default_factory=list)
    terminated_by: str = TERMINATED_BUDGET


class _Tracker:
    """Wraps the objective: counts calls, tracks the best-so-far point."""

    def __init__(self, f):
        self._f = f
        self.evaluations = 0
        self.best_value = math.inf
        self.best_point = None

    def __call__(self, x: np.ndarray) -> float:
        value = float(self._f(x))
        self.evaluations += 1
        if not math.isfinite(value):
            raise ValueError(f"objective returned a non-finite value: {value}")
        if value < self.best_value:
            self.best_value = value
            self.best_point = np.array(x, dtype=float)
        return value


def _check_start(theta0) -> np.ndarray:
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.ndim != 1 or theta0.size == 0:
        raise ValueError("theta0 must be a non-empty 1-D vector")
    if not np.all(np.isfinite(theta0)):
        raise ValueError("theta0 must be finite")
    return theta0


def _early_stopped(spec: OptimizerSpec, best: float) -> bool:
    return spec.early_stop_tolerance is not None and best < spec.early_stop_tolerance


def minimize_spsa(
    f, theta0, spec: OptimizerSpec, rng: np.random.Generator
) -> OptimizeResult:
    """Simultaneous-perturbation minimizer: per iteration, evaluate
    f(theta +- c_k * delta) with a Rademacher delta and step along the
    two-point gradient estimate. Uses exactly 2 evaluations per iteration."""
    if spec.kind != "spsa":
        raise ValueError("spec.kind must be 'spsa'")
    if spec.budget < 1:
        raise ValueError("spsa needs max_iterations >= 1")
    theta = _check_start(theta0).copy()
    track = _Tracker(f)
    stability = (
        spec.spsa_stability
        if spec.spsa_stability is not None
        else 0.01 * spec.budget
    )
    trace = []
    for k in range(spec.budget):
        a_k = spec.spsa_a / (k + 1 + stability) ** _SPSA_ALPHA
        c_k = spec.spsa_c / (k + 1) ** _SPSA_GAMMA
        delta = rng.integers(0, 2, size=theta.size) * 2.0 - 1.0
        f_plus = track(theta + c_k * delta)
        f_minus = track(theta - c_k * delta)
        # 1/delta_i == delta_i for Rademacher entries
        theta -= a_k * (f_plus - f_minus) / (2.0 * c_k) * delta
        trace.append(track.best_value)
    return OptimizeResult(
        best_point=track.best_point,
        best_value=track.best_value,
        iterations_used=spec.budget,
        steps_used=spec.budget,
        evaluations_used=track.evaluations,
        loss_trace=trace,
        terminated_by=TERMINATED_BUDGET,
    )


def minimize_nelder_mead(f, theta0, spec: OptimizerSpec) -> OptimizeResult:
    """Simplex minimizer with reflection/expansion/contraction/shrink moves."""
    if spec.kind != "nelder_mead":
        raise ValueError("spec.kind must be 'nelder_mead'")
    theta0 = _check_start(theta0)
    d = theta0.size
    if spec.adaptive:
        refl, expand, contract, shrink = 1.0, 1.0 + 2.0 / d, 0.75 - 1.0 / (2 * d), 1.0 - 1.0 / d
    else:
        refl, expand, contract, shrink = 1.0, 2.0, 0.5, 0.5
    track = _Tracker(f)

    # scipy-style initial simplex: bump each coordinate by 5% (or an
    # absolute nudge where the coordinate is zero).
    simplex = [theta0.copy()]
    for i in range(d):
        v = theta0.copy()
        v[i] = v[i] * 1.05 if v[i] != 0 else 0.00025
        simplex.append(v)
    values = [track(v) for v in simplex]

    x_atol = 1e-8
    f_atol = 1e-8
    iterations = 0
    steps = 0
    trace = []
    terminated = TERMINATED_BUDGET

    while iterations < spec.budget:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if _early_stopped(spec, track.best_value):
            terminated = TERMINATED_EARLY_STOP
            break
        if (
            max(abs(v - values[0]) for v in values) <= f_atol
            and max(np.max(np.abs(x - simplex[0])) for x in simplex) <= x_atol
        ):
            terminated = TERMINATED_CONVERGENCE
            break
        iterations += 1

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = centroid + refl * (centroid - worst)
        f_r = track(reflected)
        if values[0] <= f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
            steps += 1
        elif f_r < values[0]:
            expanded = centroid + expand * (reflected - centroid)
            f_e = track(expanded)
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
            steps += 1
        else:
            if f_r < values[-1]:
                contracted = centroid + contract * (reflected - centroid)
            else:
                contracted = centroid - contract * (centroid - worst)
            f_c = track(contracted)
            if f_c < min(f_r, values[-1]):
                simplex[-1], values[-1] = contracted, f_c
                steps += 1
            else:
                best = simplex[0]
                for i in range(1, d + 1):
                    simplex[i] = best + shrink * (simplex[i] - best)
                    values[i] = track(simplex[i])
                steps += 1
        trace.append(track.best_value)
    if terminated == TERMINATED_EARLY_STOP and not trace:
        trace.append(track.best_value)

    return OptimizeResult(
        best_point=track.best_point,
        best_value=track.best_value,
        iterations_used=iterations,
        steps_used=steps,
        evaluations_used=track.evaluations,
        loss_trace=trace,
        terminated_by=terminated,
    )


def minimize_cobyla(f, theta0, spec: OptimizerSpec) -> OptimizeResult:
    """Trust-region minimizer on a linear interpolation model.

    Keeps d+1 interpolation points. Each iteration fits the linear model,
    steps the best point a distance rho against the model gradient, and on
    failure halves rho (rebuilding the point set around the incumbent to
    keep the interpolation well conditioned) until rho_end is reached.
    """
    if spec.kind != "cobyla":
        raise ValueError("spec.kind must be 'cobyla'")
    theta0 = _check_start(theta0)
    d = theta0.size
    track = _Tracker(f)
    rho = spec.rho_begin

    points = [theta0.copy()] + [theta0 + rho * _unit(d, i) for i in range(d)]
    values = [track(p) for p in points]

    iterations = 0
    steps = 0
    trace = []
    terminated = TERMINATED_BUDGET

    while iterations < spec.budget:
        if _early_stopped(spec, track.best_value):
            terminated = TERMINATED_EARLY_STOP
            break
        if rho <= spec.rho_end:
            terminated = TERMINATED_CONVERGENCE
            break
        iterations += 1

        best = int(np.argmin(values))
        base, f_base = points[best], values[best]
        a = np.array([points[i] - base for i in range(d + 1) if i != best])
        b = np.array([values[i] - f_base for i in range(d + 1) if i != best])
        try:
            grad = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            grad = np.linalg.lstsq(a, b, rcond=None)[0]
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-15:
            rho, points, values = _shrink_rebuild(track, base, f_base, rho, d)
            trace.append(track.best_value)
            continue

        candidate = base - (rho / gnorm) * grad
        f_cand = track(candidate)
        if f_cand < f_base:
            worst = int(np.argmax(values))
            points[worst], values[worst] = candidate, f_cand
            steps += 1
        else:
            rho, points, values = _shrink_rebuild(track, base, f_base, rho, d)
        trace.append(track.best_value)

    return OptimizeResult(
        best_point=track.best_point,
        best_value=track.best_value,
        iterations_used=iterations,
        steps_used=steps,
        evaluations_used=track.evaluations,
        loss_trace=trace,
        terminated_by=terminated,
    )


def _unit(d: int, i: int) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return e


def _shrink_rebuild(track, base, f_base, rho, d):
    rho = rho / 2.0
    points = [base.copy()] + [base + rho * _unit(d, i) for i in range(d)]
    values = [f_base] + [track(p) for p in points[1:]]
    return rho, points, values


def minimize(f, theta0, spec: OptimizerSpec, rng: np.random.Generator | None = None):
    """Dispatch to the minimizer selected by ``spec.kind``."""
    if spec.kind == "spsa":
        if rng is None:
            raise ValueError("spsa requires a random stream")
        return minimize_spsa(f, theta0, spec, rng)
    if spec.kind == "nelder_mead":
        return minimize_nelder_mead(f, theta0, spec)
    return minimize_cobyla(f, theta0, spec)
