"""Fixed-step gradient descent with per-step checks of the descent and rate claims."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, DivergenceError, InvalidConstantsError, UsageError
from .linalg import Vector, as_vector
from .objectives import Objective
from .reports import PASS_TOL, normalized_margin

GAP_FLOOR = 1e-15
GAP_NOISE = 1e3 * float(np.finfo(float).eps)
DIVERGENCE_FACTOR = 1e6
TRACE_HEADER = ("iter", "value", "grad_norm", "gap_ratio")


@dataclass(frozen=True)
class GDConfig:
    step: float            # eta = 1/t
    max_iters: int = 1000
    grad_stop: float = 0.0
    record_trace: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ContractError("step must be positive")
        if self.max_iters < 1:
            raise ContractError("max_iters must be >= 1")
        if self.grad_stop < 0:
            raise ContractError("grad_stop must be nonnegative")

    @classmethod
    def from_t(cls, t: float, **kw) -> "GDConfig":
        if not t > 0:
            raise ContractError("t must be positive")
        return cls(step=1.0 / t, **kw)


@dataclass
class GDTrace:
    step: float
    iterates: list = field(default_factory=list)
    values: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    gap_ratios: list = field(default_factory=list)   # None where f(x_k) - f_bar <= gap_floor
    f_bar: Optional[float] = None
    recorded: bool = True
    converged: bool = False

    @property
    def n_iters(self) -> int:
        return len(self.values) - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, (v, g) in enumerate(zip(self.values, self.grad_norms)):
            ratio = self.gap_ratios[k - 1] if k > 0 and k - 1 < len(self.gap_ratios) else None
            w.writerow([k, repr(float(v)), repr(float(g)), "" if ratio is None else repr(ratio)])
        return buf.getvalue()


def gd_step(f: Objective, x, step: float) -> Vector:
    if not step > 0:
        raise ContractError("step must be positive")
    x = np.asarray(x, dtype=float)
    return x - step * f.gradient(x)


def model_argmin(f: Objective, x, t: float) -> Vector:
    """Minimizer of f(x) + <grad f(x), z - x> + t/2 ||z - x||^2 over z."""
    if not t > 0:
        raise ContractError("t must be positive")
    x = np.asarray(x, dtype=float)
    return x - (1.0 / t) * f.gradient(x)


def gap_floor(f_bar: float) -> float:
    """Smallest gap f(x_k) - f_bar whose ratio is still above rounding noise.

    The absolute floor 1e-15 suffices when f_bar = 0; for a nonzero optimum the
    gap is a difference of two numbers of size |f_bar| and inherits their
    rounding, so the floor grows with |f_bar|.
    """
    return max(GAP_FLOOR, GAP_NOISE * abs(f_bar))


def _gap_ratio(prev, cur, f_bar):
    denom = prev - f_bar
    if denom <= gap_floor(f_bar):
        return None
    return (cur - f_bar) / denom


def gd_run(f: Objective, x0, cfg: GDConfig, f_bar: Optional[float] = None) -> GDTrace:
    """Iterate x <- x - step*grad f(x) until max_iters or ||grad f|| <= grad_stop."""
    x = as_vector(x0)
    v0 = f.value(x)
    g = f.gradient(x)
    trace = GDTrace(step=cfg.step, f_bar=f_bar, recorded=cfg.record_trace)
    trace.iterates.append(x)
    trace.values.append(v0)
    trace.grad_norms.append(float(np.linalg.norm(g)))
    limit = v0 + DIVERGENCE_FACTOR * max(1.0, abs(v0))
    for _ in range(cfg.max_iters):
        if trace.grad_norms[-1] <= cfg.grad_stop:
            trace.converged = True
            break
        x = x - cfg.step * g
        v = f.value(x)
        g = f.gradient(x)
        prev = trace.values[-1]
        if cfg.record_trace:
            trace.iterates.append(x)
        trace.values.append(v)
        trace.grad_norms.append(float(np.linalg.norm(g)))
        if f_bar is not None:
            trace.gap_ratios.append(_gap_ratio(prev, v, f_bar))
        if v > limit:
            raise DivergenceError(
                f"{f.name}: value {v:.3e} exceeds start value {v0:.3e} by more than "
                f"{DIVERGENCE_FACTOR:g} relative", trace=trace)
    else:
        trace.converged = trace.grad_norms[-1] <= cfg.grad_stop
    if not cfg.record_trace:
        trace.iterates = [x]
    return trace


def presolve_optimum(f: Objective, x0, L: float, iters: int = 100_000,
                     tol: float = 1e-13) -> float:
    """High-accuracy estimate of the optimal value by GD at step 1/L."""
    tr = gd_run(f, x0, GDConfig(step=1.0 / L, max_iters=iters, grad_stop=tol, record_trace=False))
    return float(tr.values[-1])


@dataclass(frozen=True)
class DescentReport:
    L: float
    n_steps: int
    step1_pass: bool
    step1_worst_margin: float
    step1_worst_index: int
    step3_checked: bool
    step3_pass: bool
    step3_worst_margin: float
    step3_worst_index: int


def descent_bounds(trace: GDTrace, L: float) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides of the one-step decrease bounds for every step of a trace.

    STEP1: f(x_k) - ||grad f(x_k)||^2 / 2L
    STEP3: STEP1 - ||grad f(x_{k+1})||^2 / 2L  (valid for convex f)
    """
    v = np.asarray(trace.values, dtype=float)
    g = np.asarray(trace.grad_norms, dtype=float)
    step1 = v[:-1] - g[:-1] ** 2 / (2 * L)
    step3 = step1 - g[1:] ** 2 / (2 * L)
    return step1, step3


def verify_descent_inequalities(f: Objective, L: float, trace: GDTrace,
                                tol: float = PASS_TOL) -> DescentReport:
    if not L > 0:
        raise UsageError("L must be positive")
    if not trace.recorded or len(trace.iterates) != len(trace.values):
        raise UsageError("trace was not recorded with iterates")
    if abs(trace.step * L - 1.0) > 1e-12:
        raise UsageError(f"trace step {trace.step} does not match 1/L = {1.0 / L}")
    if trace.n_iters < 1:
        raise UsageError("trace has no steps")
    after = np.asarray(trace.values[1:], dtype=float)
    step1, step3 = descent_bounds(trace, L)
    m1 = normalized_margin(after, step1)
    i1 = int(np.argmin(m1))
    checked = bool(f.meta.is_convex)
    if checked:
        m3 = normalized_margin(after, step3)
        i3 = int(np.argmin(m3))
        w3 = float(m3[i3])
    else:
        i3, w3 = -1, float("nan")
    return DescentReport(L, trace.n_iters, float(m1[i1]) >= -tol, float(m1[i1]), i1,
                         checked, (w3 >= -tol) if checked else False, w3, i3)


@dataclass(frozen=True)
class RatePair:
    standard: float   # 1 - nu/L
    improved: float   # (L - nu)/(L + nu), needs convexity on top of smoothness + PL


def compare_rates(L: float, nu: float) -> RatePair:
    if not (L > 0 and nu > 0):
        raise InvalidConstantsError("L and nu must be positive")
    if nu > L:
        raise InvalidConstantsError(f"nu={nu} exceeds L={L}")
    return RatePair(1.0 - nu / L, (L - nu) / (L + nu))


@dataclass(frozen=True)
class RateReport:
    factor: float
    passed: bool
    worst_ratio: float
    worst_index: int
    n_ratios: int


def verify_rate(trace: GDTrace, factor: float, tol: float = PASS_TOL) -> RateReport:
    """Every recorded gap ratio must be <= factor (+ tol)."""
    ratios = [(k, r) for k, r in enumerate(trace.gap_ratios) if r is not None]
    if not ratios:
        raise UsageError("trace has no gap ratios (f_bar missing or already optimal)")
    k, worst = max(ratios, key=lambda kr: kr[1])
    return RateReport(factor, worst <= factor + tol, float(worst), k, len(ratios))
