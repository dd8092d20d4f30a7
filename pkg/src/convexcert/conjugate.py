"""Numeric and closed-form Fenchel conjugates, and the smooth/strong duality switch."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (ContractError, EvaluationError, IllPosedConjugateError,
                     NonConvergenceError, SingularMatrixError)
from .linalg import SampleCloud, Vector, as_vector, pair_arrays, symmetric_eigenvalues
from .objectives import Objective, ShiftMode, scaled_shift
from .reports import ConditionId, CertReport, normalized_margin, reduce_margins

SUFFICIENT_INCREASE = 1e-4
MAX_HALVINGS = 60


@dataclass(frozen=True)
class ConjugateSolverParams:
    grad_tol: float = 1e-10
    max_iters: int = 10_000
    initial_step: float = 1.0

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ContractError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ContractError("max_iters must be >= 1")
        if not self.initial_step > 0:
            raise ContractError("initial_step must be positive")


DEFAULT_PARAMS = ConjugateSolverParams()


def _require_well_posed(f: Objective):
    if not f.meta.conjugate_well_posed:
        raise IllPosedConjugateError(
            f"{f.name}: conjugate is not known to be finite and differentiable")


def conjugate_numeric(f: Objective, u, params: ConjugateSolverParams | None = None,
                      x0=None) -> tuple[float, Vector]:
    """Maximize <x, u> - f(x) by gradient ascent with halving backtracking.

    Starts from ``x0`` (default: ``u`` itself).  The first trial step of each
    line search is the Barzilai-Borwein step from the previous move (the
    configured initial_step on the first iteration); the Armijo test keeps the
    ascent monotone.  Returns the maximal value and the maximizer, which is
    grad f*(u).
    """
    _require_well_posed(f)
    params = params or DEFAULT_PARAMS
    u = as_vector(u)
    x = u.copy() if x0 is None else as_vector(x0).copy()

    def concave(z):
        return float(z @ u) - f.value(z)

    gx = concave(x)
    d = u - f.gradient(x)
    r = math.sqrt(float(d @ d))
    best, best_r = x, r
    trial = params.initial_step
    for _ in range(params.max_iters):
        if r <= params.grad_tol:
            return gx, x
        s = trial
        for _ in range(MAX_HALVINGS):
            xn = x + s * d
            try:
                gn = concave(xn)
                dn = u - f.gradient(xn)
            except EvaluationError:
                s *= 0.5
                continue
            rn = math.sqrt(float(dn @ dn))
            if gn >= gx + SUFFICIENT_INCREASE * s * r * r:
                break
            # near the optimum the increase drowns in rounding; fall back to residual decrease
            noise = 64 * np.finfo(float).eps * (abs(float(xn @ u)) + abs(gn - float(xn @ u)) + 1.0)
            if abs(gn - gx) <= noise and rn < r:
                break
            s *= 0.5
        else:
            raise NonConvergenceError(f"{f.name}: line search stalled at residual {best_r:.3e}",
                                      best=best, grad_residual=best_r)
        dx, dd = xn - x, dn - d
        curv = -float(dx @ dd)
        trial = float(dx @ dx) / curv if curv > 0 else params.initial_step
        x, gx, d, r = xn, gn, dn, rn
        if r < best_r:
            best, best_r = x, r
    if r <= params.grad_tol:
        return gx, x
    raise NonConvergenceError(
        f"{f.name}: {params.max_iters} iterations, residual {best_r:.3e} > {params.grad_tol}",
        best=best, grad_residual=best_r)


def conjugate_quadratic(Q, u) -> float:
    """Closed form 1/2 u'Q^{-1}u of the conjugate of 1/2 x'Qx."""
    Q = np.array(Q, dtype=float)
    u = as_vector(u)
    if Q.ndim != 2 or Q.shape != (u.size, u.size):
        raise ContractError(f"Q of shape {Q.shape} does not match u of size {u.size}")
    if np.max(np.abs(Q - Q.T)) > 1e-10 * max(1.0, float(np.max(np.abs(Q)))):
        raise ContractError("Q is not symmetric")
    ev = symmetric_eigenvalues(Q)
    if ev[0] <= 1e-12 * max(1.0, abs(float(ev[-1]))):
        if ev[0] < -1e-12 * max(1.0, abs(float(ev[-1]))):
            raise ContractError(f"Q is not positive definite (eigenvalue {ev[0]})")
        raise SingularMatrixError(f"Q is singular (smallest eigenvalue {ev[0]})")
    return 0.5 * float(u @ np.linalg.solve(Q, u))


def inverse_gradient(f: Objective, u, params: ConjugateSolverParams | None = None,
                     x0=None) -> Vector:
    """grad f*(u), obtained as the maximizer of the conjugate problem."""
    return conjugate_numeric(f, u, params, x0)[1]


def fenchel_identity_residual(f: Objective, x, params: ConjugateSolverParams | None = None) -> float:
    """|f(x) + f*(grad f(x)) - <x, grad f(x)>|, with f* solved numerically."""
    x = as_vector(x)
    g = f.gradient(x)
    fstar, _ = conjugate_numeric(f, g, params)
    return abs(f.value(x) + fstar - float(x @ g))


def dual_shift_check(f: Objective, gamma: float, cloud: SampleCloud,
                     params: ConjugateSolverParams | None = None) -> tuple[CertReport, CertReport]:
    """Monotonicity of grad(gamma*phi0 - f) on the cloud vs. of grad(f* - phi0/gamma) on its image.

    The dual cloud is the gradient image of the primal pairs, and grad f* is
    solved numerically at every dual point.
    """
    _require_well_posed(f)
    if not gamma > 0:
        raise ContractError("gamma must be positive")
    X, Y = pair_arrays(cloud)
    consts = {"gamma": float(gamma)}

    h = scaled_shift(f, gamma, ShiftMode.L_MINUS_F)
    HX = np.array([h.gradient(x) for x in X])
    HY = np.array([h.gradient(y) for y in Y])
    margins = normalized_margin(0.0, np.einsum("ij,ij->i", HX - HY, X - Y))
    primal = reduce_margins(ConditionId.CONV2, consts, margins, X, Y, seed=cloud.seed,
                            note="primal: gamma*phi0 - f")

    U = np.array([f.gradient(x) for x in X])
    V = np.array([f.gradient(y) for y in Y])
    keep = np.linalg.norm(U - V, axis=1) >= cloud.min_separation
    U, V = U[keep], V[keep]
    KU = np.array([inverse_gradient(f, u, params) - u / gamma for u in U]).reshape(U.shape)
    KV = np.array([inverse_gradient(f, v, params) - v / gamma for v in V]).reshape(V.shape)
    margins = normalized_margin(0.0, np.einsum("ij,ij->i", KU - KV, U - V))
    dual = reduce_margins(ConditionId.CONV2, consts, margins, U, V, seed=cloud.seed,
                          n_skipped=int(np.count_nonzero(~keep)),
                          note="dual: f* - phi0/gamma on grad-image points")
    return primal, dual
