"""Catalog of differentiable test objectives with analytic gradients.

Every objective carries ground-truth metadata (smoothness, strong convexity
and PL constants, optimal value) that the certifier and the GD engine use as
oracles.  Objectives only close over immutable data.

Catalog names (used by the CLI)::

    phi0[:d]                       1/2 ||x||^2 in R^d (default d = 2)
    negative_phi0[:d]              -1/2 ||x||^2
    quartic_1d                     x^4 on R
    quadratic:diag:a1,...,ad[:b:b1,...,bd]
    quadratic:full:q11,q12,...,qdd[:b:b1,...,bd]      (row-major, d*d entries)
    least_squares:MxN:a11,...,aMN[:b:b1,...,bM]       (row-major, M*N entries)
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError, InvalidObjectiveError, UsageError
from .linalg import Vector, symmetric_eigenvalues

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class ObjectiveMeta:
    is_convex: bool = False
    L_true: Optional[float] = None
    mu_true: Optional[float] = None
    pl_true: Optional[float] = None
    f_star: Optional[float] = None
    minimizer: Optional[Vector] = None
    conjugate_well_posed: bool = False
    analytic_conjugate: Optional[Callable[[Vector], float]] = None

    def __post_init__(self):
        for name in ("L_true", "mu_true", "pl_true"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InvalidObjectiveError(f"{name} must be nonnegative, got {v}")
        if self.mu_true is not None and self.mu_true > 0:
            if not (self.is_convex and self.conjugate_well_posed):
                raise InvalidObjectiveError("mu_true > 0 requires a convex, conjugate-well-posed objective")
        if self.L_true is not None and self.mu_true is not None and self.mu_true > self.L_true:
            raise InvalidObjectiveError("mu_true must not exceed L_true")
        if self.L_true is not None and self.pl_true is not None and self.pl_true > self.L_true:
            raise InvalidObjectiveError("pl_true must not exceed L_true")


@dataclass(frozen=True)
class Objective:
    name: str
    dim: int
    value_fn: Callable[[Vector], float] = field(repr=False)
    gradient_fn: Callable[[Vector], Vector] = field(repr=False)
    meta: ObjectiveMeta = field(default_factory=ObjectiveMeta)

    def value(self, x) -> float:
        v = float(self.value_fn(np.asarray(x, dtype=float)))
        if not math.isfinite(v):
            raise EvaluationError(f"{self.name}: non-finite value", point=np.array(x))
        return v

    def gradient(self, x) -> Vector:
        g = np.asarray(self.gradient_fn(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(g)):
            raise EvaluationError(f"{self.name}: non-finite gradient", point=np.array(x))
        return g

    __call__ = value


class ShiftMode(enum.Enum):
    L_MINUS_F = "L_MINUS_F"    # alpha * phi0 - f
    F_MINUS_MU = "F_MINUS_MU"  # f - alpha * phi0


def _square(Q) -> np.ndarray:
    Q = np.array(Q, dtype=float)
    if Q.ndim == 1:
        d = math.isqrt(Q.size)
        if d * d != Q.size or d == 0:
            raise InvalidObjectiveError(f"{Q.size} entries do not form a square matrix")
        Q = Q.reshape(d, d)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise InvalidObjectiveError(f"expected a square matrix, got shape {Q.shape}")
    return Q


def _spectral_meta(H, c, value_at):
    """Metadata for the convex quadratic 1/2 x'Hx - c'x + const (H PSD)."""
    ev = symmetric_eigenvalues(H)
    L = max(float(ev[-1]), 0.0)
    pos_tol = PSD_TOL * max(1.0, L)
    mu = float(ev[0]) if ev[0] > pos_tol else 0.0
    xstar, *_ = np.linalg.lstsq(H, c, rcond=None)
    consistent = np.linalg.norm(H @ xstar - c) <= 1e-9 * max(1.0, float(np.linalg.norm(c)))
    positive = [float(v) for v in ev if v > pos_tol]
    pl = positive[0] if consistent and positive else None
    if consistent:
        xstar.setflags(write=False)
        return ev, dict(L_true=L, mu_true=mu, pl_true=pl, f_star=value_at(xstar),
                        minimizer=xstar)
    return ev, dict(L_true=L, mu_true=mu, pl_true=None, f_star=None, minimizer=None)


def make_quadratic(Q, b=None, name: str | None = None) -> Objective:
    """1/2 x'Qx - b'x for symmetric positive semi-definite Q."""
    Q = _square(Q)
    d = Q.shape[0]
    b = np.zeros(d) if b is None else np.array(b, dtype=float).reshape(-1)
    if b.size != d:
        raise InvalidObjectiveError(f"b has {b.size} entries, Q is {d}x{d}")
    scale = max(1.0, float(np.max(np.abs(Q))))
    if np.max(np.abs(Q - Q.T)) > SYMMETRY_TOL * scale:
        raise InvalidObjectiveError("Q is not symmetric")
    Q = 0.5 * (Q + Q.T)
    Q.setflags(write=False)
    b.setflags(write=False)

    def value(x):
        return 0.5 * float(x @ Q @ x) - float(b @ x)

    def gradient(x):
        return Q @ x - b

    ev, spec = _spectral_meta(Q, b, value)
    if ev[0] < -PSD_TOL * scale:
        raise InvalidObjectiveError(f"Q has negative eigenvalue {ev[0]}")
    well_posed = spec["mu_true"] > 0
    conj = None
    if well_posed and not np.any(b):
        conj = lambda u: 0.5 * float(u @ np.linalg.solve(Q, u))  # noqa: E731
    meta = ObjectiveMeta(is_convex=True, conjugate_well_posed=well_posed,
                         analytic_conjugate=conj, **spec)
    if name is None:
        name = "quadratic:full:" + ",".join(_fmt(v) for v in Q.reshape(-1))
        if np.any(b):
            name += ":b:" + ",".join(_fmt(v) for v in b)
    return Objective(name, d, value, gradient, meta)


def make_phi0(dim: int = 2) -> Objective:
    """The reference function 1/2 ||x||^2."""
    q = make_quadratic(np.eye(dim), name=f"phi0:{dim}")
    return Objective(q.name, dim, lambda x: 0.5 * float(x @ x), lambda x: np.array(x, dtype=float),
                     q.meta)


def make_least_squares(A, b, name: str | None = None) -> Objective:
    """1/2 ||Ax - b||^2; PL with the smallest positive eigenvalue of A'A even when singular."""
    A = np.array(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise InvalidObjectiveError(f"A must be a non-empty matrix, got shape {A.shape}")
    b = np.array(b, dtype=float).reshape(-1)
    if b.size != A.shape[0]:
        raise InvalidObjectiveError(f"b has {b.size} entries, A has {A.shape[0]} rows")
    A.setflags(write=False)
    b.setflags(write=False)

    def value(x):
        r = A @ x - b
        return 0.5 * float(r @ r)

    def gradient(x):
        return A.T @ (A @ x - b)

    _, spec = _spectral_meta(A.T @ A, A.T @ b, value)
    well_posed = spec["mu_true"] > 0
    meta = ObjectiveMeta(is_convex=True, conjugate_well_posed=well_posed, **spec)
    if name is None:
        m, n = A.shape
        name = f"least_squares:{m}x{n}:" + ",".join(_fmt(v) for v in A.reshape(-1))
        name += ":b:" + ",".join(_fmt(v) for v in b)
    return Objective(name, A.shape[1], value, gradient, meta)


def make_quartic_1d() -> Objective:
    """x^4: convex, but no global L, so smoothness claims fail on large enough boxes."""
    meta = ObjectiveMeta(is_convex=True, mu_true=0.0, f_star=0.0, minimizer=np.zeros(1))
    return Objective("quartic_1d", 1, lambda x: float(x[0]) ** 4,
                     lambda x: np.array([4.0 * float(x[0]) ** 3]), meta)


def make_negative_phi0(dim: int = 2) -> Objective:
    """-1/2 ||x||^2: 1-smooth in the Bregman sense yet concave."""
    meta = ObjectiveMeta(is_convex=False, L_true=1.0)
    return Objective(f"negative_phi0:{dim}", dim, lambda x: -0.5 * float(x @ x),
                     lambda x: -np.array(x, dtype=float), meta)


def scaled_shift(f: Objective, alpha: float, mode: ShiftMode) -> Objective:
    """alpha*phi0 - f or f - alpha*phi0; the result carries empty metadata."""
    if alpha < 0:
        raise InvalidObjectiveError("alpha must be nonnegative")
    alpha = float(alpha)
    mode = ShiftMode(mode)
    if mode is ShiftMode.L_MINUS_F:
        value = lambda x: 0.5 * alpha * float(x @ x) - f.value(x)  # noqa: E731
        gradient = lambda x: alpha * x - f.gradient(x)  # noqa: E731
        name = f"{_fmt(alpha)}*phi0-({f.name})"
    else:
        value = lambda x: f.value(x) - 0.5 * alpha * float(x @ x)  # noqa: E731
        gradient = lambda x: f.gradient(x) - alpha * x  # noqa: E731
        name = f"({f.name})-{_fmt(alpha)}*phi0"
    return Objective(name, f.dim, value, gradient)


def scaled(f: Objective, gamma: float) -> Objective:
    """gamma * f with empty metadata."""
    gamma = float(gamma)
    return Objective(f"{_fmt(gamma)}*({f.name})", f.dim, lambda x: gamma * f.value(x),
                     lambda x: gamma * f.gradient(x))


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def _reals(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed real list {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"non-finite entry in {text!r}")
    return vals


def _dim(parts: list[str]) -> int:
    if not parts:
        return 2
    if len(parts) != 1 or not parts[0].isdigit() or int(parts[0]) < 1:
        raise UsageError(f"expected a positive dimension, got {':'.join(parts)!r}")
    return int(parts[0])


def _linear_term(parts: list[str]) -> Optional[list[float]]:
    if not parts:
        return None
    if len(parts) != 2 or parts[0] != "b":
        raise UsageError(f"expected ':b:<reals>' suffix, got {':'.join(parts)!r}")
    return _reals(parts[1])


def parse_function_spec(spec: str) -> Objective:
    """Build a catalog objective from its name (grammar in the module docstring)."""
    kind, *parts = spec.strip().split(":")
    try:
        if kind == "phi0":
            return make_phi0(_dim(parts))
        if kind == "negative_phi0":
            return make_negative_phi0(_dim(parts))
        if kind == "quartic_1d":
            if parts:
                raise UsageError("quartic_1d takes no parameters")
            return make_quartic_1d()
        if kind == "quadratic":
            if len(parts) < 2 or parts[0] not in ("diag", "full"):
                raise UsageError("quadratic needs 'diag:<reals>' or 'full:<reals>'")
            vals = _reals(parts[1])
            Q = np.diag(vals) if parts[0] == "diag" else vals
            return make_quadratic(Q, _linear_term(parts[2:]), name=spec.strip())
        if kind == "least_squares":
            if len(parts) < 2:
                raise UsageError("least_squares needs '<M>x<N>:<reals>'")
            try:
                m, n = (int(t) for t in parts[0].split("x"))
            except ValueError:
                raise UsageError(f"malformed shape {parts[0]!r}") from None
            vals = _reals(parts[1])
            if m < 1 or n < 1 or len(vals) != m * n:
                raise UsageError(f"shape {m}x{n} needs {m * n} entries, got {len(vals)}")
            b = _linear_term(parts[2:])
            return make_least_squares(np.reshape(vals, (m, n)), np.zeros(m) if b is None else b,
                                      name=spec.strip())
    except InvalidObjectiveError as exc:
        raise UsageError(f"invalid objective {spec!r}: {exc}") from exc
    raise UsageError(f"unknown function kind {kind!r} in {spec!r}")
