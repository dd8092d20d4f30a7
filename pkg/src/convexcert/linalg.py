"""Dense vector helpers, seeded pair sampling and a finite-difference gradient.

Vectors are plain 1-D float64 numpy arrays.  Randomness comes from numpy's
Philox generator (counter based); stream 0 of a seed feeds the pair sampler
and stream 1 feeds the random part of the lambda grid, so the two never
overlap and a seed fully determines a cloud.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ContractError, EvaluationError, SamplingExhaustedError

Vector = np.ndarray

BASE_LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)
MAX_CONSECUTIVE_REJECTS = 1000


def as_vector(x) -> Vector:
    v = np.array(np.atleast_1d(x), dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ContractError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"vector has non-finite components: {v}")
    return v


def dot(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ContractError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x, y))


def norm(x) -> float:
    x = np.asarray(x, dtype=float)
    return math.sqrt(float(np.dot(x, x)))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for ``seed``; distinct ``stream`` values are disjoint."""
    bitgen = np.random.Philox(int(seed))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class SampleCloud:
    """Finite stand-in for the "for all x, y" quantifier of a condition."""

    dim: int
    box_low: tuple
    box_high: tuple
    pair_count: int = 2000
    lambda_grid: tuple = BASE_LAMBDAS
    seed: int = 0
    min_separation: float = 1e-8

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ContractError("dim must be >= 1")
        low = _broadcast(self.box_low, self.dim)
        high = _broadcast(self.box_high, self.dim)
        if any(lo >= hi for lo, hi in zip(low, high)):
            raise ContractError("box_low must be < box_high coordinatewise")
        grid = tuple(float(v) for v in self.lambda_grid)
        if any(not 0.0 <= v <= 1.0 for v in grid) or 0.0 not in grid or 1.0 not in grid:
            raise ContractError("lambda_grid must lie in [0, 1] and contain both endpoints")
        if not self.min_separation > 0:
            raise ContractError("min_separation must be positive")
        if int(self.pair_count) < 1:
            raise ContractError("pair_count must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ContractError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "box_low", low)
        object.__setattr__(self, "box_high", high)
        object.__setattr__(self, "lambda_grid", grid)
        object.__setattr__(self, "pair_count", int(self.pair_count))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def default(cls, dim, seed=0, pairs=2000, box=(-2.0, 2.0), n_random_lambdas=8,
                min_separation=1e-8):
        """Default cloud: box [-2, 2]^d, endpoints-inclusive lambda grid plus seeded draws."""
        draws = make_rng(seed, stream=1).random(n_random_lambdas)
        grid = tuple(sorted(set(BASE_LAMBDAS) | {float(v) for v in draws}))
        return cls(dim=dim, box_low=box[0], box_high=box[1], pair_count=pairs,
                   lambda_grid=grid, seed=seed, min_separation=min_separation)

    def with_box(self, low, high) -> "SampleCloud":
        return SampleCloud(self.dim, low, high, self.pair_count, self.lambda_grid,
                           self.seed, self.min_separation)

    @property
    def low(self) -> np.ndarray:
        return np.array(self.box_low)

    @property
    def high(self) -> np.ndarray:
        return np.array(self.box_high)


def _broadcast(bound, dim) -> tuple:
    if np.ndim(bound) == 0:
        return (float(bound),) * int(dim)
    vals = tuple(float(v) for v in bound)
    if len(vals) != int(dim):
        raise ContractError(f"box bound has {len(vals)} entries, expected {dim}")
    return vals


@lru_cache(maxsize=64)
def pair_arrays(cloud: SampleCloud) -> tuple[np.ndarray, np.ndarray]:
    """The cloud's pairs stacked into read-only (n, d) arrays ``X`` and ``Y``."""
    rng = make_rng(cloud.seed, stream=0)
    low, high = cloud.low, cloud.high
    X = np.empty((cloud.pair_count, cloud.dim))
    Y = np.empty_like(X)
    rejects = 0
    i = 0
    while i < cloud.pair_count:
        x = rng.uniform(low, high)
        y = rng.uniform(low, high)
        if norm(x - y) >= cloud.min_separation:
            X[i], Y[i] = x, y
            i += 1
            rejects = 0
            continue
        rejects += 1
        if rejects >= MAX_CONSECUTIVE_REJECTS:
            raise SamplingExhaustedError(
                f"{rejects} consecutive pairs closer than {cloud.min_separation}")
    X.setflags(write=False)
    Y.setflags(write=False)
    return X, Y


def sample_pairs(cloud: SampleCloud) -> list[tuple[Vector, Vector]]:
    X, Y = pair_arrays(cloud)
    return [(X[i].copy(), Y[i].copy()) for i in range(cloud.pair_count)]


def default_fd_step(x) -> float:
    return 1e-5 * max(1.0, norm(x))


def fd_gradient(f, x, h: float | None = None) -> Vector:
    """Central-difference gradient of ``f`` (an Objective or plain callable)."""
    value: Callable = getattr(f, "value", f)
    x = as_vector(x)
    if h is None:
        h = default_fd_step(x)
    if not h > 0:
        raise ContractError("finite-difference step must be positive")
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        plus, minus = float(value(x + e)), float(value(x - e))
        if not (math.isfinite(plus) and math.isfinite(minus)):
            raise EvaluationError("non-finite value during finite differencing", point=x)
        g[i] = (plus - minus) / (2.0 * h)
    return g


def symmetric_eigenvalues(M, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = max(np.linalg.norm(A), 1.0)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
    return np.sort(np.diag(A))
