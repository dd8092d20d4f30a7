"""Sampled certification of the convexity / smoothness / strong-convexity characterizations.

Every condition is written as ``lhs <= rhs`` and evaluated on all pairs of a
:class:`SampleCloud` (and every lambda of its grid, where the condition has
one).  The normalized margin ``(rhs - lhs) / max(1, |lhs|, |rhs|)`` is reduced
to its minimum; a condition passes when that minimum is >= -1e-9.

Dual conditions (DSM*, DSC*) live on the gradient image of the cloud:
``u = grad f(x)``, ``v = grad f(y)``.  There ``grad f*(u) = x`` and
``f*(u) = <x, u> - f(x)`` hold exactly, while ``f*`` at the interpolated
points ``lam*u + (1-lam)*v`` is solved numerically.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conjugate import ConjugateSolverParams, conjugate_numeric
from .errors import (ConvexCertError, DegenerateInterpolationError, EvaluationError,
                     IllPosedConjugateError, InconsistentOptimumError, UsageError)
from .linalg import SampleCloud, pair_arrays
from .objectives import Objective
from .reports import (ASYMMETRIC, PASS_TOL, CertReport, ConditionId, normalized_margin,
                      reduce_margins)

C = ConditionId

REFINE_STEPS = 200
PL_GAP_FLOOR = 1e-12
OPTIMUM_SLACK = 1e-9
EPS = float(np.finfo(float).eps)


class Family(str, enum.Enum):
    SMOOTH = "SMOOTH"
    STRONG = "STRONG"
    CONVEX = "CONVEX"
    JOINT = "JOINT"


FAMILY_MEMBERS = {
    Family.SMOOTH: (C.SM1, C.SM2, C.SM3, C.PSM1, C.PSM2, C.PSM3, C.DSM1, C.DSM2, C.DSM3, C.BRE_UP),
    Family.STRONG: (C.SC1, C.SC2, C.SC3, C.PSC1, C.PSC2, C.PSC3, C.DSC1, C.DSC2, C.DSC3, C.BRE_LO),
    Family.CONVEX: (C.CONV1, C.CONV2, C.CONV3),
    Family.JOINT: (C.SMSC1, C.SMSC2),
}

_ALIASES = {"L": "L", "mu": "mu", "nu": "nu", "f_bar": "f_bar", "fbar": "f_bar"}


def _rowdot(a, b):
    return np.einsum("ij,ij->i", a, b)


class _Samples:
    """Function data on a set of ordered pairs, computed once and shared by conditions."""

    def __init__(self, f, X, Y, FX=None, FY=None, GX=None, GY=None, min_separation=0.0):
        self.f = f
        self.min_separation = min_separation
        self.X, self.Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
        self.FX = np.array([f.value(x) for x in self.X]) if FX is None else FX
        self.FY = np.array([f.value(y) for y in self.Y]) if FY is None else FY
        self.GX = np.array([f.gradient(x) for x in self.X]).reshape(self.X.shape) if GX is None else GX
        self.GY = np.array([f.gradient(y) for y in self.Y]).reshape(self.Y.shape) if GY is None else GY
        self._interp = {}
        self._dual_interp = {}
        self._swapped = None

    def swapped(self) -> "_Samples":
        """Both orderings: rows (x, y) followed by rows (y, x)."""
        if self._swapped is None:
            cat = np.concatenate
            self._swapped = _Samples(self.f, cat([self.X, self.Y]), cat([self.Y, self.X]),
                                     cat([self.FX, self.FY]), cat([self.FY, self.FX]),
                                     cat([self.GX, self.GY]), cat([self.GY, self.GX]),
                                     self.min_separation)
        return self._swapped

    @property
    def d(self):
        return self.X - self.Y

    @property
    def gd(self):
        return self.GX - self.GY

    @property
    def nd2(self):
        return _rowdot(self.d, self.d)

    @property
    def ng2(self):
        return _rowdot(self.gd, self.gd)

    @property
    def ip(self):
        return _rowdot(self.gd, self.d)

    @property
    def lin(self):
        """First-order model at x evaluated at y: f(x) + <grad f(x), y - x>."""
        return self.FX + _rowdot(self.GX, self.Y - self.X)

    @property
    def conj_x(self):
        return _rowdot(self.X, self.GX) - self.FX

    @property
    def conj_y(self):
        return _rowdot(self.Y, self.GY) - self.FY

    def interp(self, lam: float) -> np.ndarray:
        if lam not in self._interp:
            Z = lam * self.X + (1.0 - lam) * self.Y
            self._interp[lam] = np.array([self.f.value(z) for z in Z])
        return self._interp[lam]

    def dual_interp(self, lam: float, params) -> np.ndarray:
        if lam == 1.0:
            return self.conj_x
        if lam == 0.0:
            return self.conj_y
        if lam not in self._dual_interp:
            U = lam * self.GX + (1.0 - lam) * self.GY
            Z = lam * self.X + (1.0 - lam) * self.Y
            self._dual_interp[lam] = np.array(
                [conjugate_numeric(self.f, u, params, x0=z)[0] for u, z in zip(U, Z)])
        return self._dual_interp[lam]

    def subset(self, mask) -> "_Samples":
        return _Samples(self.f, self.X[mask], self.Y[mask], self.FX[mask], self.FY[mask],
                        self.GX[mask], self.GY[mask], self.min_separation)


def _normalize_constants(constants) -> dict:
    out = {}
    for key, val in (constants or {}).items():
        if val is None:
            continue
        if key not in _ALIASES:
            raise UsageError(f"unknown constant {key!r}")
        val = float(val)
        if not math.isfinite(val):
            raise UsageError(f"constant {key} must be finite")
        out[_ALIASES[key]] = val
    return out


def _validate(f: Objective, cond: ConditionId, c: dict):
    missing = [k for k in cond.required_constants if k not in c]
    if missing:
        raise UsageError(f"{cond.value} requires constant(s) {', '.join(missing)}")
    name = cond.value
    if c.get("L", 0.0) < 0 or c.get("mu", 0.0) < 0 or c.get("nu", 0.0) < 0:
        raise UsageError("constants L, mu, nu must be nonnegative")
    if name.startswith(("PSM", "DSM", "SMSC")) and c["L"] <= 0:
        raise UsageError(f"{name} requires L > 0")
    if name.startswith(("PSC", "DSC")) and c["mu"] <= 0:
        raise UsageError(f"{name} requires mu > 0")
    if cond is C.SMSC2 and c["L"] <= c["mu"] + 1e-12:
        raise DegenerateInterpolationError(
            f"SMSC2 needs L > mu strictly (got L={c['L']}, mu={c['mu']})")
    if cond.is_dual and not f.meta.conjugate_well_posed:
        raise IllPosedConjugateError(f"{name} needs a conjugate-well-posed objective")


def _lambda_margins(grid, fn):
    return np.stack([fn(lam) for lam in grid], axis=1)


def _margins(cond: ConditionId, s: _Samples, c: dict, grid, params, swap=True):
    """(margins, X, Y, lambdas, n_skipped) for one condition on prepared samples."""
    if swap and cond in ASYMMETRIC:
        s = s.swapped()
    L, mu = c.get("L"), c.get("mu")
    skipped = 0
    if cond.is_dual:
        keep = np.sqrt(s.ng2) >= s.min_separation
        skipped = int(np.count_nonzero(~keep))
        if skipped:
            s = s.subset(keep)

    def w(lam):
        return lam * s.FX + (1.0 - lam) * s.FY

    def wc(lam):
        return lam * s.conj_x + (1.0 - lam) * s.conj_y

    if cond is C.CONV1:
        m = _lambda_margins(grid, lambda t: normalized_margin(s.interp(t), w(t)))
    elif cond is C.CONV2:
        m = normalized_margin(0.0, s.ip)
    elif cond is C.CONV3:
        m = normalized_margin(s.lin, s.FY)
    elif cond is C.SM1:
        m = _lambda_margins(grid, lambda t: normalized_margin(
            w(t) - 0.5 * L * t * (1 - t) * s.nd2, s.interp(t)))
    elif cond is C.SM2:
        m = normalized_margin(s.ip, L * s.nd2)
    elif cond is C.SM3:
        m = normalized_margin(s.FY, s.lin + 0.5 * L * s.nd2)
    elif cond is C.PSM1:
        m = normalized_margin(s.ng2 / L, s.ip)
    elif cond is C.PSM2:
        m = normalized_margin(s.lin + s.ng2 / (2 * L), s.FY)
    elif cond is C.PSM3:
        m = normalized_margin(np.sqrt(s.ng2), L * np.sqrt(s.nd2))
    elif cond is C.DSM1:
        m = _lambda_margins(grid, lambda t: normalized_margin(
            s.dual_interp(t, params), wc(t) - t * (1 - t) * s.ng2 / (2 * L)))
    elif cond is C.DSM2:
        m = normalized_margin(s.ng2 / L, s.ip)
    elif cond is C.DSM3:
        m = normalized_margin(s.conj_y + _rowdot(s.Y, s.gd) + s.ng2 / (2 * L), s.conj_x)
    elif cond is C.SC1:
        m = _lambda_margins(grid, lambda t: normalized_margin(
            s.interp(t), w(t) - 0.5 * mu * t * (1 - t) * s.nd2))
    elif cond is C.SC2:
        m = normalized_margin(mu * s.nd2, s.ip)
    elif cond is C.SC3:
        m = normalized_margin(s.lin + 0.5 * mu * s.nd2, s.FY)
    elif cond is C.PSC1:
        m = normalized_margin(s.ip, s.ng2 / mu)
    elif cond is C.PSC2:
        m = normalized_margin(s.FY, s.lin + s.ng2 / (2 * mu))
    elif cond is C.PSC3:
        m = normalized_margin(mu * np.sqrt(s.nd2), np.sqrt(s.ng2))
    elif cond is C.DSC1:
        m = _lambda_margins(grid, lambda t: normalized_margin(
            wc(t) - t * (1 - t) * s.ng2 / (2 * mu), s.dual_interp(t, params)))
    elif cond is C.DSC2:
        m = normalized_margin(s.ip, s.ng2 / mu)
    elif cond is C.DSC3:
        m = normalized_margin(s.conj_x, s.conj_y + _rowdot(s.Y, s.gd) + s.ng2 / (2 * mu))
    elif cond is C.SMSC1:
        # lower bound on <grad f(x)-grad f(y), x-y> for L-smooth, mu-strongly convex f
        m = normalized_margin(L * mu / (L + mu) * s.nd2 + s.ng2 / (L + mu), s.ip)
    elif cond is C.SMSC2:
        r = s.d - s.gd / L
        extra = s.ng2 / (2 * L) + mu * L / (2 * (L - mu)) * _rowdot(r, r)
        m = normalized_margin(s.lin + extra, s.FY)
    elif cond is C.BRE_UP:
        m = normalized_margin(s.FX - s.FY - _rowdot(s.GY, s.d), 0.5 * L * s.nd2)
    elif cond is C.BRE_LO:
        m = normalized_margin(0.5 * mu * s.nd2, s.FX - s.FY - _rowdot(s.GY, s.d))
    else:
        raise UsageError(f"{cond.value} is not a pair condition")
    return m, s.X, s.Y, (grid if cond.uses_lambda else None), skipped


def _pl_margins(f: Objective, points, c: dict):
    P = np.asarray(points, dtype=float)
    FP = np.array([f.value(p) for p in P])
    GP = np.array([f.gradient(p) for p in P]).reshape(P.shape)
    return normalized_margin(c["nu"] * (FP - c["f_bar"]), 0.5 * _rowdot(GP, GP))


def _samples_for(f: Objective, cloud: SampleCloud) -> _Samples:
    X, Y = pair_arrays(cloud)
    return _Samples(f, X, Y, min_separation=cloud.min_separation)


def _check(f, cond, c, cloud, samples, params, tol) -> CertReport:
    _validate(f, cond, c)
    if cond is C.PL:
        X, Y = pair_arrays(cloud)
        P = np.concatenate([X, Y])
        m = _pl_margins(f, P, c)
        return reduce_margins(cond, c, m, P, None, seed=cloud.seed, tol=tol)
    m, X, Y, grid, skipped = _margins(cond, samples, c, cloud.lambda_grid, params)
    return reduce_margins(cond, c, m, X, Y, grid, seed=cloud.seed, n_skipped=skipped, tol=tol)


def check_condition(f: Objective, cond, constants, cloud: SampleCloud,
                    conj_params: Optional[ConjugateSolverParams] = None,
                    tol: float = PASS_TOL) -> CertReport:
    """Evaluate one characterization on the cloud and report its worst margin."""
    cond = ConditionId(cond)
    c = _normalize_constants(constants)
    _validate(f, cond, c)
    samples = None if cond is C.PL else _samples_for(f, cloud)
    return _check(f, cond, c, cloud, samples, conj_params, tol)


def check_family(f: Objective, family, constants, cloud: SampleCloud,
                 conj_params: Optional[ConjugateSolverParams] = None,
                 tol: float = PASS_TOL) -> list[CertReport]:
    """Run every member of a family on one shared cloud; failures stay per member."""
    family = Family(family)
    c = _normalize_constants(constants)
    samples = _samples_for(f, cloud)
    reports = []
    for cond in FAMILY_MEMBERS[family]:
        kept = {k: v for k, v in c.items() if k in cond.required_constants}
        if cond.is_dual and not f.meta.conjugate_well_posed:
            reports.append(CertReport.skipped(cond, kept, cloud.seed,
                                              "conjugate not well posed"))
            continue
        try:
            reports.append(_check(f, cond, kept, cloud, samples, conj_params, tol))
        except ConvexCertError as exc:
            reports.append(CertReport.errored(cond, kept, cloud.seed,
                                              f"{type(exc).__name__}: {exc}"))
    return sorted(reports, key=lambda r: r.condition.order)


def replay_witness(f: Objective, report: CertReport,
                   conj_params: Optional[ConjugateSolverParams] = None) -> float:
    """Recompute the normalized margin of a report's witness."""
    x, y, lam = report.witness
    c = dict(report.constants)
    if report.condition is C.PL:
        return float(_pl_margins(f, [x], c)[0])
    s = _Samples(f, [x], [y])
    cond = report.condition
    grid = (lam,) if lam is not None else (0.0,)
    # the witness already carries its ordering
    m, *_ = _margins(cond, s, c, grid, conj_params, swap=False)
    return float(np.reshape(m, -1)[0])


# ---------------------------------------------------------------------------
# constant estimation


@dataclass(frozen=True)
class ConstantEstimate:
    kind: str            # "L", "MU" or "PL"
    value: float
    bias: str            # "LOWER_BOUND" or "UPPER_BOUND"
    witness: tuple
    n_samples: int
    refined: bool
    raw_value: float     # before clamping at zero (MU only differs)

    @property
    def convexity_violation(self) -> bool:
        return self.kind == "MU" and self.raw_value < -PASS_TOL


def _refine_guard(cloud: SampleCloud) -> float:
    return max(cloud.min_separation, 1e-3 * float(np.linalg.norm(cloud.high - cloud.low)))


def _hill_climb(score, z0, low, high, feasible, maximize, steps=REFINE_STEPS, noise=None):
    """Coordinate search with step halving, confined to the box [low, high].

    ``noise(z)`` bounds the rounding error of ``score(z)``; a move counts as an
    improvement only when it beats the incumbent by more than that bound.
    """
    sign = 1.0 if maximize else -1.0
    z = np.array(z0, dtype=float)
    best = score(z)
    h = 0.25 * float(np.min(high - low))
    floor = 1e-14 * float(np.max(high - low))
    for _ in range(steps):
        cand, cand_score = None, best
        for i in range(z.size):
            for delta in (h, -h):
                zn = z.copy()
                zn[i] = min(max(zn[i] + delta, low[i]), high[i])
                if zn[i] == z[i] or not feasible(zn):
                    continue
                try:
                    sc = score(zn)
                except EvaluationError:
                    continue
                slack = 0.0 if noise is None else noise(zn)
                if sign * sc > sign * cand_score + slack:
                    cand, cand_score = zn, sc
        if cand is None:
            h *= 0.5
            if h < floor:
                break
        else:
            z, best = cand, cand_score
    return best, z


def _pair_estimate(f, cloud, ratio_fn, kind, maximize, refine, both_orders, noise=None):
    X, Y = pair_arrays(cloud)
    if both_orders:
        X, Y = np.concatenate([X, Y]), np.concatenate([Y, X])
    guard = _refine_guard(cloud)
    sep = np.linalg.norm(X - Y, axis=1)
    use = sep >= guard
    if not np.any(use):
        use = np.ones_like(use)
    ratios = np.array([ratio_fn(x, y) for x, y in zip(X[use], Y[use])])
    idx = int(np.argmax(ratios) if maximize else np.argmin(ratios))
    best = float(ratios[idx])
    x, y = X[use][idx], Y[use][idx]
    if refine:
        d = cloud.dim
        best, z = _hill_climb(lambda z: ratio_fn(z[:d], z[d:]), np.concatenate([x, y]),
                              np.tile(cloud.low, 2), np.tile(cloud.high, 2),
                              lambda z: np.linalg.norm(z[:d] - z[d:]) >= guard, maximize,
                              noise=None if noise is None else lambda z: noise(z[:d], z[d:]))
        x, y = z[:d], z[d:]
    return best, (np.array(x), np.array(y)), int(np.count_nonzero(use))


def estimate_L(f: Objective, cloud: SampleCloud, refine: bool = True) -> ConstantEstimate:
    """Largest sampled gradient-difference quotient (a lower bound on the true L)."""
    def ratio(x, y):
        return float(np.linalg.norm(f.gradient(x) - f.gradient(y)) / np.linalg.norm(x - y))

    best, wit, n = _pair_estimate(f, cloud, ratio, "L", True, refine, both_orders=False)
    return ConstantEstimate("L", best, "LOWER_BOUND", wit, n, refine, best)


def estimate_mu(f: Objective, cloud: SampleCloud, refine: bool = True) -> ConstantEstimate:
    """Smallest sampled ratio D_f / D_phi0 (an upper bound on the true mu).

    A negative raw minimum is kept in ``raw_value`` as evidence of nonconvexity;
    ``value`` is clamped at zero.
    """
    def ratio(x, y):
        d = x - y
        df = f.value(x) - f.value(y) - float(f.gradient(y) @ d)
        return 2.0 * df / float(d @ d)

    def noise(x, y):
        d = x - y
        terms = abs(f.value(x)) + abs(f.value(y)) + abs(float(f.gradient(y) @ d))
        return 16 * EPS * terms / (0.5 * float(d @ d))

    best, wit, n = _pair_estimate(f, cloud, ratio, "MU", False, refine, both_orders=True,
                                  noise=noise)
    return ConstantEstimate("MU", max(best, 0.0), "UPPER_BOUND", wit, n, refine, best)


def estimate_pl(f: Objective, f_bar: float, cloud: SampleCloud,
                refine: bool = True) -> ConstantEstimate:
    """Smallest sampled PL quotient 1/2 ||grad f||^2 / (f - f_bar) (an upper bound on nu)."""
    X, Y = pair_arrays(cloud)
    P = np.concatenate([X, Y])
    F = np.array([f.value(p) for p in P])
    low = np.flatnonzero(F < f_bar - OPTIMUM_SLACK)
    if low.size:
        p = P[low[0]]
        raise InconsistentOptimumError(
            f"f({p.tolist()}) = {F[low[0]]!r} lies below the supplied optimum {f_bar!r}", point=p)

    def ratio(p):
        g = f.gradient(p)
        return 0.5 * float(g @ g) / (f.value(p) - f_bar)

    use = F - f_bar > PL_GAP_FLOOR
    if not np.any(use):
        return ConstantEstimate("PL", float("inf"), "UPPER_BOUND", (None, None), 0, refine,
                                float("inf"))
    ratios = np.array([ratio(p) for p in P[use]])
    idx = int(np.argmin(ratios))
    best, p = float(ratios[idx]), P[use][idx]
    if refine:
        floor = 1e-8 * max(1.0, abs(f_bar))

        def feasible(z):
            gap = f.value(z) - f_bar
            if gap < -OPTIMUM_SLACK:
                raise InconsistentOptimumError(
                    f"f({z.tolist()}) = {gap + f_bar!r} lies below the supplied optimum", point=z)
            return gap > floor

        def noise(z):
            v = f.value(z)
            return 16 * EPS * (abs(v) + abs(f_bar)) / (v - f_bar) * abs(ratio(z))

        best, p = _hill_climb(ratio, p, cloud.low, cloud.high, feasible, maximize=False,
                              noise=noise)
    return ConstantEstimate("PL", best, "UPPER_BOUND", (np.array(p), None),
                            int(np.count_nonzero(use)), refine, best)
