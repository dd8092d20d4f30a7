"""Bregman distances and the ratio-based (relative) smoothness bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateReferenceError
from .linalg import SampleCloud, Vector, pair_arrays
from .objectives import Objective, scaled

DEGENERATE_DENOMINATOR = 1e-14
PASS_TOL = 1e-9


def bregman(f: Objective, x, y) -> float:
    """D_f(x, y) = f(x) - f(y) - <grad f(y), x - y>."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return f.value(x) - f.value(y) - float(f.gradient(y) @ (x - y))


def bregman_ratio(f: Objective, phi: Objective, x, y) -> float:
    denom = bregman(phi, x, y)
    if denom <= DEGENERATE_DENOMINATOR:
        raise DegenerateReferenceError(f"D_phi(x, y) = {denom!r} is not positive")
    return bregman(f, x, y) / denom


@dataclass(frozen=True)
class BregmanBoundsReport:
    mu_tested: float
    L_tested: float
    n_pairs: int
    n_skipped: int
    lower_pass: bool
    upper_pass: bool
    worst_lower_margin: float
    worst_upper_margin: float
    worst_pair: tuple[Vector, Vector]


def relative_bounds_check(f: Objective, phi: Objective, mu: float, L: float,
                          cloud: SampleCloud, tol: float = PASS_TOL) -> BregmanBoundsReport:
    """Check mu*D_phi <= D_f <= L*D_phi on both orderings of every cloud pair.

    Margins are normalized by max(1, |D_phi|); near-coincident pairs, where
    D_phi falls below 1e-14, are skipped and counted.
    """
    if mu > L:
        raise ContractError(f"mu={mu} exceeds L={L}")
    X, Y = pair_arrays(cloud)
    worst_lo = worst_up = np.inf
    worst_pair, worst_seen = None, np.inf
    n, skipped = 0, 0
    for x0, y0 in zip(X, Y):
        for x, y in ((x0, y0), (y0, x0)):
            dphi = bregman(phi, x, y)
            if dphi < DEGENERATE_DENOMINATOR:
                skipped += 1
                continue
            df = bregman(f, x, y)
            scale = max(1.0, abs(dphi))
            lo = (df - mu * dphi) / scale
            up = (L * dphi - df) / scale
            n += 1
            worst_lo = min(worst_lo, lo)
            worst_up = min(worst_up, up)
            if min(lo, up) < worst_seen:
                worst_seen = min(lo, up)
                worst_pair = (x.copy(), y.copy())
    return BregmanBoundsReport(mu, L, n, skipped, worst_lo >= -tol, worst_up >= -tol,
                               float(worst_lo), float(worst_up), worst_pair)


def gap_scaling_probe(f: Objective, phi: Objective, gamma: float,
                      cloud: SampleCloud) -> tuple[float, float]:
    """max |D_phi - D_f| over the cloud, for (phi, f) and for (gamma*phi, gamma*f).

    The second number is gamma times the first: the additive gap is not scale
    invariant, which is why the bounds above are stated as ratios.
    """
    if not gamma > 0:
        raise ContractError("gamma must be positive")
    gphi, gf = scaled(phi, gamma), scaled(f, gamma)
    X, Y = pair_arrays(cloud)
    G = G_scaled = 0.0
    for x, y in zip(X, Y):
        G = max(G, abs(bregman(phi, x, y) - bregman(f, x, y)))
        G_scaled = max(G_scaled, abs(bregman(gphi, x, y) - bregman(gf, x, y)))
    return G, G_scaled
