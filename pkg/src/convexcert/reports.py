"""Condition identifiers, certification reports and margin reduction."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

PASS_TOL = 1e-9


class ConditionId(str, enum.Enum):
    CONV1 = "CONV1"
    CONV2 = "CONV2"
    CONV3 = "CONV3"
    SM1 = "SM1"
    SM2 = "SM2"
    SM3 = "SM3"
    PSM1 = "PSM1"
    PSM2 = "PSM2"
    PSM3 = "PSM3"
    DSM1 = "DSM1"
    DSM2 = "DSM2"
    DSM3 = "DSM3"
    SC1 = "SC1"
    SC2 = "SC2"
    SC3 = "SC3"
    PSC1 = "PSC1"
    PSC2 = "PSC2"
    PSC3 = "PSC3"
    DSC1 = "DSC1"
    DSC2 = "DSC2"
    DSC3 = "DSC3"
    SMSC1 = "SMSC1"
    SMSC2 = "SMSC2"
    PL = "PL"
    BRE_UP = "BRE_UP"
    BRE_LO = "BRE_LO"

    @property
    def order(self) -> int:
        return _ORDER[self]

    @property
    def required_constants(self) -> tuple[str, ...]:
        name = self.value
        if name.startswith("CONV"):
            return ()
        if name.startswith("SMSC"):
            return ("mu", "L")
        if name.startswith(("SM", "PSM", "DSM")) or name == "BRE_UP":
            return ("L",)
        if name.startswith(("SC", "PSC", "DSC")) or name == "BRE_LO":
            return ("mu",)
        return ("nu", "f_bar")

    @property
    def is_dual(self) -> bool:
        return self.value.startswith(("DSM", "DSC"))

    @property
    def uses_lambda(self) -> bool:
        return self.value in ("CONV1", "SM1", "DSM1", "SC1", "DSC1")


_ORDER = {c: i for i, c in enumerate(ConditionId)}

# Conditions whose inequality is not symmetric in (x, y); both orderings are checked.
ASYMMETRIC = frozenset(ConditionId(c) for c in (
    "CONV3", "SM3", "SC3", "PSM2", "PSC2", "DSM3", "DSC3", "SMSC2", "BRE_UP", "BRE_LO"))


@dataclass(frozen=True)
class CertReport:
    """Outcome of sampling one condition; ``worst_margin < 0`` means a violation."""

    condition: ConditionId
    constants: dict
    n_checks: int
    n_skipped: int
    passed: bool
    worst_margin: float
    witness: tuple = (None, None, None)  # (x, y or None, lambda or None)
    seed: int = 0
    status: str = ""
    note: str = ""

    def __post_init__(self):
        if not self.status:
            object.__setattr__(self, "status", "pass" if self.passed else "fail")

    @classmethod
    def skipped(cls, condition, constants, seed, note) -> "CertReport":
        return cls(ConditionId(condition), dict(constants), 0, 0, False, float("nan"),
                   seed=seed, status="skipped", note=note)

    @classmethod
    def errored(cls, condition, constants, seed, note) -> "CertReport":
        return cls(ConditionId(condition), dict(constants), 0, 0, False, float("nan"),
                   seed=seed, status="error", note=note)


def normalized_margin(lhs, rhs):
    """Margin of ``lhs <= rhs`` scaled by max(1, |lhs|, |rhs|); negative = violated."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return (rhs - lhs) / scale


def reduce_margins(condition, constants, margins, X, Y, lambdas=None, seed=0,
                   n_skipped=0, tol=PASS_TOL, note="") -> CertReport:
    """Collapse a margin array (pairs x lambdas, or pairs) to a report with its witness."""
    m = np.asarray(margins, dtype=float)
    if m.size == 0:
        return CertReport(ConditionId(condition), dict(constants), 0, n_skipped, True,
                          float("inf"), seed=seed, note=note or "no admissible samples")
    m = np.where(np.isnan(m), -np.inf, m)
    flat = int(np.argmin(m))
    if m.ndim == 2:
        i, j = np.unravel_index(flat, m.shape)
        lam: Optional[float] = float(lambdas[j])
    else:
        i, lam = flat, None
    worst = float(m.reshape(-1)[flat])
    wy = None if Y is None else np.array(Y[i])
    return CertReport(ConditionId(condition), dict(constants), int(m.size), n_skipped,
                      worst >= -tol, worst, (np.array(X[i]), wy, lam), seed, note=note)
