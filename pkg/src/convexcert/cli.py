"""``convexcert`` command line: certify, estimate, gd, conjugate, suite.

Exit codes: 0 every claim holds, 1 a violation or error row is present,
2 usage error.  Functions are named with the catalog grammar documented in
:mod:`convexcert.objectives`, e.g. ``quadratic:diag:1,4``.

Output files in ``--out``:

* ``conditions.csv``: condition,constant,n_checks,n_skipped,pass,worst_margin,
  witness_x,witness_y,lambda.  ``pass`` is true/false/skipped/error,
  witness vectors are ';'-joined, and missing fields are empty.
* ``trace.csv``: iter,value,grad_norm,gap_ratio (gd and suite only).
* ``report.json``: config echo, estimates, every result row, and metadata.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .certify import (ConstantEstimate, Family, check_condition, check_family,
                      estimate_L, estimate_mu, estimate_pl)
from .conjugate import (conjugate_numeric, dual_shift_check, fenchel_identity_residual,
                        inverse_gradient)
from .errors import ConvexCertError, UsageError
from .gd import (GDConfig, compare_rates, gd_run, presolve_optimum,
                 verify_descent_inequalities, verify_rate)
from .linalg import SampleCloud, make_rng, pair_arrays
from .objectives import Objective, parse_function_spec
from .reports import CertReport, ConditionId

COMMANDS = ("certify", "estimate", "gd", "conjugate", "suite")
CONDITIONS_HEADER = ("condition", "constant", "n_checks", "n_skipped", "pass", "worst_margin",
                     "witness_x", "witness_y", "lambda")
CONFIG_KEYS = ("function", "L", "mu", "nu", "fbar", "seed", "pairs", "box", "step", "t",
               "iters", "x0", "out")
ESTIMATE_SLACK = 1e-2   # estimated L is inflated, mu/nu deflated, by this fraction
ZERO_REL = 1e-3         # an estimated mu or nu below ZERO_REL * L counts as zero
X0_STREAM = 2
VALUE_LISTS = ("--box", "--x0")


@dataclass
class ExperimentConfig:
    command: str
    function_spec: str
    constants: dict = field(default_factory=dict)
    box: tuple = (-2.0, 2.0)
    pairs: int = 2000
    seed: int = 0
    step: Optional[float] = None
    iters: int = 100
    x0: Optional[tuple] = None
    output_dir: str = "convexcert-out"

    def echo(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--function")
    common.add_argument("--L", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--fbar", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--pairs", type=int)
    common.add_argument("--box", help="LO:HI")
    common.add_argument("--step", type=float)
    common.add_argument("--t", type=float)
    common.add_argument("--iters", type=int)
    common.add_argument("--x0", help="comma-separated start point")
    common.add_argument("--out")
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    parser = _Parser(prog="convexcert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _parse_box(text) -> tuple:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        lo, hi = (float(v) for v in text)
    else:
        try:
            lo, hi = (float(v) for v in str(text).split(":"))
        except ValueError:
            raise UsageError(f"--box expects LO:HI, got {text!r}") from None
    if not lo < hi:
        raise UsageError("--box needs LO < HI")
    return lo, hi


def _parse_x0(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise UsageError(f"--x0 expects comma-separated reals, got {text!r}") from None


def _glue_negative_values(args) -> list:
    """Turn ``--box -1:3`` into ``--box=-1:3`` so argparse does not read -1:3 as a flag."""
    args, out, i = list(args), [], 0
    while i < len(args):
        if args[i] in VALUE_LISTS and i + 1 < len(args) and args[i + 1].startswith("-"):
            out.append(f"{args[i]}={args[i + 1]}")
            i += 2
        else:
            out.append(args[i])
            i += 1
    return out


def parse_config(args, config_file: Optional[str] = None) -> ExperimentConfig:
    """Flags override values from the JSON config file; unknown keys are rejected."""
    ns = _build_parser().parse_args(_glue_negative_values(args))
    if ns.command is None:
        raise UsageError(f"a command is required: one of {', '.join(COMMANDS)}")
    values = {}
    path = config_file or ns.config
    if path:
        try:
            values = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(values, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(values) - set(CONFIG_KEYS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for key in CONFIG_KEYS:
        flag = getattr(ns, key)
        if flag is not None:
            values[key] = flag
    if "function" not in values:
        raise UsageError("--function is required")
    spec = str(values["function"])
    parse_function_spec(spec)
    if values.get("step") is not None and values.get("t") is not None:
        raise UsageError("give either --step or --t, not both")
    step = values.get("step")
    if values.get("t") is not None:
        if not float(values["t"]) > 0:
            raise UsageError("--t must be positive")
        step = 1.0 / float(values["t"])
    if step is not None and not float(step) > 0:
        raise UsageError("--step must be positive")
    constants = {k: float(values[k]) for k in ("L", "mu", "nu") if values.get(k) is not None}
    if values.get("fbar") is not None:
        constants["f_bar"] = float(values["fbar"])
    pairs = int(values.get("pairs", 2000))
    iters = int(values.get("iters", 100))
    seed = int(values.get("seed", 0))
    if pairs < 1 or iters < 1 or seed < 0:
        raise UsageError("--pairs and --iters must be positive, --seed nonnegative")
    return ExperimentConfig(
        command=ns.command, function_spec=spec, constants=constants,
        box=_parse_box(values.get("box", "-2:2")), pairs=pairs, seed=seed,
        step=None if step is None else float(step), iters=iters,
        x0=None if values.get("x0") is None else _parse_x0(values["x0"]),
        output_dir=str(values.get("out", "convexcert-out")))


# ---------------------------------------------------------------------------
# row helpers


def _vec(v) -> str:
    if v is None:
        return ""
    return ";".join(repr(float(c)) for c in np.reshape(v, -1))


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _constant_text(constants: dict) -> str:
    return ";".join(f"{k}={float(v)!r}" for k, v in constants.items())


def _cert_row(rep: CertReport, family: str, informational: bool) -> dict:
    x, y, lam = rep.witness
    return {
        "kind": "condition", "name": rep.condition.value, "family": family,
        "status": rep.status, "informational": informational,
        "constants": dict(rep.constants), "n_checks": rep.n_checks,
        "n_skipped": rep.n_skipped, "worst_margin": _num(rep.worst_margin),
        "witness_x": None if x is None else np.reshape(x, -1).tolist(),
        "witness_y": None if y is None else np.reshape(y, -1).tolist(),
        "lambda": lam, "note": rep.note, "_report": rep,
    }


def _conditions_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONDITIONS_HEADER)
    for row in rows:
        if row["kind"] != "condition":
            continue
        rep: CertReport = row["_report"]
        x, y, lam = rep.witness
        status = {"pass": "true", "fail": "false"}.get(rep.status, rep.status)
        margin = "" if not np.isfinite(rep.worst_margin) else repr(float(rep.worst_margin))
        w.writerow([rep.condition.value, _constant_text(rep.constants), rep.n_checks,
                    rep.n_skipped, status, margin, _vec(x), _vec(y),
                    "" if lam is None else repr(float(lam))])
    return buf.getvalue()


def _estimate_dict(est: ConstantEstimate) -> dict:
    return {"kind": est.kind, "value": _num(est.value), "raw_value": _num(est.raw_value),
            "bias": est.bias, "n_samples": est.n_samples, "refined": est.refined,
            "witness": [None if w is None else np.reshape(w, -1).tolist() for w in est.witness],
            "convexity_violation": est.convexity_violation}


def _error_row(kind, name, exc, informational=False) -> dict:
    return {"kind": kind, "name": name, "status": "error", "informational": informational,
            "note": f"{type(exc).__name__}: {exc}"}


@dataclass
class SuiteReport:
    command: str
    config: dict
    seed: int
    rows: list = field(default_factory=list)
    estimates: dict = field(default_factory=dict)
    constants_used: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)
    trace_csv: Optional[str] = None
    version: str = __version__

    @property
    def exit_code(self) -> int:
        bad = [r for r in self.rows
               if r["status"] in ("fail", "error") and not r.get("informational")]
        return 1 if bad else 0

    def conditions_csv(self) -> str:
        return _conditions_csv(self.rows)

    def to_json(self) -> dict:
        rows = [{k: v for k, v in r.items() if not k.startswith("_")} for r in self.rows]
        return {"tool": "convexcert", "version": self.version, "command": self.command,
                "seed": self.seed, "config": self.config, "constants_used": self.constants_used,
                "estimates": self.estimates, "rates": self.rates, "rows": rows,
                "exit_code": self.exit_code,
                "metadata": {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}}

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if any(r["kind"] == "condition" for r in self.rows):
            (out / "conditions.csv").write_text(self.conditions_csv())
        if self.trace_csv is not None:
            (out / "trace.csv").write_text(self.trace_csv)
        (out / "report.json").write_text(json.dumps(self.to_json(), indent=2, sort_keys=False))


# ---------------------------------------------------------------------------
# commands


def _cloud(cfg: ExperimentConfig, f: Objective) -> SampleCloud:
    return SampleCloud.default(f.dim, seed=cfg.seed, pairs=cfg.pairs, box=cfg.box)


def _start_point(cfg: ExperimentConfig, f: Objective, cloud: SampleCloud) -> np.ndarray:
    if cfg.x0 is not None:
        if len(cfg.x0) != f.dim:
            raise UsageError(f"--x0 has {len(cfg.x0)} entries, {f.name} needs {f.dim}")
        return np.array(cfg.x0)
    return make_rng(cfg.seed, stream=X0_STREAM).uniform(cloud.low, cloud.high)


def _run_family(report, f, family, consts, cloud, informational=False, skip=()):
    for rep in check_family(f, family, consts, cloud):
        if rep.condition in skip:
            rep = CertReport.skipped(rep.condition, rep.constants, cloud.seed, skip[rep.condition])
        elif rep.status == "error" and _zero_constant(rep):
            rep = CertReport.skipped(rep.condition, rep.constants, cloud.seed,
                                     "undefined at a zero constant")
        report.rows.append(_cert_row(rep, family.value, informational))


def _zero_constant(rep: CertReport) -> bool:
    name = rep.condition.value
    if name.startswith(("PSC", "DSC")):
        return rep.constants.get("mu", 1.0) <= 0
    if name.startswith(("PSM", "DSM", "SMSC")):
        return rep.constants.get("L", 1.0) <= 0
    return False


def run_certify(cfg: ExperimentConfig) -> SuiteReport:
    f = parse_function_spec(cfg.function_spec)
    cloud = _cloud(cfg, f)
    c = cfg.constants
    report = SuiteReport("certify", cfg.echo(), cfg.seed, constants_used=dict(c))
    _run_family(report, f, Family.CONVEX, {}, cloud)
    if "L" in c:
        _run_family(report, f, Family.SMOOTH, {"L": c["L"]}, cloud)
    if "mu" in c:
        _run_family(report, f, Family.STRONG, {"mu": c["mu"]}, cloud)
    if "L" in c and "mu" in c:
        _run_family(report, f, Family.JOINT, {"L": c["L"], "mu": c["mu"]}, cloud,
                    skip=_joint_skip(c["L"], c["mu"]))
    if "nu" in c and "f_bar" in c:
        _append_condition(report, f, ConditionId.PL, {"nu": c["nu"], "f_bar": c["f_bar"]},
                          cloud, "PL")
    return report


def _joint_skip(L, mu) -> dict:
    if L <= mu + 1e-12:
        return {ConditionId.SMSC2: "L = mu: the function is mu*phi0 plus affine; see SM3/SC3"}
    return {}


def _append_condition(report, f, cond, consts, cloud, family, informational=False):
    try:
        rep = check_condition(f, cond, consts, cloud)
    except ConvexCertError as exc:
        rep = CertReport.errored(cond, consts, cloud.seed, f"{type(exc).__name__}: {exc}")
    report.rows.append(_cert_row(rep, family, informational))


def _optimum(cfg, f, cloud, L) -> tuple[Optional[float], str]:
    if "f_bar" in cfg.constants:
        return cfg.constants["f_bar"], "supplied"
    if f.meta.f_star is not None:
        return f.meta.f_star, "metadata"
    if f.meta.is_convex and L and L > 0:
        return presolve_optimum(f, _start_point(cfg, f, cloud), L), "estimated"
    return None, "unavailable"


def run_estimate(cfg: ExperimentConfig) -> SuiteReport:
    f = parse_function_spec(cfg.function_spec)
    cloud = _cloud(cfg, f)
    report = SuiteReport("estimate", cfg.echo(), cfg.seed)
    _estimate_all(report, cfg, f, cloud)
    return report


def _estimate_all(report, cfg, f, cloud):
    est = {}
    for key, fn in (("L", estimate_L), ("mu", estimate_mu)):
        try:
            est[key] = fn(f, cloud, refine=True)
            report.estimates[key] = _estimate_dict(est[key])
        except ConvexCertError as exc:
            report.rows.append(_error_row("estimate", key, exc))
    L_guess = cfg.constants.get("L", f.meta.L_true)
    if L_guess is None and "L" in est:
        L_guess = est["L"].value * (1 + ESTIMATE_SLACK)
    try:
        f_bar, source = _optimum(cfg, f, cloud, L_guess)
    except ConvexCertError as exc:
        report.rows.append(_error_row("estimate", "f_bar", exc))
        f_bar, source = None, "error"
    report.estimates["f_bar"] = {"value": f_bar, "source": source}
    if f_bar is not None:
        try:
            est["nu"] = estimate_pl(f, f_bar, cloud, refine=True)
            report.estimates["nu"] = _estimate_dict(est["nu"])
        except ConvexCertError as exc:
            report.rows.append(_error_row("estimate", "nu", exc))
    return est, f_bar


def _pick(cfg, key, meta_value, est, deflate) -> tuple[Optional[float], str]:
    if key in cfg.constants:
        return cfg.constants[key], "supplied"
    if meta_value is not None:
        return float(meta_value), "metadata"
    if est is not None:
        factor = (1 - ESTIMATE_SLACK) if deflate else (1 + ESTIMATE_SLACK)
        return est.value * factor, "estimated"
    return None, "unavailable"


def run_suite(cfg: ExperimentConfig) -> SuiteReport:
    f = parse_function_spec(cfg.function_spec)
    cloud = _cloud(cfg, f)
    report = SuiteReport("suite", cfg.echo(), cfg.seed)
    est, f_bar = _estimate_all(report, cfg, f, cloud)

    L, L_src = _pick(cfg, "L", f.meta.L_true, est.get("L"), deflate=False)
    mu, mu_src = _pick(cfg, "mu", f.meta.mu_true, est.get("mu"), deflate=True)
    nu, nu_src = _pick(cfg, "nu", f.meta.pl_true, est.get("nu"), deflate=True)
    report.constants_used = {"L": L, "L_source": L_src, "mu": mu, "mu_source": mu_src,
                             "nu": nu, "nu_source": nu_src, "f_bar": f_bar}
    # a family whose constant is (close to) zero without being claimed is inapplicable
    mu_info = mu_src != "supplied" and (mu is None or L is None or mu <= ZERO_REL * L)
    nu_info = nu_src != "supplied" and (nu is None or L is None or nu <= ZERO_REL * L)

    _run_family(report, f, Family.CONVEX, {}, cloud)
    if L is not None:
        _run_family(report, f, Family.SMOOTH, {"L": L}, cloud)
    if mu is not None:
        _run_family(report, f, Family.STRONG, {"mu": mu}, cloud, informational=mu_info)
    if L is not None and mu is not None:
        _run_family(report, f, Family.JOINT, {"L": L, "mu": mu}, cloud,
                    informational=mu_info, skip=_joint_skip(L, mu))
    if nu is not None and f_bar is not None:
        _append_condition(report, f, ConditionId.PL, {"nu": nu, "f_bar": f_bar}, cloud, "PL",
                          informational=nu_info)
    if L is not None and L > 0:
        _gd_section(report, cfg, f, cloud, L, nu, f_bar, nu_info)
    return report


def _gd_section(report, cfg, f, cloud, L, nu, f_bar, nu_info):
    step = cfg.step if cfg.step is not None else 1.0 / L
    x0 = _start_point(cfg, f, cloud)
    try:
        trace = gd_run(f, x0, GDConfig(step=step, max_iters=cfg.iters), f_bar=f_bar)
    except ConvexCertError as exc:
        report.rows.append(_error_row("gd", "GD_RUN", exc))
        return
    report.trace_csv = trace.to_csv()
    report.rows.append({"kind": "gd", "name": "GD_RUN", "status": "pass", "informational": False,
                        "step": step, "x0": np.reshape(x0, -1).tolist(),
                        "iterations": trace.n_iters, "final_value": trace.values[-1],
                        "final_grad_norm": trace.grad_norms[-1]})
    if abs(step * L - 1.0) > 1e-12 or trace.n_iters < 1:
        return
    desc = verify_descent_inequalities(f, L, trace)
    report.rows.append({"kind": "descent", "name": "STEP1", "informational": False,
                        "status": "pass" if desc.step1_pass else "fail",
                        "worst_margin": desc.step1_worst_margin,
                        "worst_index": desc.step1_worst_index})
    if desc.step3_checked:
        report.rows.append({"kind": "descent", "name": "STEP3", "informational": False,
                            "status": "pass" if desc.step3_pass else "fail",
                            "worst_margin": desc.step3_worst_margin,
                            "worst_index": desc.step3_worst_index})
    if nu is None or f_bar is None or not 0 < nu <= L:
        return
    pair = compare_rates(L, nu)
    report.rates = {"L": L, "nu": nu, "standard": pair.standard, "improved": pair.improved}
    if not any(r is not None for r in trace.gap_ratios):
        return
    for name, factor, info in (("RATE_STANDARD", pair.standard, nu_info),
                               ("RATE_IMPROVED", pair.improved, nu_info or not f.meta.is_convex)):
        rr = verify_rate(trace, factor)
        report.rows.append({"kind": "rate", "name": name, "informational": info,
                            "status": "pass" if rr.passed else "fail", "factor": factor,
                            "worst_ratio": rr.worst_ratio, "worst_index": rr.worst_index,
                            "n_ratios": rr.n_ratios})
        report.rates[f"{name.lower()}_worst_ratio"] = rr.worst_ratio


def run_gd(cfg: ExperimentConfig) -> SuiteReport:
    f = parse_function_spec(cfg.function_spec)
    cloud = _cloud(cfg, f)
    report = SuiteReport("gd", cfg.echo(), cfg.seed)
    L = cfg.constants.get("L", f.meta.L_true)
    if cfg.step is None and L is None:
        raise UsageError("gd needs --step, --t or --L (no known L for this function)")
    if cfg.step is not None:
        L = 1.0 / cfg.step
    f_bar = cfg.constants.get("f_bar", f.meta.f_star)
    nu = cfg.constants.get("nu", f.meta.pl_true)
    report.constants_used = {"L": L, "nu": nu, "f_bar": f_bar}
    _gd_section(report, cfg, f, cloud, L, nu, f_bar, nu_info=False)
    return report


def run_conjugate(cfg: ExperimentConfig) -> SuiteReport:
    f = parse_function_spec(cfg.function_spec)
    cloud = _cloud(cfg, f)
    report = SuiteReport("conjugate", cfg.echo(), cfg.seed)
    X, _ = pair_arrays(cloud)
    pts = X[: min(100, len(X))]
    try:
        residual = max(fenchel_identity_residual(f, x) for x in pts)
        roundtrip = max(float(np.linalg.norm(f.gradient(inverse_gradient(f, f.gradient(x)))
                                             - f.gradient(x))) for x in pts)
    except ConvexCertError as exc:
        report.rows.append(_error_row("conjugate", "FENCHEL", exc))
        return report
    report.rows.append({"kind": "conjugate", "name": "FENCHEL", "informational": False,
                        "status": "pass" if residual <= 1e-8 else "fail", "worst": residual})
    report.rows.append({"kind": "conjugate", "name": "INVERSE_GRADIENT", "informational": False,
                        "status": "pass" if roundtrip <= 1e-6 else "fail", "worst": roundtrip})
    if f.meta.analytic_conjugate is not None:
        gap = max(abs(conjugate_numeric(f, u)[0] - f.meta.analytic_conjugate(u)) for u in pts)
        report.rows.append({"kind": "conjugate", "name": "ANALYTIC", "informational": False,
                            "status": "pass" if gap <= 1e-6 else "fail", "worst": gap})
    gamma = cfg.constants.get("L", f.meta.L_true)
    if gamma:
        for side, rep in zip(("primal", "dual"), dual_shift_check(f, gamma, cloud)):
            row = _cert_row(rep, f"DUAL_SHIFT_{side.upper()}", False)
            report.rows.append(row)
    return report


RUNNERS = {"certify": run_certify, "estimate": run_estimate, "gd": run_gd,
           "conjugate": run_conjugate, "suite": run_suite}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        report = RUNNERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"convexcert: usage error: {exc}", file=sys.stderr)
        return 2
    except ConvexCertError as exc:
        print(f"convexcert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    report.write(cfg.output_dir)
    for row in report.rows:
        tag = " (informational)" if row.get("informational") else ""
        print(f"{row['kind']:<10} {row['name']:<16} {row['status']}{tag}")
    print(f"wrote {cfg.output_dir}/report.json; exit {report.exit_code}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
