"""Acceptance criteria 1-10, one test each; every test prints a PASS/FAIL line."""
import time

import numpy as np
import pytest

from convexcert.certify import (Family, check_condition, check_family, estimate_L, estimate_mu,
                                estimate_pl, replay_witness)
from convexcert.cli import main
from convexcert.conjugate import (conjugate_numeric, conjugate_quadratic, dual_shift_check,
                                  fenchel_identity_residual, inverse_gradient)
from convexcert.gd import (GDConfig, compare_rates, descent_bounds, gd_run, gd_step, model_argmin,
                           verify_descent_inequalities, verify_rate)
from convexcert.linalg import SampleCloud, make_rng
from convexcert.objectives import (make_least_squares, make_negative_phi0, make_quadratic)
from convexcert.reports import ConditionId as C

from conftest import catalog

Q14 = np.diag([1.0, 4.0])


@pytest.fixture
def report(capsys):
    """Print one line per criterion, outside pytest's capture."""
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def _gd_traces():
    f = make_quadratic(Q14)
    starts = make_rng(2024, stream=2).uniform(-2, 2, size=(20, 2))
    quad = [gd_run(f, x0, GDConfig(step=0.25, max_iters=100), f_bar=0.0) for x0 in starts]
    ls = make_least_squares([[1.0, 0.0], [0.0, 0.0]], [1.0, 0.0])
    lsq = [gd_run(ls, x0, GDConfig(step=1.0, max_iters=20), f_bar=0.0) for x0 in starts]
    return f, quad, ls, lsq


def test_criterion_01_equivalence_positive(report):
    f = make_quadratic(Q14)
    cloud = SampleCloud.default(2, seed=7, pairs=2000)
    t0 = time.perf_counter()
    reps = (check_family(f, Family.SMOOTH, {"L": 4 + 1e-6}, cloud)
            + check_family(f, Family.STRONG, {"mu": 1 - 1e-6}, cloud))
    elapsed = time.perf_counter() - t0
    worst = min(r.worst_margin for r in reps)
    ok = len(reps) == 20 and all(r.passed for r in reps) and worst >= -1e-9 and elapsed < 5.0
    report(1, ok, f"20 members pass, worst margin {worst:.3e}, {elapsed:.2f}s")


def test_criterion_02_equivalence_falsification(report):
    f = make_quadratic(Q14)
    cloud = SampleCloud.default(2, seed=7, pairs=2000)
    reps = [check_condition(f, C.SM3, {"L": 3.8}, cloud),
            check_condition(f, C.PSM3, {"L": 3.8}, cloud),
            check_condition(f, C.SC3, {"mu": 1.2}, cloud)]
    replays = [replay_witness(f, r) for r in reps]
    ok = all(not r.passed and r.worst_margin < -1e-3 for r in reps) and all(
        m == pytest.approx(r.worst_margin, abs=1e-12) for m, r in zip(replays, reps))
    detail = ", ".join(f"{r.condition.value} {r.worst_margin:.3e}" for r in reps)
    report(2, ok, f"{detail}; witnesses replay")


def test_criterion_03_separation(report):
    f = make_negative_phi0(2)
    cloud = SampleCloud.default(2, seed=7, pairs=2000)
    smooth = [check_condition(f, c, {"L": 1.0}, cloud) for c in (C.SM1, C.SM2, C.SM3)]
    coco = [check_condition(f, c, {"L": L}, cloud)
            for L in (0.5, 1.0, 2.0, 10.0) for c in (C.PSM1, C.PSM2)]
    worst = max(r.worst_margin for r in coco)
    ok = all(r.passed for r in smooth) and all(r.worst_margin < -1e-3 for r in coco)
    report(3, ok, f"SM1-3 pass at L=1; PSM1/PSM2 fail at all L, largest margin {worst:.3e}")


def test_criterion_04_estimation(report):
    f = make_quadratic(Q14)
    rows = []
    for seed in range(1, 6):
        cloud = SampleCloud.default(2, seed=seed, pairs=5000)
        rows.append((estimate_L(f, cloud, refine=True).value,
                     estimate_mu(f, cloud, refine=True).value,
                     estimate_pl(f, 0.0, cloud, refine=True).value))
    L, mu, pl = np.array(rows).T
    ok = (np.all((3.92 <= L) & (L <= 4 + 1e-9)) and np.all((1 - 1e-9 <= mu) & (mu <= 1.02))
          and np.all((0.98 <= pl) & (pl <= 1 + 1e-9)))
    report(4, ok, f"L in [{L.min():.6f}, {L.max():.6f}], mu in [{mu.min():.6f}, {mu.max():.6f}], "
                  f"nu in [{pl.min():.6f}, {pl.max():.6f}]")


def test_criterion_05_conjugate(report):
    f = make_quadratic(Q14)
    rng = make_rng(5, stream=0)
    U = rng.uniform(-3, 3, size=(100, 2))
    gap = max(abs(conjugate_numeric(f, u)[0] - conjugate_quadratic(Q14, u)) for u in U)
    X = rng.uniform(-2, 2, size=(100, 2))
    fenchel = max(fenchel_identity_residual(f, x) for x in X)
    trip = max(float(np.linalg.norm(f.gradient(inverse_gradient(f, u)) - u)) for u in U)
    ok = gap <= 1e-6 and fenchel <= 1e-8 and trip <= 1e-6
    report(5, ok, f"value gap {gap:.2e}, Fenchel residual {fenchel:.2e}, round trip {trip:.2e}")


def test_criterion_06_duality(report):
    f = make_quadratic(Q14)
    cloud = SampleCloud.default(2, seed=7, pairs=2000)
    p4, d4 = dual_shift_check(f, 4 + 1e-6, cloud)
    p3, d3 = dual_shift_check(f, 3.0, cloud)
    ok = p4.passed and d4.passed and not p3.passed and not d3.passed
    report(6, ok, f"gamma=4+1e-6: {p4.status}/{d4.status}; gamma=3: {p3.status}/{d3.status} "
                  f"(margins {p3.worst_margin:.3e}/{d3.worst_margin:.3e})")


def test_criterion_07_improved_rate(report):
    t0 = time.perf_counter()
    f, quad, ls, lsq = _gd_traces()
    pair = compare_rates(4.0, 1.0)
    improved = [verify_rate(tr, pair.improved) for tr in quad]
    standard = [verify_rate(tr, pair.standard) for tr in quad]
    worst = max(r.worst_ratio for r in improved)
    ls_factor = compare_rates(1.0, 1.0).improved
    ls_ratios = [r for tr in lsq for r in tr.gap_ratios if r is not None]
    ls_worst = max(ls_ratios)
    elapsed = time.perf_counter() - t0
    ok = (all(r.passed for r in improved) and all(r.passed for r in standard)
          and abs(worst - 0.5625) <= 1e-9 and ls_factor == 0.0 and ls_worst <= 1e-9
          and elapsed < 2.0)
    report(7, ok, f"quadratic worst ratio {worst!r} (bound 0.6), least squares worst "
                  f"{ls_worst:.1e} over {len(ls_ratios)} ratios, {elapsed:.2f}s")


def test_criterion_08_descent(report):
    f, quad, ls, lsq = _gd_traces()
    checks = [verify_descent_inequalities(f, 4.0, tr) for tr in quad]
    checks += [verify_descent_inequalities(ls, 1.0, tr) for tr in lsq]
    worst = min(min(c.step1_worst_margin, c.step3_worst_margin) for c in checks)
    tighter = True
    for L, tr in [(4.0, tr) for tr in quad] + [(1.0, tr) for tr in lsq]:
        s1, s3 = descent_bounds(tr, L)
        moving = np.asarray(tr.grad_norms[1:]) > 0
        tighter &= bool(np.all(s3 <= s1) and np.all(s3[moving] < s1[moving]))
    ok = all(c.step1_pass and c.step3_checked and c.step3_pass for c in checks) and tighter
    report(8, ok, f"STEP1/STEP3 hold on {len(checks)} traces, worst margin {worst:.3e}; "
                  f"STEP3 bound below STEP1")


def test_criterion_09_subproblem(report):
    fs = catalog()
    rng = make_rng(9, stream=0)
    mismatches = 0
    for _ in range(1000):
        f = fs[int(rng.integers(len(fs)))]
        x = rng.uniform(-3, 3, size=f.dim)
        t = float(np.exp(rng.uniform(-3, 3)))
        mismatches += not np.array_equal(model_argmin(f, x, t), gd_step(f, x, 1.0 / t))
    report(9, mismatches == 0, f"{mismatches} mismatches in 1000 triples")


def test_criterion_10_determinism_and_exit_codes(report, tmp_path):
    def suite(spec, name):
        return main(["suite", "--function", spec, "--seed", "7", "--out", str(tmp_path / name)])

    codes = {
        "quadratic": suite("quadratic:diag:1,4", "q1"),
        "negative_phi0": suite("negative_phi0:2", "n"),
        "least_squares": suite("least_squares:2x2:1,0,0,0:b:1,0", "l"),
        "usage": main(["certify", "--function", "bogus:1"]),
    }
    suite("quadratic:diag:1,4", "q2")
    same = ((tmp_path / "q1" / "conditions.csv").read_bytes()
            == (tmp_path / "q2" / "conditions.csv").read_bytes())
    expected = {"quadratic": 0, "negative_phi0": 1, "least_squares": 0, "usage": 2}
    report(10, same and codes == expected, f"conditions.csv identical: {same}; exit codes {codes}")
