import numpy as np
import pytest

from convexcert.bregman import bregman
from convexcert.certify import check_condition
from convexcert.errors import EvaluationError, InvalidObjectiveError, UsageError
from convexcert.linalg import SampleCloud
from convexcert.objectives import (Objective, ObjectiveMeta, ShiftMode, make_least_squares,
                                   make_phi0, make_quadratic,
                                   parse_function_spec, scaled_shift)

from conftest import catalog


def test_quadratic_examples(quad14):
    # hand evaluation: 1/2 (1 + 4)
    assert quad14.value([1.0, 1.0]) == 2.5
    assert np.array_equal(quad14.gradient([1.0, 1.0]), [1.0, 4.0])
    assert quad14.meta.mu_true == 1.0
    assert quad14.meta.L_true == pytest.approx(4.0, abs=1e-12)
    assert quad14.meta.pl_true == quad14.meta.mu_true
    assert quad14.meta.f_star == 0.0
    assert quad14.meta.conjugate_well_posed
    assert quad14.meta.analytic_conjugate([1.0, 1.0]) == pytest.approx(0.625)


def test_identity_quadratic_is_phi0():
    q = make_quadratic(np.eye(2))
    assert q.meta.L_true == q.meta.mu_true == 1.0
    phi = make_phi0(2)
    rng = np.random.default_rng(0)
    for x in rng.uniform(-2, 2, size=(100, 2)):
        assert abs(q.value(x) - phi.value(x)) <= 1e-15
        assert np.array_equal(q.gradient(x), phi.gradient(x))


def test_quadratic_row_major_input():
    q = make_quadratic([1.0, 0.0, 0.0, 4.0])
    assert q.dim == 2 and q.value([1.0, 1.0]) == 2.5


def test_quadratic_with_linear_term():
    q = make_quadratic(np.diag([2.0, 4.0]), b=[2.0, 4.0])
    assert np.allclose(q.meta.minimizer, [1.0, 1.0])
    # 1/2 (2 + 4) - (2 + 4)
    assert q.meta.f_star == pytest.approx(-3.0)
    assert q.meta.analytic_conjugate is None


def test_singular_quadratic_metadata():
    q = make_quadratic(np.diag([0.0, 2.0]), b=[0.0, 2.0])
    assert q.meta.mu_true == 0.0 and q.meta.pl_true == 2.0 and q.meta.L_true == 2.0
    assert np.allclose(q.meta.minimizer, [0.0, 1.0])
    assert q.meta.f_star == pytest.approx(-1.0)
    assert not q.meta.conjugate_well_posed
    unbounded = make_quadratic(np.diag([0.0, 2.0]), b=[1.0, 0.0])
    assert unbounded.meta.f_star is None and unbounded.meta.pl_true is None


def test_quadratic_rejects_bad_matrices():
    with pytest.raises(InvalidObjectiveError):
        make_quadratic([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(InvalidObjectiveError):
        make_quadratic(np.diag([1.0, -1.0]))
    with pytest.raises(InvalidObjectiveError):
        make_quadratic(np.eye(2), b=[1.0, 2.0, 3.0])


def test_least_squares_examples(ls_rank1):
    m = ls_rank1.meta
    assert (m.pl_true, m.mu_true, m.L_true) == (1.0, 0.0, 1.0)
    assert m.f_star == 0.0 and not m.conjugate_well_posed
    ident = make_least_squares(np.eye(2), [0.0, 0.0])
    phi = make_phi0(2)
    assert ident.value([0.3, -1.2]) == pytest.approx(phi.value([0.3, -1.2]))
    scalar = make_least_squares([[2.0]], [2.0])
    # d/dx 1/2 (2x - 2)^2 = 0 at x = 1, curvature 4
    assert np.allclose(scalar.meta.minimizer, [1.0])
    assert scalar.meta.f_star == 0.0 and scalar.meta.L_true == pytest.approx(4.0)


def test_least_squares_dimension_mismatch():
    with pytest.raises(InvalidObjectiveError):
        make_least_squares(np.eye(2), [1.0, 2.0, 3.0])


def test_quartic_examples(quartic):
    assert quartic.value([2.0]) == 16.0
    assert quartic.gradient([3.0])[0] == 108.0
    assert quartic.gradient([0.0])[0] == 0.0
    assert quartic.meta.is_convex and quartic.meta.L_true is None and quartic.meta.mu_true == 0.0


def test_negative_phi0_examples(neg_phi0):
    assert neg_phi0.value([1.0, 1.0]) == -1.0
    assert np.array_equal(neg_phi0.gradient([2.0, 0.0]), [-2.0, 0.0])
    # -1/2 ||x - y||^2
    assert bregman(neg_phi0, [1.0, 0.0], [0.0, 0.0]) == -0.5
    assert not neg_phi0.meta.is_convex and neg_phi0.meta.L_true == 1.0


def test_scaled_shift_examples(quad14, phi0):
    cloud = SampleCloud.default(2, seed=1, pairs=300)
    rng = np.random.default_rng(1)
    s = scaled_shift(quad14, 4.0, ShiftMode.L_MINUS_F)
    t = scaled_shift(quad14, 1.0, ShiftMode.F_MINUS_MU)
    z = scaled_shift(phi0, 1.0, ShiftMode.L_MINUS_F)
    for x in rng.uniform(-2, 2, size=(50, 2)):
        # Hessians 4I - Q = diag(3, 0) and Q - I = diag(0, 3)
        assert s.value(x) == pytest.approx(1.5 * x[0] ** 2, abs=1e-12)
        assert t.value(x) == pytest.approx(1.5 * x[1] ** 2, abs=1e-12)
        assert z.value(x) == 0.0 and np.array_equal(z.gradient(x), [0.0, 0.0])
    assert check_condition(s, "CONV3", {}, cloud).passed
    assert check_condition(t, "CONV3", {}, cloud).passed
    assert s.meta == ObjectiveMeta()


def test_scaled_shift_linearity(quad14):
    rng = np.random.default_rng(2)
    s = scaled_shift(quad14, 2.5, "L_MINUS_F")
    for x in rng.uniform(-2, 2, size=(100, 2)):
        assert s.value(x) + quad14.value(x) == pytest.approx(1.25 * float(x @ x), rel=1e-15)


def test_meta_invariants():
    with pytest.raises(InvalidObjectiveError):
        ObjectiveMeta(is_convex=False, mu_true=1.0, conjugate_well_posed=True)
    with pytest.raises(InvalidObjectiveError):
        ObjectiveMeta(is_convex=True, conjugate_well_posed=True, mu_true=2.0, L_true=1.0)
    with pytest.raises(InvalidObjectiveError):
        ObjectiveMeta(L_true=1.0, pl_true=2.0)


@pytest.mark.parametrize("f", catalog(), ids=lambda f: f.name)
def test_catalog_meta_ordering(f):
    m = f.meta
    if None not in (m.mu_true, m.pl_true, m.L_true):
        assert m.mu_true <= m.pl_true <= m.L_true
        if m.mu_true > 0:
            assert m.pl_true == pytest.approx(m.mu_true)


def test_objective_flags_nonfinite():
    f = Objective("blowup", 1, lambda x: float("inf"), lambda x: np.array([np.nan]))
    with pytest.raises(EvaluationError):
        f.value([0.0])
    with pytest.raises(EvaluationError):
        f.gradient([0.0])


@pytest.mark.parametrize("spec, dim", [
    ("phi0", 2), ("phi0:3", 3), ("negative_phi0:4", 4), ("quartic_1d", 1),
    ("quadratic:diag:1,4", 2), ("quadratic:full:2,1,1,2", 2), ("quadratic:diag:1,4:b:1,0", 2),
    ("least_squares:2x2:1,0,0,0:b:1,0", 2), ("least_squares:3x2:1,0,0,1,1,1", 2),
])
def test_parse_function_spec(spec, dim):
    f = parse_function_spec(spec)
    assert f.dim == dim


def test_parse_function_spec_values():
    f = parse_function_spec("quadratic:diag:1,4")
    assert f.value([1.0, 1.0]) == 2.5 and f.name == "quadratic:diag:1,4"
    g = parse_function_spec("least_squares:2x2:1,0,0,0:b:1,0")
    assert g.meta.pl_true == 1.0


@pytest.mark.parametrize("spec", [
    "bogus:1", "quadratic", "quadratic:diag:1,x", "quadratic:diag:1,-4", "phi0:0", "phi0:a",
    "least_squares:2x2:1,0,0", "least_squares:2by2:1", "quartic_1d:3", "quadratic:diag:1,4:c:1,0",
])
def test_parse_function_spec_rejects(spec):
    with pytest.raises(UsageError):
        parse_function_spec(spec)
