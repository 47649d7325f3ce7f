import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from numpy.testing import assert_allclose

from garza.chebyshev import ChebReport, Method, Verdict, check_chebyshev
from garza.core import Design, IntervalDomain, index, moment_vector
from garza.improve import (Admissibility, CaseTag, CertificateError, Direction, GridLP,
                           InfeasibleMoments, build_grid_lp, case_tag, improve_design,
                           is_admissible_candidate, principal_representation,
                           principal_structure, solve_grid_lp)
from garza.matrices import c_matrix
from garza.models import polynomial_model
from helpers import monomials, random_design
from oracles import gauss_lobatto, gauss_radau_right, uniform_monomial_moments

SYM = IntervalDomain(-1.0, 1.0)
QUADRATIC = polynomial_model(2, SYM)
QUAD_CHEB = check_chebyshev(QUADRATIC.psi, SYM)


def test_base_design_improves_to_upper_representation(linear, base_design):
    res = improve_design(base_design, linear)
    assert_allclose(res.improved.support, [0, 1], atol=1e-12)
    assert_allclose(res.improved.weights, [0.625, 0.375], atol=1e-8)
    assert res.achieved_dk == pytest.approx(0.375, abs=1e-8)
    assert res.original_dk == 9 / 32
    assert res.case_tag is CaseTag.EVEN_AB and res.direction is Direction.UPPER
    assert res.loewner_certificate >= -1e-12
    assert res.original_moments.values == (1.0, 0.375)


def test_principal_design_is_a_fixed_point(linear):
    xi = Design.create([0.0, 1.0], [0.625, 0.375])
    res = improve_design(xi, linear)
    assert res.case_tag is CaseTag.ALREADY_ADMISSIBLE
    assert res.improved == xi and res.achieved_dk == res.original_dk


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_introductory_pattern(linear, k):
    n = 10
    res = improve_design(Design.create([0, 0.5], [(n - 2 * k) / n, 2 * k / n]), linear)
    assert_allclose(res.improved.support, [0, 1], atol=1e-7)
    assert_allclose(res.improved.weights, [(n - k) / n, k / n], atol=1e-7)
    assert res.achieved_dk == pytest.approx(2 * res.original_dk, abs=1e-12)


def test_hand_sized_lp():
    grid = np.array([0.0, 0.5, 1.0])
    lp = GridLP(grid, grid**2, np.vstack([np.ones(3), grid]), np.array([1.0, 0.2]))
    assert_allclose(solve_grid_lp(lp, Direction.UPPER), [0.8, 0, 0.2], atol=1e-12)
    assert_allclose(solve_grid_lp(lp, Direction.LOWER), [0.6, 0.4, 0], atol=1e-12)


def test_half_moment_lp(unit):
    lp = build_grid_lp(monomials(2), unit, [1.0, 0.5], grid_n=101)
    w = solve_grid_lp(lp, Direction.UPPER)
    assert np.count_nonzero(w) <= 3
    assert_allclose(w[[0, -1]], [0.5, 0.5], atol=1e-12)
    assert np.dot(w, lp.objective) == pytest.approx(0.5)


def test_grid_lp_basic_solution_is_sparse():
    lp = build_grid_lp(QUADRATIC.psi, SYM, uniform_monomial_moments(3), grid_n=501)
    assert np.count_nonzero(solve_grid_lp(lp)) <= QUADRATIC.k + 1


def test_grid_point_mass_is_recovered(unit):
    lp = build_grid_lp(monomials(2), unit, [1.0, 0.3], grid_n=21)
    w = solve_grid_lp(lp, Direction.LOWER)
    assert_allclose(w[6], 1.0, atol=1e-12)


def test_grid_size_floor(unit):
    with pytest.raises(ValueError, match="coarse"):
        build_grid_lp(monomials(4), unit, [1, 0, 0, 0], grid_n=30)


def test_point_mass_at_boundary_is_its_own_representation(unit):
    mv = moment_vector(Design.point_mass(0.0), monomials(3))
    d = principal_representation(mv, monomials(3), unit, Direction.UPPER)
    assert d.size == 1 and d.support[0] == 0.0


def test_infeasible_moments_name_the_constraint(unit):
    with pytest.raises(InfeasibleMoments, match="d_1"):
        principal_representation([1.0, 2.0], monomials(2), unit)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_even_order_gives_lobatto(m):
    k = 2 * m
    d = principal_representation(uniform_monomial_moments(k), monomials(k), SYM)
    x, w = gauss_lobatto(m + 1)
    assert_allclose(d.support, x, atol=1e-8)
    assert_allclose(d.weights, w, atol=1e-8)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_odd_order_gives_radau_at_b(m):
    k = 2 * m + 1
    d = principal_representation(uniform_monomial_moments(k), monomials(k), SYM)
    x, w = gauss_radau_right(m + 1)
    assert d.support[-1] == 1.0
    assert_allclose(d.support, x, atol=1e-8)
    assert_allclose(d.weights, w, atol=1e-8)


@pytest.mark.parametrize("k, direction, size, has_A, has_B", [
    (4, Direction.UPPER, 3, True, True),
    (5, Direction.UPPER, 3, False, True),
    (4, Direction.LOWER, 2, False, False),
    (5, Direction.LOWER, 3, True, False),
])
def test_lower_and_upper_structures(k, direction, size, has_A, has_B):
    d = principal_representation(uniform_monomial_moments(k), monomials(k), SYM, direction)
    st_ = principal_structure(k, direction)
    assert d.size == size == st_.size
    assert bool(d.support[0] == -1.0) is has_A and bool(d.support[-1] == 1.0) is has_B
    assert index(d, SYM) == k / 2


def test_case_tags():
    assert case_tag(3, Direction.UPPER) is CaseTag.ODD_B
    assert case_tag(2, Direction.UPPER) is CaseTag.EVEN_AB
    assert case_tag(3, Direction.LOWER) is CaseTag.ODD_A
    assert case_tag(2, Direction.LOWER) is CaseTag.EVEN_INTERIOR


def test_wrong_direction_is_a_hard_error(linear, base_design):
    with pytest.raises(CertificateError):
        improve_design(base_design, linear, Direction.LOWER)


def test_cheb_minus_system_improves_downwards(unit):
    from garza.models import ModelSpec
    from garza.core import PsiSystem
    psi = PsiSystem((lambda x: x, lambda x: -x**2))
    m = ModelSpec("neg", psi, unit, np.array([[0, 1], [1, 2]]))
    res = improve_design(Design.create([0.2, 0.5, 0.9]), m)
    assert res.verdict is Verdict.CHEB_MINUS and res.direction is Direction.LOWER
    assert res.case_tag is CaseTag.EVEN_INTERIOR
    assert res.achieved_dk >= res.original_dk and res.loewner_certificate >= -1e-12


def test_indeterminate_verdict_still_dominates(base_design, linear):
    cheb = ChebReport(Verdict.INDETERMINATE, Method.BOTH)
    res = improve_design(base_design, linear, cheb=cheb)
    assert res.case_tag is CaseTag.UNCERTIFIED
    assert res.loewner_certificate >= -1e-8
    assert res.achieved_dk == pytest.approx(0.375, abs=1e-12)


def test_roots_above_b_put_b_into_the_support(rational_above):
    rng = np.random.default_rng(11)
    cheb = check_chebyshev(rational_above.psi, rational_above.domain)
    assert cheb.verdict is Verdict.CHEB_PLUS
    for _ in range(5):
        xi = random_design(rng, rational_above.domain, 5, 8)
        res = improve_design(xi, rational_above, cheb=cheb)
        assert res.case_tag is CaseTag.ODD_B
        assert res.improved.support[-1] == 1.0 and res.improved.size <= 3


def test_admissibility_examples(linear, base_design):
    pm = is_admissible_candidate(Design.point_mass(0.0), linear)
    assert pm.status is Admissibility.PROVEN_UNIMPROVABLE and pm.index == 0.5
    assert is_admissible_candidate(base_design, linear).status is Admissibility.IMPROVABLE
    b = is_admissible_candidate(Design.create([0.0, 1.0], [0.625, 0.375]), linear)
    assert b.status is Admissibility.BOUNDARY_CASE and not b.improvable
    lower = is_admissible_candidate(Design.point_mass(0.5), linear)   # a lower representation
    assert lower.status is Admissibility.BOUNDARY_CASE and lower.improvable


def test_admissibility_refuses_indeterminate(linear):
    with pytest.raises(ValueError, match="definite"):
        is_admissible_candidate(Design.point_mass(0.0), linear, ChebReport(Verdict.INDETERMINATE, Method.BOTH))


def test_result_json_round_trips_fields(linear, base_design):
    js = improve_design(base_design, linear).to_json()
    for key in ("improved", "original_moments", "achieved_dk", "original_dk", "direction", "case_tag",
                "loewner_certificate", "support_bound_ok", "original"):
        assert key in js


small_designs = st.lists(st.tuples(st.floats(-1, 1), st.floats(0.05, 1)), min_size=1, max_size=7).map(
    lambda pts: Design.create([p for p, _ in pts], [w for _, w in pts], SYM))


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_designs)
def test_improvement_invariants(xi):
    res = improve_design(xi, QUADRATIC, cheb=QUAD_CHEB)
    k = QUADRATIC.k
    assert res.moment_error <= 1e-8
    C0 = c_matrix(xi, QUADRATIC)
    assert res.loewner_certificate >= -1e-8 * np.linalg.norm(C0, 2)
    assert res.improved.size <= (k + 2) // 2 and res.support_bound_ok
    assert res.achieved_dk >= res.original_dk - 1e-12
    if index(xi, SYM) < k / 2:
        assert res.case_tag is CaseTag.ALREADY_ADMISSIBLE
    again = improve_design(res.improved, QUADRATIC, cheb=QUAD_CHEB)
    assert abs(again.achieved_dk - res.achieved_dk) <= 1e-9


def test_refined_optimum_matches_fine_grid_lp():
    rng = np.random.default_rng(2)
    for _ in range(5):
        xi = random_design(rng, SYM, 4, 7)
        res = improve_design(xi, QUADRATIC, cheb=QUAD_CHEB)
        lp = build_grid_lp(QUADRATIC.psi, SYM, moment_vector(xi, QUADRATIC.psi).as_array(), 10001, xi.support)
        opt = float(np.dot(solve_grid_lp(lp), lp.objective))
        assert res.achieved_dk >= opt - 1e-12
        assert res.achieved_dk == pytest.approx(opt, abs=1e-7)


def test_low_index_designs_cannot_be_raised():
    xi = Design.create([-1.0, 0.3], [0.4, 0.6])      # index 1.5 < k/2 = 2
    lp = build_grid_lp(QUADRATIC.psi, SYM, moment_vector(xi, QUADRATIC.psi).as_array(), 2001, xi.support)
    opt = float(np.dot(solve_grid_lp(lp), lp.objective))
    assert opt == pytest.approx(moment_vector(xi, QUADRATIC.psi).values[-1], abs=1e-10)
