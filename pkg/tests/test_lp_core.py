import itertools
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import linprog
import valuecast as vc
from valuecast.errors import (
    MalformedProblem,
    NumericalFailure,
    InfeasibleProblem,
    NodeBudgetExceeded,
)
from valuecast.lp_core import (
    LinearProgram,
    LpStatus,
    solve_lp,
    solve_milp,
    format_lp,
    dump_lp,
    _Simplex,
    _BASIC,
    _AT_LOWER,
)
from valuecast.market_models import build_uc


def random_lp(rng, n=6, m_eq=2, m_ub=3):
    """A feasible, bounded LP around a random interior point"""
    x0 = rng.uniform(0, 5, n)
    lower = np.where(rng.random(n) < 0.3, -rng.uniform(0, 3, n), 0.0)
    upper = x0 + rng.uniform(0.5, 5, n)
    A_eq = rng.normal(size=(m_eq, n))
    A_ub = rng.normal(size=(m_ub, n))
    return LinearProgram(
        c=rng.normal(size=n),
        A_eq=A_eq,
        b_eq=A_eq @ x0,
        A_ub=A_ub,
        b_ub=A_ub @ x0 + rng.uniform(0, 2, m_ub),
        lower=lower,
        upper=upper,
    )


def reference_objective(lp):
    res = linprog(
        lp.c,
        A_ub=lp.A_ub if lp.A_ub.size else None,
        b_ub=lp.b_ub if lp.A_ub.size else None,
        A_eq=lp.A_eq if lp.A_eq.size else None,
        b_eq=lp.b_eq if lp.A_eq.size else None,
        bounds=list(zip(lp.lower, lp.upper)),
        method="highs",
    )
    assert res.status == 0
    return res.fun


def check_certificate(lp, solution):
    assert solution.status is LpStatus.OPTIMAL
    residuals = solution.certificate_residuals(lp)
    assert residuals["primal"] <= 1e-8 * (1 + np.abs(lp.b_eq).max(initial=0))
    assert residuals["dual"] <= 1e-7
    assert residuals["gap"] <= 1e-8 * (1 + abs(solution.objective))
    assert residuals["complementary_slackness"] <= 1e-8 * (1 + abs(solution.objective))


def test_equality_dual():
    """min 2x s.t. x = 5 prices the row at 2"""
    lp = LinearProgram(c=[2.0], A_eq=[[1.0]], b_eq=[5.0])
    solution = solve_lp(lp)
    assert solution.objective == pytest.approx(10.0)
    assert solution.eq_duals == pytest.approx([2.0])
    assert solution.dual_objective(lp) == pytest.approx(10.0)


def test_free_variable_inequality_dual():
    """min x with x free and -x <= 3 ends at -3 with a unit inequality dual"""
    lp = LinearProgram(c=[1.0], A_ub=[[-1.0]], b_ub=[3.0], lower=[-np.inf])
    solution = solve_lp(lp)
    assert solution.x == pytest.approx([-3.0])
    assert solution.ineq_duals == pytest.approx([1.0])
    check_certificate(lp, solution)


def test_toy_day_ahead_lp():
    """two generators serving 46 kW: the marginal unit prices the balance"""
    lp = LinearProgram(c=[10, 30], A_eq=[[1, 1]], b_eq=[46], upper=[40, 60])
    solution = solve_lp(lp)
    assert_allclose(solution.x, [40, 6])
    assert solution.objective == pytest.approx(580)
    assert solution.eq_duals == pytest.approx([30])
    assert solution.upper_duals == pytest.approx([20, 0])
    check_certificate(lp, solution)


def test_infeasible():
    lp = LinearProgram(c=[1, 1], A_eq=[[1, 1], [1, 1]], b_eq=[1, 3])
    solution = solve_lp(lp)
    assert solution.status is LpStatus.INFEASIBLE
    assert not solution.optimal
    assert solution.x is None


def test_infeasible_bounds():
    lp = LinearProgram(c=[1], A_ub=[[1]], b_ub=[-1])
    assert solve_lp(lp).status is LpStatus.INFEASIBLE


def test_unbounded():
    lp = LinearProgram(c=[-1, 0], A_ub=[[0, 1]], b_ub=[4])
    assert solve_lp(lp).status is LpStatus.UNBOUNDED


def test_no_rows():
    """bounds only: every variable sits at its cheaper bound"""
    lp = LinearProgram(c=[1, -1], lower=[-2, 0], upper=[3, 5])
    solution = solve_lp(lp)
    assert_allclose(solution.x, [-2, 5])
    assert solution.lower_duals == pytest.approx([1, 0])
    assert solution.upper_duals == pytest.approx([0, 1])
    check_certificate(lp, solution)


def test_malformed():
    with pytest.raises(MalformedProblem):
        LinearProgram(c=[1, 2], A_eq=[[1, 2, 3]], b_eq=[1])
    with pytest.raises(MalformedProblem):
        LinearProgram(c=[1, 2], A_eq=[[1, 2]], b_eq=[1, 2])
    with pytest.raises(MalformedProblem):
        LinearProgram(c=[1], lower=[2], upper=[1])
    with pytest.raises(MalformedProblem):
        LinearProgram(c=[np.nan])
    with pytest.raises(MalformedProblem):
        solve_lp("not a problem")


def test_iteration_cap():
    lp = LinearProgram(c=[-1, -1], A_ub=np.eye(2), b_ub=[1, 1])
    with vc.config(solver__max_iterations=1):
        with pytest.raises(NumericalFailure):
            solve_lp(lp)
    assert solve_lp(lp).objective == pytest.approx(-2)


def test_random_lps():
    """random feasible LPs match the reference optimum with a valid certificate"""
    rng = np.random.default_rng(0)
    for _ in range(200):
        lp = random_lp(rng, n=rng.integers(2, 9), m_eq=rng.integers(0, 4), m_ub=rng.integers(0, 5))
        solution = solve_lp(lp)
        check_certificate(lp, solution)
        expected = reference_objective(lp)
        assert solution.objective == pytest.approx(expected, rel=1e-6, abs=1e-6)


def test_random_lps_with_frequent_refactoring(refactor_often):
    rng = np.random.default_rng(1)
    for _ in range(50):
        lp = random_lp(rng, n=8, m_eq=3, m_ub=4)
        check_certificate(lp, solve_lp(lp))


def test_bland_rule():
    """Bland's rule from the first degenerate pivot reaches the same optimum"""
    rng = np.random.default_rng(2)
    for _ in range(50):
        lp = random_lp(rng, n=6, m_eq=2, m_ub=4)
        expected = solve_lp(lp).objective
        with vc.config(solver__degenerate_threshold=1):
            solution = solve_lp(lp)
        check_certificate(lp, solution)
        assert solution.objective == pytest.approx(expected, rel=1e-8, abs=1e-8)


def test_degenerate_vertex():
    """three rows meeting in one vertex of the plane"""
    lp = LinearProgram(
        c=[-1, -1], A_ub=[[1, 0], [0, 1], [1, 1]], b_ub=[1, 1, 2]
    )
    solution = solve_lp(lp)
    assert_allclose(solution.x, [1, 1])
    check_certificate(lp, solution)


def infeasible_lp(rng, n, m_eq, m_ub):
    """a feasible LP plus a row pair a'x <= b and a'x >= b + 1"""
    lp = random_lp(rng, n, m_eq, m_ub)
    a = rng.normal(size=n)
    b = rng.normal()
    return LinearProgram(
        c=lp.c,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        A_ub=np.vstack([lp.A_ub, a, -a]),
        b_ub=np.concatenate([lp.b_ub, [b, -b - 1.0]]),
        lower=lp.lower,
        upper=lp.upper,
    )


def unbounded_lp(rng, n, m_eq, m_ub):
    """rows that leave a non-negative ray r free, and an objective decreasing along it"""
    ray = rng.uniform(0.1, 1.0, n)

    def orthogonal(rows):
        return rows - np.outer(rows @ ray, ray) / (ray @ ray)

    x0 = rng.uniform(0, 5, n)
    A_eq = orthogonal(rng.normal(size=(m_eq, n)))
    A_ub = orthogonal(rng.normal(size=(m_ub, n)))
    c = orthogonal(rng.normal(size=(1, n)))[0] - ray
    return LinearProgram(
        c=c,
        A_eq=A_eq,
        b_eq=A_eq @ x0,
        A_ub=A_ub,
        b_ub=A_ub @ x0 + rng.uniform(0, 2, m_ub),
    )


@pytest.mark.slow
def test_certificate_suite():
    """feasible, infeasible and unbounded instances of up to 30 variables and 60 rows"""
    rng = np.random.default_rng(3)
    for k in range(1000):
        n = int(rng.integers(2, 31))
        m_eq = int(rng.integers(0, min(n, 10) + 1))
        m_ub = int(rng.integers(0, 60 - m_eq + 1))
        if k % 5 == 0:
            lp = infeasible_lp(rng, n, m_eq, max(m_ub - 2, 0))
            assert solve_lp(lp).status is LpStatus.INFEASIBLE
        elif k % 5 == 1:
            assert solve_lp(unbounded_lp(rng, n, min(m_eq, n - 1), m_ub)).status is (
                LpStatus.UNBOUNDED
            )
        else:
            lp = random_lp(rng, n, m_eq, m_ub)
            solution = solve_lp(lp)
            check_certificate(lp, solution)
            assert solution.objective == pytest.approx(
                reference_objective(lp), rel=1e-6, abs=1e-6
            )


def test_small_infeasible_and_unbounded():
    rng = np.random.default_rng(5)
    for _ in range(10):
        assert solve_lp(infeasible_lp(rng, 5, 2, 3)).status is LpStatus.INFEASIBLE
        assert solve_lp(unbounded_lp(rng, 5, 2, 3)).status is LpStatus.UNBOUNDED


def test_relative_pivot_tolerance():
    """entries far below the largest |alpha| never pivot, even at a zero ratio"""
    lp = LinearProgram(c=[-1.0], A_ub=[[1.0], [1.0]], b_ub=[1.0, 5.0])
    simplex = _Simplex(lp)
    simplex.x[simplex.basis] = [0.0, 5.0]
    step, leave, status = simplex._ratio_test(0, np.array([1e-3, 1e7]), 1.0, False)
    assert leave == 1
    assert step == pytest.approx(5e-7)
    assert status == _AT_LOWER


def test_harris_prefers_the_larger_pivot():
    """of two rows blocking within the bound tolerance, the larger pivot leaves"""
    lp = LinearProgram(c=[-1.0], A_ub=[[1.0], [1.0]], b_ub=[1.0, 1.0])
    simplex = _Simplex(lp)
    simplex.x[simplex.basis] = [0.0, 1e-12]
    step, leave, _ = simplex._ratio_test(0, np.array([1e-3, 1.0]), 1.0, False)
    assert leave == 1
    assert step == 1e-12
    # Bland's rule keeps the exact minimum ratio
    _, leave, _ = simplex._ratio_test(0, np.array([1e-3, 1.0]), 1.0, True)
    assert leave == 0


def test_singular_basis_is_repaired():
    """two copies of a column in the basis: one is swapped for an artificial"""
    lp = LinearProgram(c=[1, 1, 1], A_eq=[[1, 1, 0], [1, 1, 1]], b_eq=[1, 2])
    simplex = _Simplex(lp)
    simplex.status[simplex.basis] = _AT_LOWER
    simplex.x[simplex.basis] = 0.0
    simplex.basis[:] = [0, 1]
    simplex.status[[0, 1]] = _BASIC
    simplex.refactor()
    assert simplex.repaired
    assert np.isin(simplex.basis, simplex.artificial).sum() == 1
    assert simplex.residual() <= 1e-12
    assert (simplex.x[simplex.artificial] >= 0).all()
    solution = simplex.solve()
    assert solution.objective == pytest.approx(2.0)
    check_certificate(lp, solution)


def test_badly_scaled_rows():
    """rows scaled by powers of ten give the same optimum and unscaled duals"""
    rng = np.random.default_rng(6)
    for _ in range(20):
        lp = random_lp(rng, n=8, m_eq=3, m_ub=4)
        eq_scale = 10.0 ** rng.integers(-3, 4, 3)
        ub_scale = 10.0 ** rng.integers(-3, 4, 4)
        scaled = LinearProgram(
            c=lp.c,
            A_eq=lp.A_eq * eq_scale[:, None],
            b_eq=lp.b_eq * eq_scale,
            A_ub=lp.A_ub * ub_scale[:, None],
            b_ub=lp.b_ub * ub_scale,
            lower=lp.lower,
            upper=lp.upper,
        )
        solution, reference = solve_lp(scaled), solve_lp(lp)
        assert solution.objective == pytest.approx(reference.objective, rel=1e-8, abs=1e-8)
        assert solution.dual_objective(scaled) == pytest.approx(
            solution.objective, rel=1e-7, abs=1e-7
        )


# --- branch and bound ---


def knapsack(rng, n=8):
    weights = rng.integers(1, 10, n).astype(float)
    values = rng.integers(1, 20, n).astype(float)
    capacity = float(weights.sum() // 2)
    lp = LinearProgram(c=-values, A_ub=[weights], b_ub=[capacity], upper=np.ones(n))
    best = max(
        values @ np.array(choice)
        for choice in itertools.product((0, 1), repeat=n)
        if weights @ np.array(choice) <= capacity
    )
    return lp, -best


def test_milp_knapsack_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(20):
        lp, expected = knapsack(rng)
        milp = solve_milp(lp, range(lp.n_vars))
        assert milp.objective == pytest.approx(expected)
        assert_allclose(milp.x, np.round(milp.x), atol=1e-6)
        assert milp.relaxation_bound <= milp.objective + 1e-9
        assert milp.best_bound == milp.objective
        assert milp.gap == 0


def multi_knapsack(rng, n, rows=2):
    weights = rng.integers(1, 10, (rows, n)).astype(float)
    values = rng.integers(1, 20, n).astype(float)
    capacity = weights.sum(axis=1) // 2
    choices = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    feasible = (choices @ weights.T <= capacity).all(axis=1)
    lp = LinearProgram(c=-values, A_ub=weights, b_ub=capacity, upper=np.ones(n))
    return lp, -(choices[feasible] @ values).max()


@pytest.mark.parametrize("n", [4, 8, pytest.param(12, marks=pytest.mark.slow)])
def test_milp_brute_force(n):
    """two knapsack rows, checked against every 0/1 vector"""
    rng = np.random.default_rng(n)
    for _ in range(10):
        lp, expected = multi_knapsack(rng, n)
        milp = solve_milp(lp, range(n))
        assert milp.objective == pytest.approx(expected)
        assert_allclose(milp.x, np.round(milp.x), atol=1e-6)


def test_milp_general_integers():
    """max x + y s.t. 2x + 2y <= 7 over the integers"""
    lp = LinearProgram(c=[-1, -1], A_ub=[[2, 2]], b_ub=[7], upper=[10, 10])
    milp = solve_milp(lp, [0, 1])
    assert milp.objective == pytest.approx(-3)
    assert milp.relaxation_bound == pytest.approx(-3.5)


def test_milp_infeasible():
    lp = LinearProgram(c=[1], lower=[0.2], upper=[0.8])
    with pytest.raises(InfeasibleProblem):
        solve_milp(lp, [0])


def test_milp_unit_commitment(toy_uc):
    lp, binaries = build_uc(toy_uc, [0.0], [30.0])
    milp = solve_milp(lp, binaries)
    assert milp.objective == pytest.approx(500)
    assert milp.relaxation_bound == pytest.approx(420)
    assert_allclose(milp.x[binaries], [1, 0], atol=1e-9)


def test_node_budget_keeps_incumbent(toy_uc):
    lp, binaries = build_uc(toy_uc, [0.0], [30.0])
    with vc.config(milp__node_budget=2):
        with pytest.raises(NodeBudgetExceeded) as info:
            solve_milp(lp, binaries)
    incumbent = info.value.solution
    assert incumbent.objective == pytest.approx(500)
    assert incumbent.best_bound == pytest.approx(420)
    assert incumbent.gap == pytest.approx(80)


def test_node_budget_without_incumbent():
    lp = LinearProgram(c=[-1], A_ub=[[2]], b_ub=[1], upper=[10])
    with vc.config(milp__node_budget=1):
        with pytest.raises(NodeBudgetExceeded) as info:
            solve_milp(lp, [0])
    assert info.value.solution is None


def test_format_and_dump(tmp_path):
    lp = LinearProgram(c=[10, 30], A_eq=[[1, 1]], b_eq=[46], upper=[40, 60], names=["g0", "g1"])
    text = format_lp(lp)
    assert text.startswith("minimize")
    assert "+10 g0 +30 g1" in text
    assert "eq0: +1 g0 +1 g1 = 46" in text
    dump_lp(lp, tmp_path / "toy.lp")
    assert (tmp_path / "toy.lp").read_text() == text
