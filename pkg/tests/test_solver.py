import numpy as np
import pytest

from triregion.core import (
    FreenessMatrix,
    ModelParams,
    expenditure_system,
    firm_demand,
    mill_price,
    price_index,
    table1_endowments,
)
from triregion.solver import (
    RESIDUAL_LIMITS,
    AutarkyState,
    EquilibriumGuess,
    NoConvergenceError,
    SolverConfig,
    autarky_equilibrium,
    autarky_guess,
    solve_equilibrium,
    solve_prices,
    solve_wages,
    verify_equilibrium,
)

from oracles import rel_err, to_mp

DEFAULTS = ModelParams()
TABLE1 = table1_endowments()
L1990 = TABLE1.labor_1990
LAND = TABLE1.land

# Wage clearing an industry-free labor market, w = theta (K/L)^(1-theta),
# evaluated in 30-digit arithmetic for the Table 1 endowments.
AGRARIAN_WAGES = np.array(
    [0.080916651797141444, 0.085017417046667619, 0.43850168839223456]
)


# ---------------------------------------------------------------------------
# configuration types
# ---------------------------------------------------------------------------


def test_config_defaults_valid():
    cfg = SolverConfig()
    assert cfg.tol_price == 1e-12
    assert cfg.tol_wage == 1e-10
    assert cfg.tol_profit == 1e-10
    assert cfg.damping_wage == 0.5
    assert cfg.damping_variety == 0.25
    assert cfg.entrant_mass == 1e-8


@pytest.mark.parametrize(
    "kwargs",
    [
        {"tol_price": 0.0},
        {"tol_wage": -1e-9},
        {"tol_profit": 0.0},
        {"entrant_mass": 0.0},
        {"damping_wage": 0.0},
        {"damping_wage": 1.5},
        {"damping_variety": -0.1},
        {"max_iter_price": 0},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_guess_validation():
    g = EquilibriumGuess(w=np.ones(3), n=np.zeros(3))
    assert not g.w.flags.writeable
    with pytest.raises(ValueError):
        EquilibriumGuess(w=np.array([1.0, 0.0, 1.0]), n=np.ones(3))
    with pytest.raises(ValueError):
        EquilibriumGuess(w=np.ones(3), n=np.array([1.0, -1.0, 1.0]))


# ---------------------------------------------------------------------------
# price loop
# ---------------------------------------------------------------------------


def test_prices_single_producer_identity_freeness():
    # with one variety, unit wage and no trade the fixed point sits at unity
    p, q = solve_prices(
        np.array([1.0, 0.0, 0.0]), np.ones(3), FreenessMatrix.identity(), DEFAULTS
    )
    assert p[0] == pytest.approx(1.0, abs=1e-12)
    assert q[0] == pytest.approx(1.0, abs=1e-12)
    # nobody ships to the other two: no manufactures on offer at any price
    assert np.isinf(p[1:]).all() and np.isinf(q[1:]).all()


def test_prices_symmetric_inputs_give_symmetric_outputs():
    phi = np.full((3, 3), 0.3)
    np.fill_diagonal(phi, 1.0)
    p, q = solve_prices(np.full(3, 0.7), np.full(3, 1.3), phi, DEFAULTS)
    assert np.ptp(p) <= 1e-12 * p[0]
    assert np.ptp(q) <= 1e-12 * q[0]


def test_prices_satisfy_both_defining_equations():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n = rng.uniform(0.05, 3.0, size=3)
        w = rng.uniform(0.2, 5.0, size=3)
        off = rng.uniform(0.01, 1.0)
        phi = np.full((3, 3), off)
        np.fill_diagonal(phi, 1.0)
        p, q = solve_prices(n, w, phi, DEFAULTS)
        q_back = price_index(n, p, phi, DEFAULTS.sigma)
        p_back = mill_price(q, w, DEFAULTS.mu)
        assert np.abs(q_back / q - 1.0).max() < 1e-11
        assert np.abs(p_back / p - 1.0).max() < 1e-11


def test_prices_high_precision_cross_check():
    # push one solved fixed point through the defining equations at 30 digits
    n = np.array([0.5, 1.5, 0.25])
    w = np.array([1.0, 0.8, 2.0])
    phi = FreenessMatrix.from_links(0.4, 0.1)
    p, q = solve_prices(n, w, phi, DEFAULTS)
    sig = to_mp(DEFAULTS.sigma)
    mu = to_mp(DEFAULTS.mu)
    for j in range(3):
        acc = sum(
            to_mp(n[i]) * to_mp(phi[i, j]) * to_mp(p[i]) ** (1 - sig) for i in range(3)
        )
        q_mp = acc ** (1 / (1 - sig))
        assert rel_err(q_mp, q[j]) < 1e-11
        p_mp = q_mp**mu * to_mp(w[j]) ** (1 - mu)
        assert rel_err(p_mp, p[j]) < 1e-11


def test_prices_input_validation():
    with pytest.raises(ValueError):
        solve_prices(np.ones(3), np.array([1.0, -1.0, 1.0]), np.eye(3), DEFAULTS)
    with pytest.raises(ValueError):
        solve_prices(np.array([1.0, -0.1, 1.0]), np.ones(3), np.eye(3), DEFAULTS)


# ---------------------------------------------------------------------------
# wage loop
# ---------------------------------------------------------------------------


def test_wages_industry_free_closed_form():
    state = solve_wages(np.zeros(3), L1990, LAND, FreenessMatrix.identity(), DEFAULTS)
    assert np.abs(state.w / AGRARIAN_WAGES - 1.0).max() < 1e-10
    assert np.allclose(state.labor_agriculture, L1990, rtol=1e-10)
    assert np.all(state.labor_manufacturing == 0.0)


def test_wages_symmetric_input_equal_wages():
    L = np.full(3, 1.0 / 3.0)
    K = np.full(3, 1.0 / 3.0)
    phi = np.full((3, 3), 0.5)
    np.fill_diagonal(phi, 1.0)
    state = solve_wages(np.full(3, 0.4), L, K, phi, DEFAULTS)
    assert np.ptp(state.w) <= 1e-9 * state.w[0]


def test_wages_clear_every_labor_market():
    # masses near the self-sufficient levels, where a clearing wage exists
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = rng.uniform(0.05, 0.5, size=3)
        phi = FreenessMatrix.from_links(rng.uniform(0.05, 0.95), 0.01)
        state = solve_wages(n, L1990, LAND, phi, DEFAULTS)
        demand = state.labor_agriculture + state.labor_manufacturing
        assert np.abs(demand / L1990 - 1.0).max() <= 1e-10


def test_wages_oversized_masses_are_infeasible():
    # manufacturing labor demand is wage-level invariant once agriculture
    # has vanished, so sufficiently large masses can never clear: the solver
    # must say so rather than time out silently
    from triregion.solver import WageIterationError

    n = np.array([0.9751, 1.3561, 1.186])
    phi = FreenessMatrix.from_links(0.2527, 0.01)
    with pytest.raises(WageIterationError, match="no clearing wage"):
        solve_wages(n, L1990, LAND, phi, DEFAULTS)


def test_wages_state_internally_consistent():
    n = np.array([0.6, 0.2, 0.45])
    phi = FreenessMatrix.from_links(0.5, 0.01)
    state = solve_wages(n, L1990, LAND, phi, DEFAULTS)
    q_back = price_index(n, state.p, phi.phi, DEFAULTS.sigma)
    assert np.abs(q_back / state.q - 1.0).max() < 1e-10
    e_back = expenditure_system(state.Y, n, state.p, state.q, phi.phi, DEFAULTS)
    assert np.abs(e_back / state.e - 1.0).max() < 1e-9
    x_back = firm_demand(state.p, state.e, state.q, phi.phi, DEFAULTS.sigma)
    assert np.abs(x_back / state.x - 1.0).max() < 1e-9


def test_wages_rejects_nonpositive_endowments():
    with pytest.raises(ValueError):
        solve_wages(np.zeros(3), np.array([1.0, 0.0, 1.0]), LAND, np.eye(3), DEFAULTS)
    with pytest.raises(ValueError):
        solve_wages(np.zeros(3), L1990, np.array([0.1, -0.1, 0.1]), np.eye(3), DEFAULTS)


# ---------------------------------------------------------------------------
# self-sufficient single region
# ---------------------------------------------------------------------------


def test_autarky_break_even_when_recomputed():
    for i in range(3):
        st = autarky_equilibrium(L1990[i], LAND[i], DEFAULTS)
        # re-derive per-firm demand from scratch: one region, phi = [[1]]
        one = np.eye(1)
        n = np.array([st.n])
        p = np.array([st.p])
        q = np.array([st.q])
        e = expenditure_system(np.array([st.Y]), n, p, q, one, DEFAULTS)
        x = firm_demand(p, e, q, one, DEFAULTS.sigma)
        assert abs(x[0] - 1.0) < 1e-10


def test_autarky_price_identities():
    st = autarky_equilibrium(0.48, 0.12, DEFAULTS)
    assert st.p == pytest.approx(st.q**DEFAULTS.mu * st.w ** (1 - DEFAULTS.mu), rel=1e-12)
    assert st.q == pytest.approx(
        st.n ** (1.0 / (1.0 - DEFAULTS.sigma)) * st.p, rel=1e-12
    )


def test_autarky_endowment_scaling():
    # wages are scale-free; the variety mass scales as c^(a/(a+mu)) with
    # a = (1-sigma)(1-mu), slightly faster than c, because extra varieties
    # cheapen the intermediate composite and with it the break-even price
    a = (1.0 - DEFAULTS.sigma) * (1.0 - DEFAULTS.mu)
    expo = a / (a + DEFAULTS.mu)
    base = autarky_equilibrium(0.3, 0.5, DEFAULTS)
    for c in (2.0, 10.0, 0.25):
        scaled = autarky_equilibrium(0.3 * c, 0.5 * c, DEFAULTS)
        assert scaled.w == pytest.approx(base.w, rel=1e-12)
        assert scaled.n == pytest.approx(base.n * c**expo, rel=1e-10)


def test_autarky_scaling_is_linear_without_intermediates():
    params = ModelParams(mu=1e-9)
    base = autarky_equilibrium(0.3, 0.5, params)
    scaled = autarky_equilibrium(0.6, 1.0, params)
    assert scaled.n == pytest.approx(2.0 * base.n, rel=1e-7)


def test_autarky_labor_adds_up():
    st = autarky_equilibrium(0.15, 0.04, DEFAULTS)
    assert st.labor_agriculture + st.labor_manufacturing == pytest.approx(0.15, rel=1e-12)
    assert 0.0 < st.labor_agriculture < 0.15


def test_autarky_west_has_positive_industry():
    st = autarky_equilibrium(0.48, 0.12, DEFAULTS)
    assert st.labor_agriculture / st.labor < 1.0
    assert st.n > 0.0


def test_autarky_rejects_nonpositive_endowments():
    with pytest.raises(ValueError):
        autarky_equilibrium(0.0, 1.0, DEFAULTS)
    with pytest.raises(ValueError):
        autarky_equilibrium(1.0, -1.0, DEFAULTS)


def test_autarky_guess_collects_per_region_solutions():
    g = autarky_guess(L1990, LAND, DEFAULTS)
    for i in range(3):
        st = autarky_equilibrium(L1990[i], LAND[i], DEFAULTS)
        assert g.w[i] == pytest.approx(st.w, rel=1e-14)
        assert g.n[i] == pytest.approx(st.n, rel=1e-14)


# ---------------------------------------------------------------------------
# full equilibrium
# ---------------------------------------------------------------------------


def test_equilibrium_no_trade_matches_autarky():
    report = solve_equilibrium(L1990, LAND, FreenessMatrix.identity(), DEFAULTS)
    assert report.converged
    st = report.state
    for i in range(3):
        aut = autarky_equilibrium(L1990[i], LAND[i], DEFAULTS)
        assert abs(st.w[i] / aut.w - 1.0) < 1e-8
        assert abs(st.n[i] / aut.n - 1.0) < 1e-8
        assert abs(st.q[i] / aut.q - 1.0) < 1e-8


def test_equilibrium_symmetric_instance():
    L = np.full(3, 1.0 / 3.0)
    K = np.full(3, 1.0 / 3.0)
    phi = np.full((3, 3), 0.4)
    np.fill_diagonal(phi, 1.0)
    report = solve_equilibrium(L, K, phi, DEFAULTS)
    st = report.state
    assert np.ptp(st.w) <= 1e-8 * st.w[0]
    assert np.ptp(st.n) <= 1e-8 * st.n[0]
    assert np.ptp(st.q) <= 1e-8 * st.q[0]


def test_equilibrium_residual_contract():
    phi = FreenessMatrix.from_links(0.5, 0.01)
    report = solve_equilibrium(L1990, LAND, phi, DEFAULTS)
    r = report.residuals
    assert r.price <= RESIDUAL_LIMITS.price
    assert r.labor_clearing <= RESIDUAL_LIMITS.labor_clearing
    assert r.complementarity <= RESIDUAL_LIMITS.complementarity
    assert r.walras <= RESIDUAL_LIMITS.walras
    assert r.linkage_column_sums <= RESIDUAL_LIMITS.linkage_column_sums


def test_equilibrium_verify_is_independent_of_solver_path():
    phi = FreenessMatrix.from_links(0.3, 0.01)
    report = solve_equilibrium(L1990, LAND, phi, DEFAULTS)
    again = verify_equilibrium(report.state, L1990, LAND, phi, DEFAULTS)
    assert again.price == report.residuals.price
    assert again.walras == report.residuals.walras


def test_equilibrium_deterministic_rerun():
    phi = FreenessMatrix.from_links(0.7, 0.01)
    a = solve_equilibrium(L1990, LAND, phi, DEFAULTS).state
    b = solve_equilibrium(L1990, LAND, phi, DEFAULTS).state
    for field in ("w", "n", "q", "p", "Y", "R", "e", "x"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_equilibrium_permutation_equivariance():
    perm = np.array([2, 0, 1])
    phi = FreenessMatrix.from_links(0.45, 0.01).phi
    base = solve_equilibrium(L1990, LAND, phi, DEFAULTS).state
    permuted = solve_equilibrium(
        L1990[perm], LAND[perm], phi[np.ix_(perm, perm)], DEFAULTS
    ).state
    for field in ("w", "n", "q", "Y"):
        assert np.abs(
            getattr(permuted, field) / getattr(base, field)[perm] - 1.0
        ).max() < 1e-10


def test_equilibrium_warm_start_agrees_and_is_quick():
    phi = FreenessMatrix.from_links(0.6, 0.01)
    cold = solve_equilibrium(L1990, LAND, phi, DEFAULTS)
    warm = solve_equilibrium(
        L1990,
        LAND,
        phi,
        DEFAULTS,
        guess=EquilibriumGuess(w=cold.state.w, n=cold.state.n),
    )
    assert warm.iterations.variety <= 3
    assert np.abs(warm.state.w / cold.state.w - 1.0).max() < 1e-10
    assert np.abs(warm.state.n / cold.state.n - 1.0).max() < 1e-9


def test_equilibrium_budget_exhaustion_carries_report():
    cfg = SolverConfig(max_iter_variety=2)
    with pytest.raises(NoConvergenceError) as exc:
        solve_equilibrium(L1990, LAND, FreenessMatrix.from_links(0.5, 0.01), DEFAULTS, cfg)
    report = exc.value.report
    assert not report.converged
    assert report.iterations.variety == 2
    assert report.state is not None


def test_equilibrium_rejects_nonpositive_endowments():
    with pytest.raises(ValueError):
        solve_equilibrium(np.array([0.5, 0.0, 0.5]), LAND, np.eye(3), DEFAULTS)


def test_equilibrium_near_one_food_share_still_converges():
    # the wage map crawls when the food anchor is tiny; the Newton endgame
    # must still reach tolerance
    params = ModelParams(gamma=0.994)
    report = solve_equilibrium(L1990, LAND, FreenessMatrix.from_links(0.5, 0.01), params)
    assert report.converged
    assert report.residuals.labor_clearing <= 1e-8
