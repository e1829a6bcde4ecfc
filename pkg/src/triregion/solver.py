"""Nested fixed-point solver for the three-region equilibrium.

The equilibrium is computed by three nested loops, innermost first:

1. Price consistency. For fixed wages and variety masses, the mill-price
   and price-index equations feed each other through the intermediate-input
   share; direct iteration is a contraction with rate ``mu``.
2. Labor-market clearing. Wages move against excess labor demand by a
   damped multiplicative tatonnement; the step size adapts downward when
   the residual grows, which keeps strongly coupled configurations stable.
3. Free entry. Variety masses grow where per-firm demand exceeds the
   break-even level x = 1 and shrink where it falls short. A region whose
   mass collapses leaves the industry entirely, and an empty region
   re-enters when a test entrant of small mass would profit; both
   directions are required, since industry can vanish from a region on one
   side of a liberalization path and return further along it.

Convergence is always declared on re-evaluated residuals, never on step
sizes, so heavy damping cannot fake a fixed point. Regions that no variety
can reach (no trade link to any producer) are priced at an infinite index
and clear their labor market through agriculture alone; an infinite
per-firm demand there marks entry as unboundedly profitable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    N_REGIONS,
    EquilibriumReport,
    FreenessMatrix,
    IterationCounts,
    ModelParams,
    RegionalState,
    Residuals,
    _readonly,
    agricultural_labor,
    expenditure_system,
    firm_demand,
    firm_profit,
    food_output,
    land_rent,
    linkage_column_sums,
    manufacturing_labor,
    mill_price,
    nominal_income,
    price_index,
)

# Residual bounds a converged equilibrium must satisfy when re-evaluated
# from scratch by the closed-form operations.
RESIDUAL_LIMITS = Residuals(
    price=1e-10,
    labor_clearing=1e-8,
    complementarity=1e-8,
    walras=1e-6,
    linkage_column_sums=1e-10,
)


class SolverError(RuntimeError):
    """Base class for solver failures."""


class PriceIterationError(SolverError):
    """Price iteration diverged (iteration budget exhausted)."""


class WageIterationError(SolverError):
    """Wage iteration diverged (iteration budget exhausted)."""


class NoConvergenceError(SolverError):
    """No convergence of the free-entry loop; carries the last report."""

    def __init__(self, message: str, report: EquilibriumReport):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, damping factors and iteration budgets of the three loops.

    Tolerances are relative where the quantity has a natural scale (prices,
    labor) and absolute on per-firm output (whose equilibrium level is 1).
    ``entrant_mass`` is the variety mass of a test entrant used to probe
    whether an empty region should re-enter.
    """

    tol_price: float = 1e-12
    tol_wage: float = 1e-10
    tol_profit: float = 1e-10
    tol_migration: float = 1e-8
    damping_wage: float = 0.5
    damping_variety: float = 0.25
    damping_migration: float = 0.5
    entrant_mass: float = 1e-8
    max_iter_price: int = 200
    max_iter_wage: int = 2000
    max_iter_variety: int = 5000
    max_iter_migration: int = 200

    def __post_init__(self):
        for name in ("tol_price", "tol_wage", "tol_profit", "tol_migration", "entrant_mass"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("damping_wage", "damping_variety", "damping_migration"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        for name in (
            "max_iter_price",
            "max_iter_wage",
            "max_iter_variety",
            "max_iter_migration",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(frozen=True)
class EquilibriumGuess:
    """Warm-start seed: wages and variety masses per region."""

    w: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _readonly(self.w, (N_REGIONS,)))
        object.__setattr__(self, "n", _readonly(self.n, (N_REGIONS,)))
        if np.any(self.w <= 0.0):
            raise ValueError("guess wages must be positive")
        if np.any(self.n < 0.0):
            raise ValueError("guess variety masses must be nonnegative")


def _phi_array(phi) -> np.ndarray:
    return phi.phi if isinstance(phi, FreenessMatrix) else np.asarray(phi, dtype=float)


def _agrarian_wage(labor, land, theta: float):
    """Wage clearing a labor market with no industry: L = K (theta/w)^(1/(1-theta))."""
    return theta * (np.asarray(land, dtype=float) / labor) ** (1.0 - theta)


def _reachable(n: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """True for regions that at least one produced variety can reach."""
    return ((n[:, None] * phi) > 0.0).any(axis=0)


class _Evaluation(NamedTuple):
    p: np.ndarray
    q: np.ndarray
    R: np.ndarray
    Y: np.ndarray
    e: np.ndarray
    x: np.ndarray
    pi: np.ndarray
    L_F: np.ndarray
    L_M: np.ndarray
    price_iters: int


def _price_iteration(n, w, phi, params: ModelParams, cfg: SolverConfig, q0=None):
    """Inner loop: alternate the mill-price and price-index maps until the
    index is a fixed point. All regions passed in must be reachable."""
    sigma, mu = params.sigma, params.mu
    if q0 is not None:
        q0 = np.array(q0, dtype=float)
        if not np.all(np.isfinite(q0) & (q0 > 0.0)):
            q0 = None  # stale warm start from a different reachability pattern
    q = np.array(w, dtype=float) if q0 is None else q0
    resid = np.inf
    for it in range(cfg.max_iter_price):
        p = q**mu * w ** (1.0 - mu)
        agg = (n * p ** (1.0 - sigma)) @ phi
        q_next = agg ** (1.0 / (1.0 - sigma))
        resid = np.abs(q_next / q - 1.0).max()
        q = q_next
        if resid <= cfg.tol_price:
            # re-derive p from the final q so both equations hold exactly
            return q**mu * w ** (1.0 - mu), q, it + 1
    raise PriceIterationError(
        f"price iteration diverged: residual {resid:.3e} after "
        f"{cfg.max_iter_price} iterations (tolerance {cfg.tol_price:.1e})"
    )


def _evaluate(n, w, labor, land, phi, params: ModelParams, cfg: SolverConfig, q0=None):
    """Everything implied by (n, w): prices, incomes, expenditures, per-firm
    demand and the two sectoral labor demands."""
    sigma, gamma, mu, theta = params.sigma, params.gamma, params.mu, params.theta
    R = land_rent(w, land, theta)
    Y = nominal_income(w, labor, R)
    L_F = agricultural_labor(w, land, theta)
    reach = _reachable(n, phi)

    if reach.all():
        p, q, iters = _price_iteration(n, w, phi, params, cfg, q0)
        e = expenditure_system(Y, n, p, q, phi, params)
        x = firm_demand(p, e, q, phi, sigma)
        pi = firm_profit(p, x, sigma)
        L_M = manufacturing_labor(n, p, x, w, mu, sigma)
        return _Evaluation(p, q, R, Y, e, x, pi, L_F, L_M, iters)

    # Some regions are cut off from every produced variety. They consume no
    # manufactures (index infinite), clear labor through agriculture, and
    # their would-be manufacturing budget makes any entrant they can trade
    # with unboundedly profitable.
    idx = np.flatnonzero(reach)
    cut = ~reach
    p = np.full(N_REGIONS, np.inf)
    q = np.full(N_REGIONS, np.inf)
    e = gamma * Y
    x = np.full(N_REGIONS, np.inf)
    L_M = np.zeros(N_REGIONS)
    iters = 0
    if idx.size:
        sub = phi[np.ix_(idx, idx)]
        q0_sub = None if q0 is None else np.asarray(q0, dtype=float)[idx]
        p_r, q_r, iters = _price_iteration(n[idx], w[idx], sub, params, cfg, q0_sub)
        p[idx], q[idx] = p_r, q_r
        linkage = (n[idx] * p_r ** (1.0 - sigma))[:, None] * sub * (q_r ** (sigma - 1.0))[None, :]
        e[idx] = np.linalg.solve(np.eye(idx.size) - mu * linkage, gamma * Y[idx])
        x[idx] = p_r ** (-sigma) * (sub @ (e[idx] * q_r ** (sigma - 1.0)))
        # entrants adjacent to a cut-off region would face its unspent budget
        adjacent = (phi[:, cut] > 0.0).any(axis=1)
        x[adjacent & (n == 0.0)] = np.inf
        x_safe = np.where(n[idx] > 0.0, x[idx], 0.0)
        L_M[idx] = manufacturing_labor(n[idx], p_r, x_safe, w[idx], mu, sigma)
    pi = np.full(N_REGIONS, np.inf)
    finite = np.isfinite(x) & np.isfinite(p)
    pi[finite] = firm_profit(p[finite], x[finite], sigma)
    return _Evaluation(p, q, R, Y, e, x, pi, L_F, L_M, iters)


# ---------------------------------------------------------------------------
# public solves
# ---------------------------------------------------------------------------


def solve_prices(n, w, phi, params: ModelParams, cfg: SolverConfig | None = None):
    """Solve p_i = q_i^mu w_i^(1-mu) jointly with the price index, for fixed
    variety masses and wages.

    Returns (p, q). Regions no variety can reach get p = q = inf (they are
    agricultural enclaves with no manufactures on offer).
    """
    cfg = cfg or SolverConfig()
    n = np.asarray(n, dtype=float)
    w = np.asarray(w, dtype=float)
    phi = _phi_array(phi)
    if np.any(w <= 0.0):
        raise ValueError("wages must be positive")
    if np.any(n < 0.0):
        raise ValueError("variety masses must be nonnegative")
    reach = _reachable(n, phi)
    if reach.all():
        p, q, _ = _price_iteration(n, w, phi, params, cfg)
        return p, q
    p = np.full(N_REGIONS, np.inf)
    q = np.full(N_REGIONS, np.inf)
    idx = np.flatnonzero(reach)
    if idx.size:
        p_r, q_r, _ = _price_iteration(n[idx], w[idx], phi[np.ix_(idx, idx)], params, cfg)
        p[idx], q[idx] = p_r, q_r
    return p, q


class _WageEvaluator:
    """Labor-market residual at fixed variety masses, with price warm starts."""

    def __init__(self, n, labor, land, phi, params, cfg):
        self.n = n
        self.labor = labor
        self.land = land
        self.phi = phi
        self.params = params
        self.cfg = cfg
        self.price_total = 0
        self.q_warm = None

    def __call__(self, w):
        ev = _evaluate(
            self.n, w, self.labor, self.land, self.phi, self.params, self.cfg, self.q_warm
        )
        self.price_total += ev.price_iters
        self.q_warm = ev.q
        return ev


def _solve_wages_counted(n, labor, land, phi, params, cfg, w0=None):
    """Middle loop returning (state, wage iterations, price iterations).

    Damped multiplicative tatonnement globally, switching to a damped Newton
    step on log wages (finite-difference Jacobian, line search) once the
    residual is small.  Tatonnement alone crawls when gamma is close to one:
    the food anchor pinning the overall wage level is then a sliver of
    demand and the iteration map has a near-unit eigenvalue.
    """
    resid = np.inf
    w = _agrarian_wage(labor, land, params.theta) if w0 is None else np.array(w0, dtype=float)
    scale = 1.0
    best = np.inf
    evaluator = _WageEvaluator(n, labor, land, phi, params, cfg)
    newton_failures = 0
    for it in range(cfg.max_iter_wage):
        ev = evaluator(w)
        demand = ev.L_F + ev.L_M
        resid = np.abs(demand / labor - 1.0).max()
        if resid <= cfg.tol_wage:
            state = RegionalState(
                w=w,
                n=n,
                q=ev.q,
                p=ev.p,
                Y=ev.Y,
                R=ev.R,
                e=ev.e,
                x=ev.x,
                pi=ev.pi,
                labor=labor,
                labor_agriculture=ev.L_F,
                labor_manufacturing=ev.L_M,
            )
            return state, it + 1, evaluator.price_total
        if np.all(w >= 1e6) and np.all(demand > labor):
            # manufacturing labor demand is invariant to the wage level once
            # agriculture and land rents have vanished, so excess demand at
            # enormous wages means no wage vector can clear these masses
            raise WageIterationError(
                "no clearing wage: labor demand exceeds supply at every wage "
                f"level (relative excess {resid:.3e}); variety masses too "
                "large for the endowment"
            )
        if resid < 1e-3 and newton_failures < 3:
            w_next = _newton_wage_step(evaluator, w, demand, labor, resid)
            if w_next is not None:
                w = w_next
                best = np.inf
                continue
            newton_failures += 1
        # shrink the step whenever the residual grows: the demand elasticity
        # steepens with openness and a fixed step can overshoot
        if resid > best:
            scale = max(0.5 * scale, 1.0 / 256.0)
        else:
            best = resid
            scale = min(1.0, 1.25 * scale)
        ratio = np.clip(demand / labor, 0.01, 100.0)
        w = np.clip(w * ratio ** (cfg.damping_wage * scale), 1e-8, 1e8)
    raise WageIterationError(
        f"wage iteration diverged: residual {resid:.3e} after "
        f"{cfg.max_iter_wage} iterations (tolerance {cfg.tol_wage:.1e})"
    )


def _newton_wage_step(evaluator, w, demand, labor, resid):
    """One damped Newton step on log wages, or None if no step helps.

    The residual map r(log w) = log(demand/labor) is smooth near a clearing
    point; a forward-difference Jacobian costs N_REGIONS evaluations.
    """
    r0 = np.log(demand / labor)
    h = 1e-6
    jac = np.empty((N_REGIONS, N_REGIONS))
    for i in range(N_REGIONS):
        w_pert = w.copy()
        w_pert[i] *= math.exp(h)
        ev = evaluator(w_pert)
        di = ev.L_F + ev.L_M
        if not np.all(np.isfinite(di)) or np.any(di <= 0.0):
            return None
        jac[:, i] = (np.log(di / labor) - r0) / h
    try:
        full_step = np.linalg.solve(jac, -r0)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(full_step)):
        return None
    lam = 1.0
    while lam >= 1.0 / 32.0:
        w_try = np.clip(w * np.exp(lam * full_step), 1e-8, 1e8)
        ev = evaluator(w_try)
        di = ev.L_F + ev.L_M
        if np.all(np.isfinite(di)) and np.abs(di / labor - 1.0).max() < resid:
            return w_try
        lam *= 0.5
    return None


def solve_wages(
    n,
    labor,
    land,
    phi,
    params: ModelParams,
    cfg: SolverConfig | None = None,
    w0=None,
) -> RegionalState:
    """Clear every region's labor market at fixed variety masses.

    Wages follow a damped multiplicative tatonnement against excess labor
    demand; all prices, incomes and expenditures are re-solved at every
    step. The returned state is evaluated exactly at the returned wages.
    """
    cfg = cfg or SolverConfig()
    n = np.asarray(n, dtype=float)
    labor = np.asarray(labor, dtype=float)
    land = np.asarray(land, dtype=float)
    phi = _phi_array(phi)
    if np.any(labor <= 0.0) or np.any(land <= 0.0):
        raise ValueError("labor and land must be positive in every region")
    if np.any(n < 0.0):
        raise ValueError("variety masses must be nonnegative")
    state, _, _ = _solve_wages_counted(n, labor, land, phi, params, cfg, w0)
    return state


def _entrant_demand(i, n, w, labor, land, phi, params, cfg, q_warm):
    """Per-firm demand a test entrant of mass entrant_mass would face in
    region i, holding wages fixed."""
    n_test = np.array(n, dtype=float)
    n_test[i] = cfg.entrant_mass
    ev = _evaluate(n_test, w, labor, land, phi, params, cfg, q_warm)
    return float(ev.x[i])


def solve_equilibrium(
    labor,
    land,
    phi,
    params: ModelParams | None = None,
    cfg: SolverConfig | None = None,
    guess: EquilibriumGuess | None = None,
) -> EquilibriumReport:
    """Full equilibrium for fixed labor stocks and trade freeness.

    Outer loop over variety masses: n_i grows with per-firm demand above
    the break-even level and shrinks below it; a region collapsing below
    ``entrant_mass`` while unprofitable exits entirely, and an empty region
    re-enters at ``entrant_mass`` when a test entrant would profit. The
    loop stops when every active region breaks even and no empty region
    invites entry, then the state is re-verified from scratch.

    Without a guess, the seed is each region's self-sufficient equilibrium.
    Raises NoConvergenceError (carrying the flagged report) if the budget
    runs out; the equilibrium reached depends on the seed where multiple
    equilibria exist, and no global search is attempted.
    """
    params = params or ModelParams()
    cfg = cfg or SolverConfig()
    labor = np.asarray(labor, dtype=float)
    land = np.asarray(land, dtype=float)
    phi = _phi_array(phi)
    if np.any(labor <= 0.0) or np.any(land <= 0.0):
        raise ValueError("labor and land must be positive in every region")
    if guess is None:
        guess = autarky_guess(labor, land, params)
    w = np.array(guess.w, dtype=float)
    n = np.array(guess.n, dtype=float)

    wage_total = price_total = 0
    converged = False
    state = None
    outer = 0
    for outer in range(1, cfg.max_iter_variety + 1):
        state, wi, pr = _solve_wages_counted(n, labor, land, phi, params, cfg, w0=w)
        wage_total += wi
        price_total += pr
        w = np.array(state.w)
        x_eval = np.array(state.x)
        active = n > 0.0
        for i in np.flatnonzero(~active):
            x_eval[i] = _entrant_demand(i, n, w, labor, land, phi, params, cfg, state.q)
        resid = 0.0
        if active.any():
            resid = np.abs(x_eval[active] - 1.0).max()
        if (~active).any():
            resid = max(resid, float(np.clip(x_eval[~active] - 1.0, 0.0, None).max()))
        if resid <= cfg.tol_profit:
            converged = True
            break
        ratio = np.clip(x_eval, 1e-4, 1e4)
        n_next = np.where(active, n * ratio**cfg.damping_variety, n)
        n_next[active & (n_next < cfg.entrant_mass) & (x_eval < 1.0)] = 0.0
        n_next[~active & (x_eval > 1.0 + cfg.tol_profit)] = cfg.entrant_mass
        n = n_next

    residuals = verify_equilibrium(state, labor, land, phi, params, cfg)
    converged = converged and _within_limits(residuals)
    report = EquilibriumReport(
        state=state,
        residuals=residuals,
        converged=converged,
        iterations=IterationCounts(
            price=price_total, wage=wage_total, variety=outer, migration=0
        ),
    )
    if not converged:
        raise NoConvergenceError(
            "no convergence: free-entry residual "
            f"{resid:.3e} after {outer} variety iterations "
            f"(wage {wage_total}, price {price_total}); residuals {residuals}",
            report,
        )
    return report


def _within_limits(r: Residuals) -> bool:
    lim = RESIDUAL_LIMITS
    return (
        r.price <= lim.price
        and r.labor_clearing <= lim.labor_clearing
        and r.complementarity <= lim.complementarity
        and r.walras <= lim.walras
        and r.linkage_column_sums <= lim.linkage_column_sums
    )


def verify_equilibrium(
    state: RegionalState,
    labor,
    land,
    phi,
    params: ModelParams,
    cfg: SolverConfig | None = None,
) -> Residuals:
    """Re-evaluate a state from scratch with the closed-form operations and
    report its residuals.

    price: relative error of the price-index and mill-price equations.
    labor_clearing: relative excess labor demand.
    complementarity: |x - 1| where active; posted profit of a test entrant
    where empty. walras: absolute gap between economy-wide food demand and
    food output, which vanishes only when budgets, labor markets and the
    zero-profit condition all hold. linkage_column_sums: deviation of the
    expenditure-system columns from 1.
    """
    cfg = cfg or SolverConfig()
    labor = np.asarray(labor, dtype=float)
    land = np.asarray(land, dtype=float)
    phi = _phi_array(phi)
    n = np.array(state.n)
    w = np.array(state.w)
    reach = _reachable(n, phi)
    idx = np.flatnonzero(reach)

    price_resid = 0.0
    colsum_resid = 0.0
    if idx.size:
        sub = phi[np.ix_(idx, idx)]
        q_back = price_index(n[idx], np.array(state.p)[idx], sub, params.sigma)
        p_back = mill_price(np.array(state.q)[idx], w[idx], params.mu)
        price_resid = float(
            max(
                np.abs(q_back / np.array(state.q)[idx] - 1.0).max(),
                np.abs(p_back / np.array(state.p)[idx] - 1.0).max(),
            )
        )
        sums = linkage_column_sums(
            n[idx], np.array(state.p)[idx], np.array(state.q)[idx], sub, params.sigma
        )
        colsum_resid = float(np.abs(sums - 1.0).max())

    L_F = agricultural_labor(w, land, params.theta)
    demand = L_F + np.array(state.labor_manufacturing)
    labor_resid = float(np.abs(demand / labor - 1.0).max())

    comp = 0.0
    active = n > 0.0
    if active.any():
        comp = float(np.abs(np.array(state.x)[active] - 1.0).max())
    for i in np.flatnonzero(~active):
        x_ent = _entrant_demand(i, n, w, labor, land, phi, params, cfg, state.q)
        comp = max(comp, max(0.0, x_ent - 1.0))

    food = food_output(L_F, land, params.theta)
    walras = float(abs(((1.0 - params.gamma) * np.array(state.Y)).sum() - food.sum()))

    return Residuals(
        price=price_resid,
        labor_clearing=labor_resid,
        complementarity=comp,
        walras=walras,
        linkage_column_sums=colsum_resid,
    )


# ---------------------------------------------------------------------------
# self-sufficient single-region equilibrium
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AutarkyState:
    """Exact equilibrium of one region trading with nobody."""

    w: float
    n: float
    q: float
    p: float
    Y: float
    R: float
    e: float
    x: float
    pi: float
    labor: float
    labor_agriculture: float
    labor_manufacturing: float


def autarky_equilibrium(labor: float, land: float, params: ModelParams) -> AutarkyState:
    """Solve a single region in isolation.

    At the zero-profit point every local variety sells x = 1, which makes
    manufacturing labor demand exactly gamma Y / w, so the wage solves the
    scalar equation gamma (w L + R(w)) / w + L_F(w) = L. The left side is
    strictly decreasing and exceeds L at the no-industry wage, so bisection
    from that bracket is safe; afterwards every other quantity follows in
    closed form.
    """
    if not (labor > 0.0 and land > 0.0):
        raise ValueError("labor and land must be positive")
    sigma, gamma, mu, theta = params.sigma, params.gamma, params.mu, params.theta

    def excess(w: float) -> float:
        rent = land_rent(w, land, theta)
        return gamma * (w * labor + rent) / w + agricultural_labor(w, land, theta) - labor

    lo = float(_agrarian_wage(labor, land, theta))
    hi = lo
    for _ in range(200):
        hi *= 2.0
        if excess(hi) < 0.0:
            break
    else:
        raise SolverError("no bracket for the autarky wage")
    while (hi - lo) / lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)

    rent = float(land_rent(w, land, theta))
    Y = w * labor + rent
    np_value = gamma * Y / (1.0 - mu)  # total manufacturing revenue n*p at x=1
    a = (1.0 - sigma) * (1.0 - mu)
    n = (np_value / w) ** (a / (a + mu))
    p = np_value / n
    q = n ** (1.0 / a) * w
    L_M = gamma * Y / w
    return AutarkyState(
        w=w,
        n=float(n),
        q=float(q),
        p=float(p),
        Y=Y,
        R=rent,
        e=np_value,
        x=1.0,
        pi=0.0,
        labor=labor,
        labor_agriculture=float(agricultural_labor(w, land, theta)),
        labor_manufacturing=L_M,
    )


def autarky_guess(labor, land, params: ModelParams) -> EquilibriumGuess:
    """Cold-start seed: each region's self-sufficient wages and masses."""
    labor = np.asarray(labor, dtype=float)
    land = np.asarray(land, dtype=float)
    states = [autarky_equilibrium(labor[i], land[i], params) for i in range(N_REGIONS)]
    return EquilibriumGuess(
        w=np.array([s.w for s in states]),
        n=np.array([s.n for s in states]),
    )
