"""Home-biased labor migration between Border and West.

Individuals carry an idiosyncratic attachment to home, Pareto-distributed
with shape epsilon, and leave only when the real-wage gap outweighs it.
Integrating the attachment out gives a single retained share per block,
Psi = min{(rw_home/rw_abroad)^epsilon, 1}: nobody leaves the side whose
real wage is higher, and emigration from the other side grows smoothly
with the gap. Hinterland labor never moves.

The coupled problem (labor allocation consistent with the real wages of
the equilibrium it induces) is a damped fixed point on the two retained
shares. Migrants move as workers only; land stays put, so rents always
accrue inside the region that hosts the land.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    N_REGIONS,
    EquilibriumReport,
    IterationCounts,
    ModelParams,
    Region,
    RegionEndowments,
    _readonly,
)
from .solver import (
    EquilibriumGuess,
    SolverConfig,
    SolverError,
    solve_equilibrium,
)

# Retained share of the Border's 1990 population by 2005, the anchor the
# mobility exponent is calibrated against: one percent had emigrated.
RETAINED_BENCHMARK = 0.99


class MigrationLoopError(SolverError):
    """The allocation/equilibrium fixed point did not settle."""


@dataclass(frozen=True)
class MigrationParams:
    """Mobility exponent and the on/off switch for Border-West flows.

    ``epsilon`` is the Pareto shape of the home-attachment distribution;
    larger values mean a more mobile population. The default is the value
    calibrated so that a 2005-sized real-income gap moves one percent of
    the Border's population.
    """

    epsilon: float = 0.00672
    enabled: bool = False

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class LaborAllocation:
    """Post-migration labor stocks and the retained shares behind them."""

    labor: np.ndarray
    psi_w: float
    psi_b: float

    def __post_init__(self):
        object.__setattr__(self, "labor", _readonly(self.labor, (N_REGIONS,)))
        if np.any(self.labor <= 0.0):
            raise ValueError("allocated labor must be positive in every region")
        for name in ("psi_w", "psi_b"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")


class MigrationOutcome(NamedTuple):
    report: EquilibriumReport
    allocation: LaborAllocation


def retention_fraction(real_wage_home: float, real_wage_abroad: float, epsilon: float) -> float:
    """Share of a block's original population that stays home.

    Clamped at 1: nobody emigrates toward a lower real wage, whatever the
    mobility exponent.
    """
    if not (real_wage_home > 0.0 and real_wage_abroad > 0.0):
        raise ValueError("real wages must be positive")
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if real_wage_home >= real_wage_abroad:
        return 1.0
    return (real_wage_home / real_wage_abroad) ** epsilon


def calibrate_epsilon(r: float) -> float:
    """Mobility exponent that makes a relative income of r retain 99%.

    ``r`` is the Border/West per-capita real income ratio at the
    calibration date; inverting Psi = r^epsilon at Psi = 0.99 gives
    epsilon = ln(0.99)/ln(r).
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"ratio must be in (0,1), got {r}")
    return math.log(RETAINED_BENCHMARK) / math.log(r)


def reallocate_labor(psi_b: float, psi_w: float, endowments: RegionEndowments) -> LaborAllocation:
    """Apply retained shares to the 1990 stocks.

    Each block keeps its stayers and hosts the other block's leavers, so
    the West+Border total is conserved; the Hinterland never moves.
    """
    L90 = endowments.labor_1990
    lw = psi_w * L90[Region.WEST] + (1.0 - psi_b) * L90[Region.BORDER]
    lb = psi_b * L90[Region.BORDER] + (1.0 - psi_w) * L90[Region.WEST]
    labor = np.array([lw, lb, L90[Region.HINTERLAND]])
    return LaborAllocation(labor=labor, psi_w=psi_w, psi_b=psi_b)


def solve_with_migration(
    endowments: RegionEndowments,
    phi,
    params: ModelParams | None = None,
    migration: MigrationParams | None = None,
    cfg: SolverConfig | None = None,
    guess: EquilibriumGuess | None = None,
) -> MigrationOutcome:
    """Equilibrium with labor stocks consistent with the real wages they induce.

    With migration disabled this is exactly the fixed-endowment solve at
    the 1990 stocks. Enabled, the two retained shares follow a damped
    update toward the retention implied by the current equilibrium's real
    wages w/q, re-solving the full equilibrium at each step, until the
    shares are reproduced to ``tol_migration``.
    """
    params = params or ModelParams()
    migration = migration or MigrationParams()
    cfg = cfg or SolverConfig()
    if not migration.enabled:
        report = solve_equilibrium(
            endowments.labor_1990, endowments.land, phi, params, cfg, guess
        )
        return MigrationOutcome(
            report,
            LaborAllocation(labor=endowments.labor_1990, psi_w=1.0, psi_b=1.0),
        )

    psi_w = 1.0
    psi_b = 1.0
    price_total = wage_total = variety_total = 0
    resid = np.inf
    for it in range(1, cfg.max_iter_migration + 1):
        alloc = reallocate_labor(psi_b, psi_w, endowments)
        report = solve_equilibrium(alloc.labor, endowments.land, phi, params, cfg, guess)
        counts = report.iterations
        price_total += counts.price
        wage_total += counts.wage
        variety_total += counts.variety
        state = report.state
        guess = EquilibriumGuess(w=state.w, n=state.n)
        rw = np.array(state.w) / np.array(state.q)
        if not np.all(np.isfinite(rw[: Region.HINTERLAND])):
            raise MigrationLoopError(
                "migration loop diverged: West or Border real wage is degenerate"
            )
        target_b = retention_fraction(
            rw[Region.BORDER], rw[Region.WEST], migration.epsilon
        )
        target_w = retention_fraction(
            rw[Region.WEST], rw[Region.BORDER], migration.epsilon
        )
        resid = max(abs(target_b - psi_b), abs(target_w - psi_w))
        if resid <= cfg.tol_migration:
            final = EquilibriumReport(
                state=state,
                residuals=report.residuals,
                converged=report.converged,
                iterations=IterationCounts(
                    price=price_total,
                    wage=wage_total,
                    variety=variety_total,
                    migration=it,
                ),
            )
            return MigrationOutcome(final, alloc)
        psi_b += cfg.damping_migration * (target_b - psi_b)
        psi_w += cfg.damping_migration * (target_w - psi_w)
    raise MigrationLoopError(
        f"migration loop diverged: share residual {resid:.3e} after "
        f"{cfg.max_iter_migration} iterations (tolerance {cfg.tol_migration:.1e})"
    )
