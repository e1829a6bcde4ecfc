"""Trade-liberalization sweep: a chain of equilibria over the W-B link.

The West-Border freeness rises along a grid while the Border-Hinterland
link stays fixed; each grid point is solved warm-started from its
predecessor (continuation), the first point cold-started from the
per-region self-sufficient seed. Where several equilibria exist the chain
follows the branch the seed selects, so the sweep direction matters; a
reverse pass exposes hysteresis if there is any.

A point that fails to converge is flagged and skipped by the chain (the
next point re-uses the last good seed), keeping partial trajectories
inspectable rather than aborting a long run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    EquilibriumReport,
    FreenessMatrix,
    ModelParams,
    RealMetrics,
    Region,
    RegionEndowments,
    RegionalState,
    real_metrics,
    table1_endowments,
)
from .migration import LaborAllocation, MigrationParams, solve_with_migration
from .solver import EquilibriumGuess, SolverConfig, SolverError


def default_grid(points: int = 201) -> np.ndarray:
    """Evenly spaced freeness values on [0, 1]."""
    if points < 2:
        raise ValueError(f"grid needs at least 2 points, got {points}")
    return np.linspace(0.0, 1.0, points)


@dataclass(frozen=True)
class SweepPlan:
    """Grid, fixed links and model configuration of one liberalization run."""

    grid: np.ndarray = field(default_factory=default_grid)
    phi_bh: float = 0.01
    endowments: RegionEndowments = field(default_factory=table1_endowments)
    params: ModelParams = field(default_factory=ModelParams)
    migration: MigrationParams = field(default_factory=MigrationParams)
    cfg: SolverConfig = field(default_factory=SolverConfig)
    reverse: bool = False

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 1 or grid.size < 1:
            raise ValueError("grid must be a one-dimensional sequence")
        if np.any(grid < 0.0) or np.any(grid > 1.0):
            raise ValueError("grid values must lie in [0, 1]")
        if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if not 0.0 <= self.phi_bh <= 1.0:
            raise ValueError(f"phi_bh must lie in [0, 1], got {self.phi_bh}")


class BlocMetrics(NamedTuple):
    """East (Border+Hinterland) versus West comparison at one equilibrium."""

    east_real_gdp_pc: float
    west_real_gdp_pc: float
    east_west_ratio: float
    east_industrial_share: float
    west_industrial_share: float


class SweepRecord(NamedTuple):
    """One grid point of a sweep; state is None when the solve failed."""

    phi_wb: float
    converged: bool
    state: RegionalState | None
    metrics: RealMetrics | None
    bloc: BlocMetrics | None
    allocation: LaborAllocation | None
    hb_ratio: float
    error: str | None


@dataclass(frozen=True)
class SweepTrajectory:
    """Records of one sweep, in solve order."""

    plan: SweepPlan
    records: tuple[SweepRecord, ...]

    @property
    def converged_all(self) -> bool:
        return all(r.converged for r in self.records)

    def column(self, name: str) -> np.ndarray:
        """Per-point scalars as an array; NaN where a point failed."""
        getters = {
            "phi_wb": lambda r: r.phi_wb,
            "ew_ratio": lambda r: r.bloc.east_west_ratio,
            "hb_ratio": lambda r: r.hb_ratio,
            "share_W": lambda r: r.metrics.industrial_share[Region.WEST],
            "share_B": lambda r: r.metrics.industrial_share[Region.BORDER],
            "share_H": lambda r: r.metrics.industrial_share[Region.HINTERLAND],
        }
        get = getters[name]
        out = np.full(len(self.records), np.nan)
        for i, r in enumerate(self.records):
            if name == "phi_wb" or r.converged:
                out[i] = get(r)
        return out


def bloc_aggregates(state: RegionalState, params: ModelParams) -> BlocMetrics:
    """Compare the two Eastern regions as one bloc against the West.

    No common Eastern price level exists in the model, so each region's
    income is deflated by its own consumption price q_i^gamma before the
    bloc total is divided by bloc population.
    """
    Y = np.array(state.Y)
    q = np.array(state.q)
    labor = np.array(state.labor)
    deflated = Y / q**params.gamma
    east = float(
        (deflated[Region.BORDER] + deflated[Region.HINTERLAND])
        / (labor[Region.BORDER] + labor[Region.HINTERLAND])
    )
    west = float(deflated[Region.WEST] / labor[Region.WEST])
    shares = real_metrics(state, params).industrial_share
    return BlocMetrics(
        east_real_gdp_pc=east,
        west_real_gdp_pc=west,
        east_west_ratio=east / west,
        east_industrial_share=float(shares[Region.BORDER] + shares[Region.HINTERLAND]),
        west_industrial_share=float(shares[Region.WEST]),
    )


def run_sweep(plan: SweepPlan) -> SweepTrajectory:
    """Solve the whole grid as a continuation chain.

    Each converged point seeds the next; failed points are recorded with
    the error text and the chain continues from the last good seed.
    """
    order = plan.grid[::-1] if plan.reverse else plan.grid
    guess: EquilibriumGuess | None = None
    records = []
    for phi_wb in order:
        phi = FreenessMatrix.from_links(float(phi_wb), plan.phi_bh)
        try:
            outcome = solve_with_migration(
                plan.endowments, phi, plan.params, plan.migration, plan.cfg, guess
            )
        except SolverError as exc:
            records.append(
                SweepRecord(
                    phi_wb=float(phi_wb),
                    converged=False,
                    state=None,
                    metrics=None,
                    bloc=None,
                    allocation=None,
                    hb_ratio=np.nan,
                    error=str(exc),
                )
            )
            continue
        state = outcome.report.state
        metrics = real_metrics(state, plan.params)
        bloc = bloc_aggregates(state, plan.params)
        hb = float(
            metrics.real_gdp_pc[Region.HINTERLAND] / metrics.real_gdp_pc[Region.BORDER]
        )
        records.append(
            SweepRecord(
                phi_wb=float(phi_wb),
                converged=True,
                state=state,
                metrics=metrics,
                bloc=bloc,
                allocation=outcome.allocation,
                hb_ratio=hb,
                error=None,
            )
        )
        guess = EquilibriumGuess(w=state.w, n=state.n)
    return SweepTrajectory(plan=plan, records=tuple(records))


class TurningPoint(NamedTuple):
    phi: float
    kind: str  # "min" or "max"


def detect_turning_points(phi, values) -> list[TurningPoint]:
    """Interior local extrema of a series sampled on a grid.

    Sign changes of first differences mark extrema; a run of exactly equal
    values between opposite-signed moves counts once, at the run's
    midpoint. Endpoints are never extrema.
    """
    phi = np.asarray(phi, dtype=float)
    values = np.asarray(values, dtype=float)
    if phi.shape != values.shape or phi.ndim != 1:
        raise ValueError("phi and values must be one-dimensional and congruent")
    if phi.size < 3:
        raise ValueError("series too short: need at least 3 points")
    signs = np.sign(np.diff(values))
    moves = [(i, s) for i, s in enumerate(signs) if s != 0.0]
    out = []
    for (ia, sa), (ib, sb) in zip(moves, moves[1:]):
        if sa == sb:
            continue
        # values are equal on the plateau phi[ia+1 .. ib]; ia+1 == ib when
        # there is no plateau
        mid = 0.5 * (phi[ia + 1] + phi[ib])
        out.append(TurningPoint(phi=float(mid), kind="min" if sa < 0.0 else "max"))
    return out
