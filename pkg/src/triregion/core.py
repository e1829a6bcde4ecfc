"""Domain types and closed-form equations of the three-region economy.

The economy has two sectors. Agriculture is perfectly competitive, uses
labor and a fixed stock of land (decreasing returns to labor), and its
output is the freely traded numeraire: the food price is 1 everywhere.
Manufacturing is monopolistically competitive over a continuum of
varieties; firms combine labor and a CES bundle of intermediate varieties
(Cobb-Douglas, intermediate cost share ``mu``), which creates forward and
backward linkages. Shipping manufactures between regions is costly; all
trade costs are carried as "freeness" values ``phi`` in [0, 1] (1 =
costless trade, 0 = prohibitive), so no infinite iceberg factor is ever
materialized.

Everything in this module is a pure function of its arguments; the types
are immutable value objects. Region vectors are ordered (West, Border,
Hinterland) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

N_REGIONS = 3

REGION_LABELS = ("West", "Border", "Hinterland")


class Region(IntEnum):
    """Fixed region ordering used for every vector and matrix."""

    WEST = 0
    BORDER = 1
    HINTERLAND = 2


class EmptyVarietyRegionError(ValueError):
    """A region has no access to any manufacturing variety, so its price
    index is undefined."""


class InconsistentPriceIndexError(ValueError):
    """The supplied price index is not the CES aggregate of the supplied
    variety masses and prices."""


def _readonly(values, shape) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Structural parameters of the economy.

    sigma: elasticity of substitution between manufacturing varieties (>1).
    gamma: consumers' expenditure share on manufactures, in (0, 1).
    mu: firms' cost share of intermediate inputs, in (0, 1).
    theta: labor elasticity of the agricultural production function, in (0, 1).

    The per-variety fixed and marginal input requirements are normalized to
    ``alpha = 1/sigma`` and ``beta = (sigma - 1)/sigma``, which makes the
    break-even output of any active variety exactly 1 and the mill price
    equal to marginal cost grossed up by the constant markup.
    """

    sigma: float = 7.122
    gamma: float = 0.77
    mu: float = 0.284
    theta: float = 0.234

    def __post_init__(self):
        if not self.sigma > 1.0:
            raise ValueError(f"sigma must exceed 1, got {self.sigma}")
        for name in ("gamma", "mu", "theta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    @property
    def alpha(self) -> float:
        return 1.0 / self.sigma

    @property
    def beta(self) -> float:
        return (self.sigma - 1.0) / self.sigma


@dataclass(frozen=True)
class RegionEndowments:
    """Per-region shares of total population and land, plus the migration
    openness flag.

    Both share vectors must be strictly positive and sum to 1 (within
    1e-12); they are expressed as fractions of the three-region aggregate.
    """

    labor_1990: np.ndarray
    land: np.ndarray
    migration_open: bool = False

    def __post_init__(self):
        object.__setattr__(self, "labor_1990", _readonly(self.labor_1990, (N_REGIONS,)))
        object.__setattr__(self, "land", _readonly(self.land, (N_REGIONS,)))
        object.__setattr__(self, "migration_open", bool(self.migration_open))
        for name in ("labor_1990", "land"):
            shares = getattr(self, name)
            if np.any(shares <= 0.0):
                raise ValueError(f"{name} shares must all be positive, got {shares}")
            if abs(shares.sum() - 1.0) > 1e-12:
                raise ValueError(f"{name} shares must sum to 1, got sum {shares.sum()!r}")


def table1_endowments(migration_open: bool = False) -> RegionEndowments:
    """1990 population and land-area shares of West, Border and Hinterland."""
    return RegionEndowments(
        labor_1990=(0.48, 0.15, 0.37),
        land=(0.12, 0.04, 0.84),
        migration_open=migration_open,
    )


@dataclass(frozen=True)
class FreenessMatrix:
    """Symmetric 3x3 matrix of pairwise trade freeness phi_ij in [0, 1].

    phi_ij = T_ij^(1-sigma) for an iceberg cost T_ij, so phi = 1 means
    costless trade and phi = 0 prohibitive trade. The diagonal is 1.
    """

    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", _readonly(self.phi, (N_REGIONS, N_REGIONS)))
        phi = self.phi
        if not np.all(np.diag(phi) == 1.0):
            raise ValueError(f"freeness diagonal must be 1, got {np.diag(phi)}")
        if not np.array_equal(phi, phi.T):
            raise ValueError("freeness matrix must be symmetric")
        if np.any(phi < 0.0) or np.any(phi > 1.0):
            raise ValueError(f"freeness values must lie in [0, 1], got\n{phi}")

    @classmethod
    def from_links(cls, phi_wb: float, phi_bh: float) -> "FreenessMatrix":
        """Build the matrix from the West-Border and Border-Hinterland links.

        The West-Hinterland freeness is the product phi_wb * phi_bh: goods
        moving between West and Hinterland incur both legs' trade costs.
        """
        phi_wh = phi_wb * phi_bh
        return cls(
            [
                [1.0, phi_wb, phi_wh],
                [phi_wb, 1.0, phi_bh],
                [phi_wh, phi_bh, 1.0],
            ]
        )

    @classmethod
    def identity(cls) -> "FreenessMatrix":
        """Three mutually isolated regions."""
        return cls(np.eye(N_REGIONS))

    def __getitem__(self, idx):
        return self.phi[idx]


@dataclass(frozen=True)
class RegionalState:
    """Per-region quantities describing one (possibly off-equilibrium) state.

    w: wage, n: variety mass, q: CES price index, p: mill price,
    Y: nominal income, R: land rent, e: expenditure on manufactures,
    x: per-firm output, pi: per-firm profit, labor: current labor stock,
    labor_agriculture / labor_manufacturing: the sectoral labor demands.
    """

    w: np.ndarray
    n: np.ndarray
    q: np.ndarray
    p: np.ndarray
    Y: np.ndarray
    R: np.ndarray
    e: np.ndarray
    x: np.ndarray
    pi: np.ndarray
    labor: np.ndarray
    labor_agriculture: np.ndarray
    labor_manufacturing: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, _readonly(getattr(self, name), (N_REGIONS,)))


@dataclass(frozen=True)
class Residuals:
    """Re-evaluated consistency measures of a solved state (all maxima
    across regions where applicable)."""

    price: float
    labor_clearing: float
    complementarity: float
    walras: float
    linkage_column_sums: float


@dataclass(frozen=True)
class IterationCounts:
    price: int = 0
    wage: int = 0
    variety: int = 0
    migration: int = 0


@dataclass(frozen=True)
class EquilibriumReport:
    """A solved equilibrium together with its convergence diagnostics."""

    state: RegionalState
    residuals: Residuals
    converged: bool
    iterations: IterationCounts = field(default_factory=IterationCounts)


@dataclass(frozen=True)
class RealMetrics:
    """Deflated per-region outcomes of a solved state.

    real_wage is w/q. real_gdp_pc deflates nominal income per head by the
    ideal Cobb-Douglas consumer price index q^gamma (food has price 1).
    industrial_share is each region's share of total manufacturing revenue.
    """

    real_wage: np.ndarray
    real_gdp_pc: np.ndarray
    industrial_share: np.ndarray


# ---------------------------------------------------------------------------
# Closed-form operations
# ---------------------------------------------------------------------------


def price_index(n, p, phi: FreenessMatrix | np.ndarray, sigma: float) -> np.ndarray:
    """CES price index q_j = (sum_i n_i phi_ij p_i^(1-sigma))^(1/(1-sigma)).

    Varieties enter each destination at their c.i.f. price; the freeness
    weight phi_ij carries the trade cost. Zero-freeness terms drop out of
    the sum. Raises EmptyVarietyRegionError if some region has no access
    to any variety.
    """
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    phi = phi.phi if isinstance(phi, FreenessMatrix) else np.asarray(phi, dtype=float)
    if np.any(p <= 0.0):
        raise ValueError("mill prices must be positive")
    agg = (n * p ** (1.0 - sigma)) @ phi
    if np.any(agg <= 0.0):
        bad = [REGION_LABELS[j] for j in np.flatnonzero(agg <= 0.0)]
        raise EmptyVarietyRegionError(
            f"no varieties reach {', '.join(bad)}: price index undefined"
        )
    return agg ** (1.0 / (1.0 - sigma))


def mill_price(q, w, mu: float):
    """Mill price p = q^mu w^(1-mu): marginal cost of the labor/intermediate
    Cobb-Douglas bundle, with the markup absorbed by the input normalization."""
    return q**mu * w ** (1.0 - mu)


def land_rent(w, land, theta: float):
    """Aggregate land rent R = (1-theta) K (theta/w)^(theta/(1-theta)).

    Rent is what remains of agricultural revenue after paying labor its
    marginal product; it falls as the local wage rises.
    """
    return (1.0 - theta) * land * (theta / np.asarray(w, dtype=float)) ** (
        theta / (1.0 - theta)
    )


def agricultural_labor(w, land, theta: float):
    """Agricultural labor demand L_F = K (theta/w)^(1/(1-theta))."""
    return land * (theta / np.asarray(w, dtype=float)) ** (1.0 / (1.0 - theta))


def food_output(labor_agriculture, land, theta: float):
    """Agricultural production F = L_F^theta K^(1-theta)."""
    la = np.asarray(labor_agriculture, dtype=float)
    return la**theta * np.asarray(land, dtype=float) ** (1.0 - theta)


def nominal_income(w, labor, rent):
    """Nominal income Y = w L + R: wages accrue to the resident labor stock,
    rents to the region's landowners."""
    return np.asarray(w, dtype=float) * labor + rent


def expenditure_system(
    Y,
    n,
    p,
    q,
    phi: FreenessMatrix | np.ndarray,
    params: ModelParams,
    consistency_tol: float = 1e-8,
) -> np.ndarray:
    """Solve for regional expenditure on manufactures.

    e_j = gamma Y_j + mu n_j p_j x_j couples expenditures across regions
    because per-firm sales x depend on every e_k. Substituting the demand
    equation turns this into the linear system (I - mu M) e = gamma Y with
    M_jk = n_j p_j^(1-sigma) phi_jk q_k^(sigma-1). Whenever q is the price
    index of (n, p, phi), every column of M sums to exactly 1 (total sales
    equal total spending), so the system matrix is invertible for mu < 1
    and the solution is positive. A column-sum deviation beyond
    ``consistency_tol`` raises InconsistentPriceIndexError.
    """
    Y = np.asarray(Y, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    phi = phi.phi if isinstance(phi, FreenessMatrix) else np.asarray(phi, dtype=float)
    sigma, gamma, mu = params.sigma, params.gamma, params.mu
    linkage = (n * p ** (1.0 - sigma))[:, None] * phi * (q ** (sigma - 1.0))[None, :]
    col_dev = np.abs(linkage.sum(axis=0) - 1.0).max()
    if col_dev > consistency_tol:
        raise InconsistentPriceIndexError(
            f"linkage column sums deviate from 1 by {col_dev:.3e} "
            f"(tolerance {consistency_tol:.1e}): price index inconsistent with (n, p, phi)"
        )
    return np.linalg.solve(np.eye(len(n)) - mu * linkage, gamma * Y)


def linkage_column_sums(n, p, q, phi: FreenessMatrix | np.ndarray, sigma: float) -> np.ndarray:
    """Column sums of the expenditure linkage matrix; all 1 when q is
    consistent with (n, p, phi)."""
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    phi = phi.phi if isinstance(phi, FreenessMatrix) else np.asarray(phi, dtype=float)
    linkage = (n * p ** (1.0 - sigma))[:, None] * phi * (q ** (sigma - 1.0))[None, :]
    return linkage.sum(axis=0)


def firm_demand(p, e, q, phi: FreenessMatrix | np.ndarray, sigma: float) -> np.ndarray:
    """Per-firm demand x_i = p_i^(-sigma) sum_j e_j q_j^(sigma-1) phi_ij.

    Defined for every region, including ones with no active firms, where it
    is the demand a marginal entrant at the local mill price would face.
    """
    p = np.asarray(p, dtype=float)
    e = np.asarray(e, dtype=float)
    q = np.asarray(q, dtype=float)
    phi = phi.phi if isinstance(phi, FreenessMatrix) else np.asarray(phi, dtype=float)
    return p ** (-sigma) * (phi @ (e * q ** (sigma - 1.0)))


def firm_profit(p, x, sigma: float):
    """Per-firm profit pi = (p/sigma)(x - 1); break-even output is x = 1."""
    return (np.asarray(p, dtype=float) / sigma) * (np.asarray(x, dtype=float) - 1.0)


def variety_cost(p, x, sigma: float):
    """Total input cost of one variety, C(x) = p (1 + (sigma-1) x) / sigma."""
    return np.asarray(p, dtype=float) * (1.0 + (sigma - 1.0) * np.asarray(x, dtype=float)) / sigma


def manufacturing_labor(n, p, x, w, mu: float, sigma: float):
    """Manufacturing labor demand L_M = (1-mu) n C(x) / w.

    Labor receives the (1-mu) Cobb-Douglas share of each variety's total
    cost; the rest is spent on intermediates.
    """
    n = np.asarray(n, dtype=float)
    w = np.asarray(w, dtype=float)
    demand = (1.0 - mu) * n * variety_cost(p, x, sigma) / w
    return np.where(n > 0.0, demand, 0.0)


def real_metrics(state: RegionalState, params: ModelParams) -> RealMetrics:
    """Real wage, real GDP per capita and industrial shares of a state."""
    with np.errstate(divide="ignore"):
        real_wage = np.where(np.isfinite(state.q), state.w / state.q, 0.0)
        deflator = state.labor * state.q**params.gamma
        real_gdp_pc = np.where(np.isfinite(deflator), state.Y / deflator, 0.0)
    revenue = np.where(state.n > 0.0, state.n * state.p * state.x, 0.0)
    total = revenue.sum()
    share = revenue / total if total > 0.0 else np.zeros(N_REGIONS)
    return RealMetrics(real_wage=real_wage, real_gdp_pc=real_gdp_pc, industrial_share=share)
