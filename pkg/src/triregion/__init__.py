"""Three-region trade-and-geography simulator.

Solves the general equilibrium of a West/Border/Hinterland economy with
monopolistic competition, input-output linkages and costly trade, sweeps
the West-Border trade-freeness parameter to trace relative development
paths, and measures trade freeness from bilateral trade data.
"""

from .core import (
    N_REGIONS,
    REGION_LABELS,
    EmptyVarietyRegionError,
    EquilibriumReport,
    FreenessMatrix,
    InconsistentPriceIndexError,
    IterationCounts,
    ModelParams,
    RealMetrics,
    Region,
    RegionalState,
    RegionEndowments,
    Residuals,
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
    real_metrics,
    table1_endowments,
    variety_cost,
)

__all__ = [
    "N_REGIONS",
    "REGION_LABELS",
    "EmptyVarietyRegionError",
    "EquilibriumReport",
    "FreenessMatrix",
    "InconsistentPriceIndexError",
    "IterationCounts",
    "ModelParams",
    "RealMetrics",
    "Region",
    "RegionalState",
    "RegionEndowments",
    "Residuals",
    "agricultural_labor",
    "expenditure_system",
    "firm_demand",
    "firm_profit",
    "food_output",
    "land_rent",
    "linkage_column_sums",
    "manufacturing_labor",
    "mill_price",
    "nominal_income",
    "price_index",
    "real_metrics",
    "table1_endowments",
    "variety_cost",
]

__version__ = "0.1.0"
