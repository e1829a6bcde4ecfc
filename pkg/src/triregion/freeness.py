"""Trade-freeness measurement from bilateral trade and gross-output data.

The statistic for a pair is sqrt(m_ij m_ji / (m_ii m_jj)): how intensely
two economies ship to each other relative to how intensely they ship to
themselves. Self-shipments are never observed directly; they are derived
as gross output minus total exports, which is where dirty data bites —
exports exceeding recorded output make the internal flow nonpositive and
the statistic undefined for every pair touching that economy.

Blocs are handled by pooling: member-to-member flows across the two sides
add up to the bloc-level bilateral flow, flows within one side fold into
that side's self-shipment. Missing records always surface as explicit
gaps; a flow of zero must be written as zero in the data.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence


class TradeDataError(ValueError):
    """Malformed or inconsistent trade data."""


class Bloc(NamedTuple):
    """A named group of reporters treated as one economy."""

    name: str
    members: tuple[str, ...]


def _as_bloc(side) -> Bloc:
    if isinstance(side, Bloc):
        if not side.members:
            raise TradeDataError(f"bloc {side.name!r} has no members")
        return side
    if isinstance(side, str):
        return Bloc(name=side, members=(side,))
    raise TradeDataError(f"pair side must be a reporter name or Bloc, got {side!r}")


@dataclass(frozen=True)
class TradeFlowTable:
    """Bilateral import flows plus derived self-shipments.

    ``imports`` maps (reporter, partner, period, sector) to the reporter's
    import value from the partner; ``internal`` maps (reporter, period,
    sector) to gross output minus total exports. ``sectored`` records
    whether the input carried a sector dimension (sector is None
    otherwise).
    """

    imports: Mapping[tuple[str, str, str, str | None], float]
    internal: Mapping[tuple[str, str, str | None], float]
    sectored: bool

    @property
    def periods(self) -> tuple[str, ...]:
        seen = {k[1] for k in self.internal}
        return tuple(sorted(seen))

    @property
    def sectors(self) -> tuple[str | None, ...]:
        seen = {k[2] for k in self.internal}
        return tuple(sorted(seen, key=lambda s: (s is not None, s)))

    @staticmethod
    def from_records(flow_rows: Iterable, output_rows: Iterable) -> "TradeFlowTable":
        """Build from parsed records.

        Flow rows: (reporter, partner, period, import_value[, sector]).
        Output rows: (reporter, period, gross_output, total_exports[, sector]).
        Either all rows carry a sector or none do.
        """
        imports: dict = {}
        sector_flags = set()
        for row in flow_rows:
            row = tuple(row)
            if len(row) == 4:
                reporter, partner, period, value = row
                sector = None
            elif len(row) == 5:
                reporter, partner, period, value, sector = row
                sector = None if sector in (None, "") else str(sector)
            else:
                raise TradeDataError(f"flow record needs 4 or 5 fields, got {row!r}")
            sector_flags.add(sector is not None)
            reporter, partner, period = str(reporter), str(partner), str(period)
            if reporter == partner:
                raise TradeDataError(
                    f"self-flow for {reporter!r} in {period!r}: self-shipments are "
                    "derived from gross output, not reported directly"
                )
            value = float(value)
            if value < 0.0:
                raise TradeDataError(
                    f"negative import value {value} for {reporter!r}<-{partner!r} in {period!r}"
                )
            key = (reporter, partner, period, sector)
            if key in imports:
                raise TradeDataError(f"duplicate flow record {key!r}")
            imports[key] = value

        internal: dict = {}
        for row in output_rows:
            row = tuple(row)
            if len(row) == 4:
                reporter, period, gross, exports = row
                sector = None
            elif len(row) == 5:
                reporter, period, gross, exports, sector = row
                sector = None if sector in (None, "") else str(sector)
            else:
                raise TradeDataError(f"output record needs 4 or 5 fields, got {row!r}")
            sector_flags.add(sector is not None)
            reporter, period = str(reporter), str(period)
            gross, exports = float(gross), float(exports)
            if gross < 0.0 or exports < 0.0:
                raise TradeDataError(
                    f"negative output data for {reporter!r} in {period!r}"
                )
            key = (reporter, period, sector)
            if key in internal:
                raise TradeDataError(f"duplicate output record {key!r}")
            internal[key] = gross - exports

        if len(sector_flags) > 1:
            raise TradeDataError(
                "sector column must be present on all records or on none"
            )
        return TradeFlowTable(
            imports=imports,
            internal=internal,
            sectored=bool(sector_flags) and sector_flags.pop(),
        )

    @staticmethod
    def from_csv(flows_path, outputs_path) -> "TradeFlowTable":
        """Read the two UTF-8 CSV inputs (optional ``sector`` column on both)."""
        flow_rows = _read_csv(
            flows_path, ("reporter", "partner", "period", "import_value")
        )
        output_rows = _read_csv(
            outputs_path, ("reporter", "period", "gross_output", "total_exports")
        )
        return TradeFlowTable.from_records(flow_rows, output_rows)


def _read_csv(path, required: tuple[str, ...]) -> list[tuple]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise TradeDataError(f"{path}: missing columns {missing} in {header}")
        has_sector = "sector" in header
        rows = []
        for line_no, rec in enumerate(reader, start=2):
            try:
                row = [rec[c] for c in required]
            except KeyError as exc:
                raise TradeDataError(f"{path}:{line_no}: short row") from exc
            if any(v is None or v == "" for v in row):
                raise TradeDataError(f"{path}:{line_no}: empty field")
            if has_sector:
                row.append(rec["sector"])
            rows.append(tuple(row))
    return rows


def freeness(m_ij: float, m_ji: float, m_ii: float, m_jj: float) -> float:
    """The pairwise trade-freeness statistic.

    Symmetric in the pair, invariant to a common rescaling of all four
    flows, 1 under uniform flows, 0 without trade. Values above 1 are
    possible with noisy data and are returned as-is.
    """
    if m_ii <= 0.0 or m_jj <= 0.0:
        raise TradeDataError(
            f"nonpositive internal flow (m_ii={m_ii}, m_jj={m_jj}): "
            "exports exceed gross output in the underlying data"
        )
    if m_ij < 0.0 or m_ji < 0.0:
        raise TradeDataError("import flows must be nonnegative")
    return math.sqrt((m_ij * m_ji) / (m_ii * m_jj))


class PanelCell(NamedTuple):
    """One (pair, period[, sector]) cell of a freeness panel."""

    pair: str
    period: str
    sector: str | None
    phi: float | None
    status: str


def _bloc_import(table: TradeFlowTable, into: Bloc, from_: Bloc, period, sector):
    """Pooled imports of one side from the other; None marks a gap."""
    total = 0.0
    for a in into.members:
        for b in from_.members:
            value = table.imports.get((a, b, period, sector))
            if value is None:
                return None, f"missing_flow:{a}<-{b}"
            total += value
    return total, None


def _bloc_internal(table: TradeFlowTable, side: Bloc, period, sector):
    """Pooled self-shipment: member internals plus intra-side imports."""
    total = 0.0
    for a in side.members:
        value = table.internal.get((a, period, sector))
        if value is None:
            return None, f"missing_output:{a}"
        total += value
    for a in side.members:
        for b in side.members:
            if a == b:
                continue
            value = table.imports.get((a, b, period, sector))
            if value is None:
                return None, f"missing_flow:{a}<-{b}"
            total += value
    return total, None


def freeness_panel(
    table: TradeFlowTable,
    pairs: Sequence,
    periods: Sequence[str] | None = None,
    sectors: Sequence[str | None] | None = None,
) -> list[PanelCell]:
    """Freeness for every requested pair, period and sector.

    Each pair is (side, side) with a side being a reporter name or a Bloc.
    Cells with incomplete data carry a gap status and no value; a value
    above 1 is kept but flagged ``above_unity``.
    """
    if periods is None:
        periods = table.periods
    if sectors is None:
        sectors = table.sectors
    cells = []
    for raw_a, raw_b in pairs:
        a, b = _as_bloc(raw_a), _as_bloc(raw_b)
        label = f"{a.name}-{b.name}"
        for sector in sectors:
            for period in map(str, periods):
                cells.append(_panel_cell(table, a, b, label, period, sector))
    return cells


def _panel_cell(table, a, b, label, period, sector) -> PanelCell:
    m_ab, gap = _bloc_import(table, a, b, period, sector)
    if gap is None:
        m_ba, gap = _bloc_import(table, b, a, period, sector)
    if gap is None:
        m_aa, gap = _bloc_internal(table, a, period, sector)
    if gap is None:
        m_bb, gap = _bloc_internal(table, b, period, sector)
    if gap is not None:
        return PanelCell(pair=label, period=period, sector=sector, phi=None, status=gap)
    if m_aa <= 0.0 or m_bb <= 0.0:
        return PanelCell(
            pair=label,
            period=period,
            sector=sector,
            phi=None,
            status="nonpositive_internal",
        )
    phi = freeness(m_ab, m_ba, m_aa, m_bb)
    status = "above_unity" if phi > 1.0 else "ok"
    return PanelCell(pair=label, period=period, sector=sector, phi=phi, status=status)


def sectoral_median_freeness(cells: Sequence[PanelCell]) -> list[PanelCell]:
    """Collapse a sectored panel to the median value per pair and period.

    Cells without a value are left out of the median; a (pair, period)
    with no valued cell at all becomes a gap. Even sector counts average
    the two central values.
    """
    groups: dict[tuple[str, str], list[float]] = {}
    order: list[tuple[str, str]] = []
    for cell in cells:
        key = (cell.pair, cell.period)
        if key not in groups:
            groups[key] = []
            order.append(key)
        if cell.phi is not None:
            groups[key].append(cell.phi)
    out = []
    for pair, period in order:
        values = groups[(pair, period)]
        if not values:
            out.append(
                PanelCell(
                    pair=pair,
                    period=period,
                    sector="median",
                    phi=None,
                    status="no_sector_data",
                )
            )
            continue
        phi = float(statistics.median(values))
        status = "above_unity" if phi > 1.0 else "ok"
        out.append(
            PanelCell(pair=pair, period=period, sector="median", phi=phi, status=status)
        )
    return out
