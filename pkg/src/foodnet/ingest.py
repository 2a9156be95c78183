"""Bilateral trade record ingestion and calorie aggregation.

Parses delimiter-separated trade tables (header row, logical-to-physical
column mapping), converts tonnage to kilocalories per crop, and aggregates
the four staple layers into one supply network per year.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ParseError
from .graph import SupplyNetwork, build_network


class Crop(str, Enum):
    WHEAT = "wheat"
    RICE = "rice"
    MAIZE = "maize"
    SOYBEANS = "soybeans"


# kcal per tonne; standard food-composition values, overridable via config.
DEFAULT_CALORIES: dict[Crop, float] = {
    Crop.WHEAT: 3.34e6,
    Crop.RICE: 3.60e6,
    Crop.MAIZE: 3.65e6,
    Crop.SOYBEANS: 4.16e6,
}

DEFAULT_ITEM_LABELS: dict[Crop, tuple[str, ...]] = {
    Crop.WHEAT: ("Wheat",),
    Crop.RICE: ("Rice", "Rice, milled"),
    Crop.MAIZE: ("Maize", "Maize (corn)"),
    Crop.SOYBEANS: ("Soybeans", "Soya beans"),
}

DEFAULT_UNITS = ("t", "tonnes", "tonne")

# Export-reported rows are the single source of truth; mirror (import-reported)
# rows are dropped to avoid double counting.
DEFAULT_EXPORT_ELEMENTS = ("Export Quantity", "Export quantity")


@dataclass(frozen=True)
class TradeFlow:
    """One bilateral flow: tonnes and their kilocalorie equivalent."""

    exporter: str
    importer: str
    crop: Crop
    year: int
    tonnes: float
    kilocalories: float

    def __post_init__(self):
        object.__setattr__(self, "exporter", self.exporter.upper())
        object.__setattr__(self, "importer", self.importer.upper())
        if self.exporter == self.importer:
            raise ValueError(f"flow {self.exporter}->{self.importer} is a self-trade")


@dataclass(frozen=True)
class CalorieTable:
    """kcal-per-tonne coefficients; all four staples must be present."""

    coefficients: dict[Crop, float]

    def __post_init__(self):
        missing = [c.value for c in Crop if c not in self.coefficients]
        if missing:
            raise ValueError(f"calorie table is missing crops: {', '.join(missing)}")
        for crop, value in self.coefficients.items():
            if not value > 0:
                raise ValueError(f"calorie coefficient for {crop.value} must be > 0")

    def kcal(self, crop: Crop, tonnes: float) -> float:
        return tonnes * self.coefficients[crop]

    @classmethod
    def default(cls) -> "CalorieTable":
        return cls(dict(DEFAULT_CALORIES))


@dataclass(frozen=True)
class ColumnMap:
    """Logical-to-physical column names plus accepted label sets."""

    reporter: str = "reporter"
    partner: str = "partner"
    item: str = "item"
    year: str = "year"
    unit: str = "unit"
    value: str = "value"
    element: str | None = None
    item_labels: dict[Crop, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_ITEM_LABELS)
    )
    units: tuple[str, ...] = DEFAULT_UNITS
    export_elements: tuple[str, ...] = DEFAULT_EXPORT_ELEMENTS

    def required_columns(self) -> tuple[str, ...]:
        cols = [self.reporter, self.partner, self.item, self.year, self.unit, self.value]
        if self.element:
            cols.append(self.element)
        return tuple(cols)

    def crop_for_item(self, label: str) -> Crop | None:
        needle = label.strip().lower()
        for crop, labels in self.item_labels.items():
            if any(needle == l.lower() for l in labels):
                return crop
        return None


@dataclass
class RejectionSummary:
    rows_read: int = 0
    rows_accepted: int = 0
    rejections: dict[str, int] = field(default_factory=dict)

    def reject(self, reason: str) -> None:
        self.rejections[reason] = self.rejections.get(reason, 0) + 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "rows_read": self.rows_read,
                "rows_accepted": self.rows_accepted,
                "rejections": dict(sorted(self.rejections.items())),
            },
            indent=2,
        )


def _open_stream(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def _sniff_delimiter(sample: str) -> str:
    # comma default, tab accepted
    return "\t" if sample.count("\t") > sample.count(",") else ","


def parse_trade_records(
    source,
    schema: ColumnMap | None = None,
    calories: CalorieTable | None = None,
) -> tuple[list[TradeFlow], RejectionSummary]:
    """Parse a trade table into TradeFlow records plus a rejection summary.

    Rows with a non-tonne unit, non-positive value, missing fields, items
    outside the four staples, mirror-reported elements, or self-trades are
    dropped and counted per reason.  An unreadable stream or a missing
    required column raises :class:`ParseError` with diagnostics.
    """
    schema = schema or ColumnMap()
    calories = calories or CalorieTable.default()
    fh, owned = _open_stream(source)
    try:
        head = fh.read(8192)
        if not head.strip():
            name = getattr(fh, "name", "<stream>")
            raise ParseError(f"{name}: input is empty")
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=_sniff_delimiter(head.splitlines()[0]))
        header = reader.fieldnames or []
        missing = [c for c in schema.required_columns() if c not in header]
        if missing:
            raise ParseError(
                f"missing required column(s) {', '.join(missing)}; header has {header}"
            )

        flows: list[TradeFlow] = []
        summary = RejectionSummary()
        for lineno, row in enumerate(reader, start=2):
            summary.rows_read += 1
            reason = _classify_row(row, schema)
            if reason is not None:
                summary.reject(reason)
                continue
            crop = schema.crop_for_item(row[schema.item])
            tonnes = float(row[schema.value])
            flows.append(
                TradeFlow(
                    exporter=row[schema.reporter].strip(),
                    importer=row[schema.partner].strip(),
                    crop=crop,
                    year=int(row[schema.year]),
                    tonnes=tonnes,
                    kilocalories=calories.kcal(crop, tonnes),
                )
            )
            summary.rows_accepted += 1
        return flows, summary
    except csv.Error as exc:
        raise ParseError(f"cannot parse input: {exc}") from exc
    finally:
        if owned:
            fh.close()


def _classify_row(row: dict, schema: ColumnMap) -> str | None:
    """Rejection reason for a row, or None if it should be kept."""
    fields = [row.get(c) for c in schema.required_columns()]
    if any(v is None or not str(v).strip() for v in fields):
        return "missing_field"
    if schema.element:
        if row[schema.element].strip() not in schema.export_elements:
            return "import_mirror"
    if row[schema.unit].strip().lower() not in tuple(u.lower() for u in schema.units):
        return "non_tonne_unit"
    try:
        year = int(row[schema.year].strip())
    except ValueError:
        return "bad_year"
    del year
    try:
        value = float(row[schema.value])
    except ValueError:
        return "bad_value"
    if value <= 0:
        return "non_positive_value"
    if schema.crop_for_item(row[schema.item]) is None:
        return "non_staple_item"
    if row[schema.reporter].strip().upper() == row[schema.partner].strip().upper():
        return "self_trade"
    return None


def aggregate_staples(flows, year: int, isolates=()) -> SupplyNetwork:
    """One network per year: edge weight = kcal summed across all four crops."""
    return build_network(flows, year, isolates=isolates)


def single_staple_network(flows, crop: Crop, year: int, isolates=()) -> SupplyNetwork:
    """As :func:`aggregate_staples`, restricted to one crop."""
    return build_network((f for f in flows if f.crop == crop), year, isolates=isolates)


FLOW_COLUMNS = ("exporter", "importer", "crop", "year", "tonnes", "kilocalories")


def write_flows_csv(flows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FLOW_COLUMNS)
        for f in sorted(flows, key=lambda f: (f.year, f.crop.value, f.exporter, f.importer)):
            writer.writerow(
                [f.exporter, f.importer, f.crop.value, f.year, repr(f.tonnes), repr(f.kilocalories)]
            )


def read_flows_csv(path) -> list[TradeFlow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(FLOW_COLUMNS) <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns {','.join(FLOW_COLUMNS)}")
        return [
            TradeFlow(
                exporter=row["exporter"],
                importer=row["importer"],
                crop=Crop(row["crop"]),
                year=int(row["year"]),
                tonnes=float(row["tonnes"]),
                kilocalories=float(row["kilocalories"]),
            )
            for row in reader
        ]


def flows_to_stream(text: str):
    """Convenience wrapper for parsing in-memory tables (tests, fixtures)."""
    return io.StringIO(text)
