"""Configuration loading for the command-line pipeline.

Two flat ``key = value`` formats feed ingestion (calorie coefficients,
column mapping), and one sectioned INI file mirrors every module's
tunable defaults.  All parsers fail loudly with file/line context; a
typo in a section or key name is an error, not a silent default.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ParseError
from .ingest import (
    DEFAULT_CALORIES,
    DEFAULT_EXPORT_ELEMENTS,
    DEFAULT_ITEM_LABELS,
    DEFAULT_UNITS,
    CalorieTable,
    ColumnMap,
    Crop,
)

LIST_SEP = "|"


def read_kv_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` comments and blanks ignored."""
    result: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key in result:
            raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
        result[key] = value.strip()
    return result


def parse_calorie_file(path) -> CalorieTable:
    """`crop = kcal_per_tonne` lines; all four staples required."""
    entries = read_kv_file(path)
    coefficients: dict[Crop, float] = {}
    for key, value in entries.items():
        try:
            crop = Crop(key)
        except ValueError:
            raise ParseError(
                f"{path}: unknown crop {key!r}; expected one of "
                f"{[c.value for c in Crop]}"
            ) from None
        try:
            coefficients[crop] = float(value)
        except ValueError:
            raise ParseError(f"{path}: calorie value for {key} is not a number: {value!r}") from None
    try:
        return CalorieTable(coefficients)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


_COLUMN_KEYS = ("reporter", "partner", "item", "year", "unit", "value", "element")


def parse_column_file(path) -> ColumnMap:
    """Logical-to-physical column names plus accepted label lists.

    Label lists (``units``, ``export_elements``, ``<crop>_labels``) use
    ``|`` as separator since item labels may contain commas.
    """
    entries = read_kv_file(path)
    kwargs = {}
    labels = dict(DEFAULT_ITEM_LABELS)
    for key, value in entries.items():
        if key in _COLUMN_KEYS:
            kwargs[key] = value
        elif key == "units":
            kwargs["units"] = _split_list(value)
        elif key == "export_elements":
            kwargs["export_elements"] = _split_list(value)
        elif key.endswith("_labels") and _crop_of(key.removesuffix("_labels")):
            labels[_crop_of(key.removesuffix("_labels"))] = _split_list(value)
        else:
            raise ParseError(
                f"{path}: unknown column-map key {key!r}; expected one of "
                f"{_COLUMN_KEYS + ('units', 'export_elements', '<crop>_labels')}"
            )
    kwargs["item_labels"] = labels
    return ColumnMap(**kwargs)


def _crop_of(name: str) -> Crop | None:
    try:
        return Crop(name)
    except ValueError:
        return None


def _split_list(value: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in value.split(LIST_SEP) if p.strip())
    if not parts:
        raise ParseError(f"empty list value: {value!r}")
    return parts


# ---------------------------------------------------------------------------
# sectioned settings


@dataclass(frozen=True)
class PageRankSettings:
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iter: int = 10000
    weighted: bool = True


@dataclass(frozen=True)
class HitsSettings:
    tolerance: float = 1e-10
    max_iter: int = 10000
    weighted: bool = False


@dataclass(frozen=True)
class CommunitySettings:
    max_sweeps: int = 100
    weighted: bool = True


@dataclass(frozen=True)
class ShockSettings:
    p_step: float = 0.02
    replications: int = 100
    q_steps: int = 10


@dataclass(frozen=True)
class DeterminantsSettings:
    ridge_lambda: float = 1.0
    p_enter: float = 0.05
    p_remove: float = 0.10
    trees: int = 500
    min_leaf: int = 2
    standardize: bool = True


@dataclass(frozen=True)
class Settings:
    calories: CalorieTable = field(default_factory=CalorieTable.default)
    columns: ColumnMap = field(default_factory=ColumnMap)
    pagerank: PageRankSettings = PageRankSettings()
    hits: HitsSettings = HitsSettings()
    community: CommunitySettings = CommunitySettings()
    shock: ShockSettings = ShockSettings()
    determinants: DeterminantsSettings = DeterminantsSettings()

    def to_dict(self) -> dict:
        """JSON-ready snapshot for run manifests."""
        return {
            "calories": {c.value: v for c, v in self.calories.coefficients.items()},
            "columns": {
                "reporter": self.columns.reporter,
                "partner": self.columns.partner,
                "item": self.columns.item,
                "year": self.columns.year,
                "unit": self.columns.unit,
                "value": self.columns.value,
                "element": self.columns.element,
                "units": list(self.columns.units),
                "export_elements": list(self.columns.export_elements),
                "item_labels": {
                    c.value: list(ls) for c, ls in self.columns.item_labels.items()
                },
            },
            "pagerank": asdict(self.pagerank),
            "hits": asdict(self.hits),
            "community": asdict(self.community),
            "shock": asdict(self.shock),
            "determinants": asdict(self.determinants),
        }


_SECTION_FIELDS = {
    "pagerank": PageRankSettings,
    "hits": HitsSettings,
    "community": CommunitySettings,
    "shock": ShockSettings,
    "determinants": DeterminantsSettings,
}


def _coerce(raw: str, kind: type, where: str):
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ParseError(f"{where}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ParseError(f"{where}: expected {kind.__name__}, got {raw!r}") from None


def load_settings(path=None) -> Settings:
    """Read the sectioned config file; omitted sections keep defaults."""
    if path is None:
        return Settings()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(f"{path}: {exc}") from exc

    kwargs = {}
    for section in parser.sections():
        name = section.lower()
        if name == "calories":
            coefficients = {}
            for key, value in parser.items(section):
                crop = _crop_of(key)
                if crop is None:
                    raise ParseError(f"{path}: [calories] unknown crop {key!r}")
                coefficients[crop] = _coerce(value, float, f"{path}: [calories] {key}")
            merged = dict(DEFAULT_CALORIES)
            merged.update(coefficients)
            kwargs["calories"] = CalorieTable(merged)
        elif name == "columns":
            cm_kwargs = {}
            labels = dict(DEFAULT_ITEM_LABELS)
            for key, value in parser.items(section):
                if key in _COLUMN_KEYS:
                    cm_kwargs[key] = value
                elif key == "units":
                    cm_kwargs["units"] = _split_list(value)
                elif key == "export_elements":
                    cm_kwargs["export_elements"] = _split_list(value)
                elif key.endswith("_labels") and _crop_of(key.removesuffix("_labels")):
                    labels[_crop_of(key.removesuffix("_labels"))] = _split_list(value)
                else:
                    raise ParseError(f"{path}: [columns] unknown key {key!r}")
            cm_kwargs["item_labels"] = labels
            kwargs["columns"] = ColumnMap(**cm_kwargs)
        elif name in _SECTION_FIELDS:
            cls = _SECTION_FIELDS[name]
            types = {f: t for f, t in cls.__annotations__.items()}
            section_kwargs = {}
            for key, value in parser.items(section):
                if key not in types:
                    raise ParseError(
                        f"{path}: [{name}] unknown key {key!r}; expected one of "
                        f"{tuple(types)}"
                    )
                kind = {"float": float, "int": int, "bool": bool}[types[key]]
                section_kwargs[key] = _coerce(value, kind, f"{path}: [{name}] {key}")
            kwargs[name] = cls(**section_kwargs)
        else:
            raise ParseError(
                f"{path}: unknown section [{section}]; expected one of "
                f"{('calories', 'columns') + tuple(_SECTION_FIELDS)}"
            )
    return Settings(**kwargs)
