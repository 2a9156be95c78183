"""Food supply network construction, influence ranking, and shock analysis."""

from .errors import (
    DegenerateFeatureError,
    DegenerateNetworkError,
    FoodNetError,
    InsufficientDataError,
    IterationLimitError,
    ParseError,
    SingularDesignError,
)
from .graph import ComponentReport, SupplyNetwork, build_network, density
from .ingest import CalorieTable, ColumnMap, Crop, TradeFlow

__version__ = "0.1.0"

__all__ = [
    "CalorieTable",
    "ColumnMap",
    "ComponentReport",
    "Crop",
    "DegenerateFeatureError",
    "DegenerateNetworkError",
    "FoodNetError",
    "InsufficientDataError",
    "IterationLimitError",
    "ParseError",
    "SingularDesignError",
    "SupplyNetwork",
    "TradeFlow",
    "build_network",
    "density",
    "__version__",
]
