"""Type expressions, environments, and the bidirectional checker."""

from .core import (
    BOOL,
    BOTTOM,
    DOUBLE,
    EMPTY_CAPS,
    INT,
    STRING,
    TOP_CAPS,
    UNIT,
    CaptureSet,
    TypeExpr,
    conforms,
)

__all__ = [
    "TypeExpr", "CaptureSet", "conforms",
    "INT", "DOUBLE", "BOOL", "STRING", "UNIT", "BOTTOM",
    "EMPTY_CAPS", "TOP_CAPS",
]
