"""Interval-valued composition extraction from scientific documents and its evaluation."""
from .intervals import (Interval, intersection, length, midpoint, midpoint_abs_err,
                        midpoint_rel_err, precision, recall)
from .normalize import CompositionRecord, Unit

__all__ = [
    "Interval", "intersection", "length", "midpoint", "midpoint_abs_err",
    "midpoint_rel_err", "precision", "recall", "CompositionRecord", "Unit",
]
__version__ = "0.1.0"
