"""Gauge-phase path classification, interference estimators and tau-evolution."""

__version__ = "0.1.0"
