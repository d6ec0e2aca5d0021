"""Minimalistic blind video quality assessment: preprocessing, frozen
quality analyzers, a linear regressor trained for PLCC, and the evaluation
and dataset-diagnostic tooling around them."""

__version__ = "0.1.0"
