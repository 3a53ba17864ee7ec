"""Preselection and feature-selection algorithms."""

from micmac.selectors.info import discretize, mutual_information
from micmac.selectors.micmac import (
    SelectionTrace,
    SelectorConfig,
    merit,
    merit_score,
    micmac_select,
    preselect_rf,
    read_trace,
    write_trace,
)
from micmac.selectors.mrmr import MDRMR_APPROXIMATE, mdrmr_select, mrmr_select

__all__ = [
    "SelectorConfig",
    "SelectionTrace",
    "preselect_rf",
    "merit",
    "merit_score",
    "micmac_select",
    "read_trace",
    "write_trace",
    "mrmr_select",
    "mdrmr_select",
    "MDRMR_APPROXIMATE",
    "mutual_information",
    "discretize",
]
