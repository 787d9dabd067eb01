"""Slope-dispersion instances, the extremal search oracle and proof pipelines."""

from .instance import InstanceError, SdInstance, empirical_exponent, verify_sd
from .search import MODES, SearchResult, extremal_search
from .pipelines import (
    THREE_HALVES_NOTE,
    Substructure,
    iterate_once,
    pipeline_012inf,
    pipeline_conviviality,
    substructure,
)
from .slope_tree import (
    FieldTooSmallError,
    SlopeTree,
    TripleData,
    Uniformity,
    build_slope_tree,
    classify_uniformity,
    default_R0,
    mu_split,
    small_fibre_mask,
)
from .advanced import pipeline_advanced

__all__ = [
    "InstanceError", "SdInstance", "empirical_exponent", "verify_sd",
    "MODES", "SearchResult", "extremal_search",
    "THREE_HALVES_NOTE", "Substructure", "iterate_once", "pipeline_012inf",
    "pipeline_conviviality", "substructure",
    "FieldTooSmallError", "SlopeTree", "TripleData", "Uniformity", "build_slope_tree",
    "classify_uniformity", "default_R0", "mu_split", "small_fibre_mask",
    "pipeline_advanced",
]
