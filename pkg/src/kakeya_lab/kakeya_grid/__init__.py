"""Discretized lines on the 1/N grid, shadings, slices and the reductions built on them."""

from .geometry import (DEFAULT, KINDS, DLine, GridError, GridParams, LineFamily, cone_count,
                       direction_lattice, generate_family, height_count, line_index, lines_through_pair,
                       make_line, separation_violations, validate_family)
from .shading import (Shading, TwoEndsParams, concentrated_shading, dyadic_radii, empty_shading, full_shading,
                      random_shading, shading_stats, single_point_shading, stride_shading, two_ends_check)
from .slices import SliceStructure, slice_extract
from .bush import BUSH_CONSTANT, bush_certificate, maximal_experiment, refined_shading
from .six_slices import (BushBranchError, PigeonholeError, SixSlicesResult, s_value, six_slices_to_sd,
                         slice_slope)

__all__ = [
    "DEFAULT", "KINDS", "DLine", "GridError", "GridParams", "LineFamily", "cone_count", "direction_lattice",
    "generate_family", "height_count", "line_index", "lines_through_pair", "make_line", "separation_violations",
    "validate_family", "Shading", "TwoEndsParams", "concentrated_shading", "dyadic_radii", "empty_shading",
    "full_shading", "random_shading", "shading_stats", "single_point_shading", "stride_shading",
    "two_ends_check", "SliceStructure", "slice_extract", "BUSH_CONSTANT", "bush_certificate",
    "maximal_experiment", "refined_shading", "BushBranchError", "PigeonholeError", "SixSlicesResult",
    "s_value", "six_slices_to_sd", "slice_slope",
]
