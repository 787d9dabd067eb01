"""Projection-counting experiments for Kakeya-type sums-differences inequalities.

Subpackages: ``slope_field`` (slopes over F_p and Q), ``configs`` (finite
configurations and popularity refinements), ``sd_engine`` (instances, search
and certificate pipelines), ``exponents`` (exponent maps and dimension
bounds), ``kakeya_grid`` (discretized lines and the slice arguments) and
``cli`` (command-line front end).
"""

__version__ = "0.1.0"
