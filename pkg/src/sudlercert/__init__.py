"""Certified lower bounds for Sudler products at badly approximable numbers."""

from .contfrac import EventuallyPeriodicCF, QuadSurd, format_cf, parse_cf
from .ffamily import FULL_PARAMS, SMOKE_PARAMS, FParams, build_family, build_ffunction
from .pattern import Pattern, pattern_bounds
from .sudler import H_limit, decompose_check, perturbed_product, sudler_product
from .verify import empirical_liminf, run_full

__version__ = "0.1.0"
