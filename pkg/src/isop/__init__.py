"""Numerical Cheeger-constant bounds for convex domains in constant-curvature model spaces."""

from .bounds import BoundReport, bobkov_bound, concentration_bound, kls_E_bound, kls_theta_bound, loose_bounds
from .chords import cat_theta_bound, theta_at, theta_mean
from .domains import GeodesicBall, HalfspacePolytope, Intersection, domain_from_json, intersect_ball
from .model_geometry import ModelSpace
from .oracle import NeedleMeasure, cut_search_2d, grid_cheeger_2d, needle_cheeger
from .sampler import choose_basepoint, distance_stats, sample_uniform

__version__ = "0.1.0"
