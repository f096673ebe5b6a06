"""Signed polygon tests for community structure in networks."""
from ._accel import backend, backend_name, set_backend
from .errors import SgnPolyError
from .graph import AdjacencyMatrix, read_edges, sample_adjacency, write_edges
from .inference import TestReport, estimate_theta_norm_sq, normal_quantile, sgnq_test, sgnt_test
from .model import DcmmParams, MembershipLaw, ThetaLaw, build_omega, matched_null, sample_params
from .stats import brute_force_polygon, distinct_cycle_sum, eta_hat, sgn_q, sgn_t

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "DcmmParams",
    "MembershipLaw",
    "SgnPolyError",
    "TestReport",
    "ThetaLaw",
    "backend",
    "backend_name",
    "brute_force_polygon",
    "build_omega",
    "distinct_cycle_sum",
    "estimate_theta_norm_sq",
    "eta_hat",
    "matched_null",
    "normal_quantile",
    "read_edges",
    "sample_adjacency",
    "sample_params",
    "set_backend",
    "sgn_q",
    "sgn_t",
    "sgnq_test",
    "sgnt_test",
    "write_edges",
]
