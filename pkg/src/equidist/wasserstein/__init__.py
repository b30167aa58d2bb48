"""Wasserstein distances: line, circle, exact discrete, entropic, Fourier bounds."""

from .bounds import rate_bound_constant, su2_borda_diagnostic, subgroup_rate_bound
from .circle import w1_circle
from .discrete import (
    planar_cost,
    torus_cost,
    w1_exact_discrete,
    w1_planar,
    w1_planar_sparse,
    w1_torus_exact,
)
from .fourier import fourier_bound_torus
from .line import w1_line, wp_line
from .result import FourierBoundReport, TransportResult
from .sinkhorn import w1_sinkhorn

__all__ = [
    "FourierBoundReport",
    "TransportResult",
    "fourier_bound_torus",
    "planar_cost",
    "rate_bound_constant",
    "su2_borda_diagnostic",
    "subgroup_rate_bound",
    "torus_cost",
    "w1_circle",
    "w1_exact_discrete",
    "w1_line",
    "w1_planar",
    "w1_planar_sparse",
    "w1_sinkhorn",
    "w1_torus_exact",
    "wp_line",
]
