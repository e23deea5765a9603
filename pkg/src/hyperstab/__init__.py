"""Lyapunov certificates and upwind simulation for boundary-controlled
2x2 hyperbolic balance laws.

Modules
-------
weights        hyperbolic, exponential and affine weight families
lyapunov       stability / instability certificates for the linear loop
linear_sim     upwind simulator with optional delayed feedback
delay_analysis real growing modes of the delayed loop
quasilinear    state-dependent speeds: certificates and simulation
sweep          parameter-region sweeps and CSV output
"""

from .errors import HyperstabError
from .lyapunov import (
    CertifiedStable,
    CertifiedUnstable,
    Inconclusive,
    LinearSystemParams,
    certify_exponential,
    certify_hyperbolic,
    certify_instability_affine,
    sup_exponential_bound,
    sup_hyperbolic_bound,
)
from .weights import Affine, Constant, Exponential, Hyperbolic, WeightParams

__version__ = "0.1.0"

__all__ = [
    "HyperstabError",
    "CertifiedStable",
    "CertifiedUnstable",
    "Inconclusive",
    "LinearSystemParams",
    "certify_exponential",
    "certify_hyperbolic",
    "certify_instability_affine",
    "sup_exponential_bound",
    "sup_hyperbolic_bound",
    "Affine",
    "Constant",
    "Exponential",
    "Hyperbolic",
    "WeightParams",
]
