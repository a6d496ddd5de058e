"""Finite-sample FDR/FNR lower bounds for top-K multiple-testing procedures."""

from .bounds import (
    RateExponents,
    grouped_feasible,
    iid_location_feasible,
    kappa_star,
    lehmann_gamma_lower,
    scale_sigma_lower,
    spiked_feasible,
)
from .exceptions import (
    DomainError,
    FdrBoundsError,
    ParameterError,
    PreconditionError,
    RangeError,
    RegimeWarning,
)
from .frontier import FrontierCalibrator, GridSpec, calibrate, run_frontier
from .model import Family, ModelSpec, build_layout, layout_for, sample_batch
from .procedures import BenjaminiHochberg, bh_procedure, estimate_fdr_fnr
from .proxies import (
    DerandomizedProxies,
    ProxyConfig,
    c0,
    k_minus,
    k_plus,
    proxy_set,
    theorem_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "BenjaminiHochberg",
    "DerandomizedProxies",
    "DomainError",
    "Family",
    "FdrBoundsError",
    "FrontierCalibrator",
    "GridSpec",
    "ModelSpec",
    "ParameterError",
    "PreconditionError",
    "ProxyConfig",
    "RangeError",
    "RateExponents",
    "RegimeWarning",
    "bh_procedure",
    "build_layout",
    "c0",
    "calibrate",
    "estimate_fdr_fnr",
    "grouped_feasible",
    "iid_location_feasible",
    "k_minus",
    "k_plus",
    "kappa_star",
    "layout_for",
    "lehmann_gamma_lower",
    "proxy_set",
    "run_frontier",
    "sample_batch",
    "scale_sigma_lower",
    "spiked_feasible",
    "theorem_bounds",
]
