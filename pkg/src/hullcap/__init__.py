"""Monte Carlo half-plane capacity for boundary hulls in the upper half-plane."""

from hullcap.geometry import (
    Ball,
    Empty,
    GaussianProfile,
    HalfDisk,
    Hull,
    HullUnion,
    LorentzianProfile,
    PiecewiseLinearProfile,
    ConstantProfile,
    Ridge,
    Scaled,
    Shifted,
    Slit,
    SlitDomain,
    VerticalSlit,
    contains,
    dist_to_hull,
    hull_from_json,
    hull_to_json,
    slit_domain_from_json,
    sup_im,
    validate_hull,
)
from hullcap.sampler import (
    EmpiricalMeasure,
    Estimate,
    ExitSample,
    WalkConfig,
    expected_im_at_hit,
    sample_harmonic_measure,
    wos_exit,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "ConstantProfile",
    "EmpiricalMeasure",
    "Empty",
    "Estimate",
    "ExitSample",
    "GaussianProfile",
    "HalfDisk",
    "Hull",
    "HullUnion",
    "LorentzianProfile",
    "PiecewiseLinearProfile",
    "Ridge",
    "Scaled",
    "Shifted",
    "Slit",
    "SlitDomain",
    "VerticalSlit",
    "WalkConfig",
    "contains",
    "dist_to_hull",
    "expected_im_at_hit",
    "hull_from_json",
    "hull_to_json",
    "sample_harmonic_measure",
    "slit_domain_from_json",
    "sup_im",
    "validate_hull",
    "wos_exit",
]
