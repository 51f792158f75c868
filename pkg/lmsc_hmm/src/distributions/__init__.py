from .families import (FAMILIES, EmissionDistribution, Gaussian, Lognormal,
                       Rayleigh, Rice, distribution_from_dict)
from .separability import (IntegrationGrid, bhattacharyya, check_coverage,
                           gaussian_bhattacharyya, integrate, mixture_pdf,
                           validate_weights)

__all__ = [
    "FAMILIES",
    "EmissionDistribution",
    "Gaussian",
    "IntegrationGrid",
    "Lognormal",
    "Rayleigh",
    "Rice",
    "bhattacharyya",
    "check_coverage",
    "distribution_from_dict",
    "gaussian_bhattacharyya",
    "integrate",
    "mixture_pdf",
    "validate_weights",
]
