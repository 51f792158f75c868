from .annealing import (SaConfig, fit_mixture_sa, fit_mixture_sa_restarts,
                        initial_guess, objective)
from .empirical import EmpiricalPdf, empirical_pdf
from .mixture import MixtureModel, state_probabilities

__all__ = [
    "EmpiricalPdf",
    "MixtureModel",
    "SaConfig",
    "empirical_pdf",
    "fit_mixture_sa",
    "fit_mixture_sa_restarts",
    "initial_guess",
    "objective",
    "state_probabilities",
]
