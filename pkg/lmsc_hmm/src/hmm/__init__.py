from .baum_welch import fit, reestimate
from .forward_backward import (backward, decode, e_step, forward, posteriors,
                               transition_posteriors)
from .logmath import max_star, max_star_fold, max_star_reduce
from .model import FitReport, HmmModel, PosteriorTables, initial_model
from .oracle import linear_forward_backward_oracle

__all__ = [
    "FitReport",
    "HmmModel",
    "PosteriorTables",
    "backward",
    "decode",
    "e_step",
    "fit",
    "forward",
    "initial_model",
    "linear_forward_backward_oracle",
    "max_star",
    "max_star_fold",
    "max_star_reduce",
    "posteriors",
    "reestimate",
    "transition_posteriors",
]
