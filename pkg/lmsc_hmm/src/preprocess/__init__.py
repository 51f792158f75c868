from .synthetic import (correlated_uniforms, default_three_state_model,
                        slowed_chain, synthetic_trace)
from .trace import (MeasurementTrace, downsample_by_distance,
                    load_observations, load_trace, save_observations,
                    save_trace)
from .transformations import db_to_linear, linear_to_db

__all__ = [
    "MeasurementTrace",
    "correlated_uniforms",
    "db_to_linear",
    "default_three_state_model",
    "downsample_by_distance",
    "linear_to_db",
    "load_observations",
    "load_trace",
    "save_observations",
    "save_trace",
    "slowed_chain",
    "synthetic_trace",
]
