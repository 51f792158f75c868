from typing import Union

import numpy as np


def db_to_linear(values: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Converts envelope levels from dB to linear amplitude, 10 ** (v / 20).

    The 20·log10 amplitude rule is used, not the 10·log10 power rule.
    """
    linear = np.power(10.0, np.asarray(values, dtype=float) / 20.0)
    return float(linear) if linear.ndim == 0 else linear


def linear_to_db(values: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.asarray(values, dtype=float))
    return float(db) if db.ndim == 0 else db
