from .threshold import (LabelEstimate, ThresholdClassifier,
                        average_error_probability, classify,
                        estimate_from_labels, labeling_error_share,
                        moving_average, optimal_threshold)

__all__ = [
    "LabelEstimate",
    "ThresholdClassifier",
    "average_error_probability",
    "classify",
    "estimate_from_labels",
    "labeling_error_share",
    "moving_average",
    "optimal_threshold",
]
