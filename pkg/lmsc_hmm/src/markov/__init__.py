from .chain import (MarkovChain, count_transitions, mean_run_lengths,
                    mean_state_durations, merge_short_runs, run_lengths,
                    simulate, stationary_distribution)

__all__ = [
    "MarkovChain",
    "count_transitions",
    "mean_run_lengths",
    "mean_state_durations",
    "merge_short_runs",
    "run_lengths",
    "simulate",
    "stationary_distribution",
]
