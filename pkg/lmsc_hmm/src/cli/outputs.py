"""
Result files: plot-ready rows, the full JSON report and a readable table.

Nothing time-dependent is written, so an identical config and seed give
byte-identical files.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd

from lmsc_hmm.src.cli.experiments import ExperimentResult

log = logging.getLogger(__name__)

STATE_COLUMNS = ["method", "state", "family", "p_hat", "p_stay_hat", "duration_samples"]

MODE_COLUMNS: Dict[str, List[str]] = {
    "simulate": ["state", "family", "p_true", "frequency", "duration_true", "mean_run_length"],
    "fit-bw": STATE_COLUMNS + ["p_true", "error_share", "log_likelihood", "iterations", "converged"],
    "baseline": ["method", "filter_span", "state", "p_hat", "p_stay_hat", "duration_samples", "error_share"],
    "sweep": ["method", "mu1", "bhattacharyya", "p12_hat", "p1_hat", "error_share", "p21_hat", "status"],
    "curve-fit": ["component", "family", "weight", "params", "objective"],
    "pipeline": STATE_COLUMNS + ["duration_m", "mean_run_m", "p_true", "error_share"],
}
STAMP_COLUMNS = ["seed", "config_hash"]

RESULTS_CSV = "results.csv"
RESULTS_JSON = "results.json"
REPORT_JSON = "report.json"
TABLE_TXT = "table.txt"


def _as_list(results: Union[ExperimentResult, Sequence[ExperimentResult]]) -> List[ExperimentResult]:
    return [results] if isinstance(results, ExperimentResult) else list(results)


def result_columns(mode: Optional[str]) -> List[str]:
    return MODE_COLUMNS.get(mode, []) + STAMP_COLUMNS


def result_frame(results: Union[ExperimentResult, Sequence[ExperimentResult]], mode: Optional[str] = None) -> pd.DataFrame:
    """
    Stacks the rows of all results into one frame with the mode's column order.

    Columns a mode does not define are appended in order of appearance.
    """
    results = _as_list(results)
    mode = mode or (results[0].mode if results else None)
    columns = result_columns(mode)
    rows = [row for result in results for row in result.rows]
    extra = [c for row in rows for c in row if c not in columns]
    return pd.DataFrame(rows, columns=columns + list(dict.fromkeys(extra)))


def _sweep_table(frame: pd.DataFrame) -> str:
    methods = list(dict.fromkeys(frame["method"]))
    blocks = []
    for value, title in (("p1_hat", "Estimated state probability p1"), ("p12_hat", "Estimated transition probability p12")):
        table = frame.pivot_table(index="bhattacharyya", columns="method", values=value, aggfunc="first")
        table = table.reindex(columns=methods).sort_index(ascending=False)
        table.index = table.index.map(lambda b: f"{b:.2f}")
        table.index.name = "B"
        blocks.append(f"{title}\n{table.to_string(float_format=lambda v: f'{v:.3f}', na_rep='failed')}")
    return "\n\n".join(blocks)


def _pipeline_table(frame: pd.DataFrame) -> str:
    methods = list(dict.fromkeys(frame["method"]))
    blocks = []
    for value, title in (("duration_m", "Mean state duration [m]"), ("p_hat", "State probability")):
        table = frame.pivot_table(index="state", columns="method", values=value, aggfunc="first")
        table = table.reindex(columns=methods)
        blocks.append(f"{title}\n{table.to_string(float_format=lambda v: f'{v:.2f}', na_rep='-')}")
    return "\n\n".join(blocks)


def format_table(results: Union[ExperimentResult, Sequence[ExperimentResult]], mode: Optional[str] = None) -> str:
    """
    Renders results as text: sweeps as B-by-method grids, pipelines as
    state-by-method grids, every other mode as a plain row listing.
    """
    results = _as_list(results)
    mode = mode or (results[0].mode if results else None)
    frame = result_frame(results, mode)
    if frame.empty:
        return "  ".join(frame.columns) + "\n"

    if mode == "sweep":
        text = _sweep_table(frame)
    elif mode == "pipeline":
        text = _pipeline_table(frame)
    else:
        text = frame.drop(columns=STAMP_COLUMNS).to_string(index=False)

    hashes = sorted({result.config_hash for result in results})
    warnings = [w for result in results for w in result.warnings]
    footer = [f"config hash: {', '.join(hashes)}"] + [f"warning: {w}" for w in warnings]
    return text + "\n\n" + "\n".join(footer) + "\n"


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        log.error(f"Error writing '{path}': {e}")
        raise OSError(f"Cannot write '{path}': {e}") from e


def emit_outputs(
        results: Union[ExperimentResult, Sequence[ExperimentResult]],
        out_dir: Union[str, Path],
        fmt: str = "csv",
        mode: Optional[str] = None,
) -> Dict[str, Path]:
    """
    Writes the result files of one or more runs.

    Args:
        results (Union[ExperimentResult, Sequence[ExperimentResult]]): Results to write; may be empty.
        out_dir (Union[str, Path]): Destination directory, created when missing.
        fmt (str): 'csv' for results.csv or 'json' for results.json.
        mode (Optional[str]): Column layout for an empty result set.

    Returns:
        Dict[str, Path]: Written files by role ('results', 'report', 'table' and artifact names).

    Raises:
        ValueError: On an unknown format.
        OSError: If a file cannot be written, naming the path.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"Unknown output format '{fmt}', expected 'csv' or 'json'.")

    results = _as_list(results)
    mode = mode or (results[0].mode if results else None)
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        log.error(f"Error creating output directory '{out_dir}': {e}")
        raise OSError(f"Cannot create '{out_dir}': {e}") from e

    frame = result_frame(results, mode)
    written: Dict[str, Path] = {}

    if fmt == "csv":
        written["results"] = out_dir / RESULTS_CSV
        _write_text(written["results"], frame.to_csv(index=False, lineterminator="\n"))
    else:
        written["results"] = out_dir / RESULTS_JSON
        records = [row for result in results for row in result.rows]
        _write_text(written["results"], json.dumps({"columns": list(frame.columns), "rows": records}, indent=2) + "\n")

    report = {"schema": 1, "mode": mode, "results": [result.to_dict() for result in results]}
    written["report"] = out_dir / REPORT_JSON
    _write_text(written["report"], json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n")

    written["table"] = out_dir / TABLE_TXT
    _write_text(written["table"], format_table(results, mode))

    for index, result in enumerate(results):
        for name, artifact in result.artifacts.items():
            stem = name if len(results) == 1 else f"{name}_{index + 1}"
            written[stem] = out_dir / f"{stem}.csv"
            _write_text(written[stem], artifact.to_csv(index=False, lineterminator="\n"))

    log.info(f"Wrote {len(written)} files to '{out_dir}'.")

    return written


def load_report(path: Union[str, Path]) -> List[ExperimentResult]:
    """
    Reads the results back from a report.json.
    """
    with Path(path).open("r", encoding="utf-8") as file:
        report = json.load(file)
    return [ExperimentResult.from_dict(item) for item in report["results"]]
