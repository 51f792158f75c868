"""
Measurement trace ingestion and spatial down-sampling.

Trace CSV: UTF-8, '.' decimal separator, one record per line, header
`position_m,amplitude` (linear envelope) or `position_m,amplitude_db`
(converted with the 20·log10 amplitude rule). A file without header is read
as `position_m,amplitude`. Observation CSV: a single `amplitude` column;
other columns (e.g. `state`) are ignored on load.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from lmsc_hmm.src.common.exceptions import (InvalidInputError,
                                            TraceFormatError,
                                            UnsortedPositionsError)
from lmsc_hmm.src.common.sequences import ObservationSequence
from lmsc_hmm.src.preprocess.transformations import db_to_linear

log = logging.getLogger(__name__)

POSITION_COLUMN = "position_m"
AMPLITUDE_COLUMN = "amplitude"
AMPLITUDE_DB_COLUMN = "amplitude_db"

# Position quantization tolerated when comparing gaps with the spacing.
POSITION_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasurementTrace:
    """
    Signal envelope recorded along a track.

    Attributes:
        positions (np.ndarray): Track distance in meters, non-decreasing.
        amplitudes (np.ndarray): Linear envelope, finite.
        trace_id (str): Name of the trace, usually the file stem.
    """
    positions: np.ndarray
    amplitudes: np.ndarray
    trace_id: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float).ravel()
        amplitudes = np.asarray(self.amplitudes, dtype=float).ravel()
        if positions.shape != amplitudes.shape:
            raise InvalidInputError(f"Got {positions.size} positions for {amplitudes.size} amplitudes.")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(amplitudes))):
            raise InvalidInputError("Trace positions and amplitudes must be finite.")
        decreasing = np.flatnonzero(np.diff(positions) < 0)
        if decreasing.size:
            row = int(decreasing[0]) + 2
            raise UnsortedPositionsError(f"Position decreases at row {row} of trace '{self.trace_id}'.", row=row)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "amplitudes", amplitudes)

    def __len__(self) -> int:
        return self.positions.size


def _numeric_column(values: pd.Series, column: str, path: Path) -> np.ndarray:
    numeric = pd.to_numeric(values.str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(numeric))
    if bad.size:
        row = int(bad[0]) + 1
        raise TraceFormatError(
            f"{path}: row {row}, column '{column}': cannot read {values.iloc[bad[0]]!r} as a finite number.",
            row=row,
            column=column,
        )
    return numeric


def load_trace(path: Union[str, Path]) -> MeasurementTrace:
    """
    Loads and validates a measurement trace CSV.

    Rows are numbered from 1 for the first record, not counting the header.

    Args:
        path (Union[str, Path]): CSV file following the trace format.

    Returns:
        MeasurementTrace: Validated trace with linear amplitudes.

    Raises:
        FileNotFoundError: If the file does not exist.
        TraceFormatError: On a bad header, column count or non-finite field.
        UnsortedPositionsError: If positions decrease.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        log.error(f"Error: File '{path}' not found.")
        raise
    except pd.errors.EmptyDataError as e:
        raise TraceFormatError(f"{path}: file is empty.") from e

    if raw.shape[1] != 2:
        raise TraceFormatError(f"{path}: expected 2 columns, found {raw.shape[1]}.")

    first = [str(v).strip() for v in raw.iloc[0]]
    columns = [POSITION_COLUMN, AMPLITUDE_COLUMN]
    if first[0] == POSITION_COLUMN:
        if first[1] not in (AMPLITUDE_COLUMN, AMPLITUDE_DB_COLUMN):
            raise TraceFormatError(f"{path}: unknown amplitude column '{first[1]}'.", row=0, column=first[1])
        columns = first
        raw = raw.iloc[1:].reset_index(drop=True)

    if raw.empty:
        raise TraceFormatError(f"{path}: no records after the header.")

    positions = _numeric_column(raw[0], columns[0], path)
    amplitudes = _numeric_column(raw[1], columns[1], path)

    if columns[1] == AMPLITUDE_DB_COLUMN:
        amplitudes = db_to_linear(amplitudes)
        log.info(f"Converted {amplitudes.size} dB samples of '{path.name}' to linear amplitude.")

    trace = MeasurementTrace(
        positions=positions, amplitudes=amplitudes, trace_id=path.stem, metadata={"source_unit": columns[1]}
    )
    log.info(f"Loaded trace '{trace.trace_id}' with {len(trace)} records over {positions[-1] - positions[0]:.1f} m.")

    return trace


def save_trace(trace: MeasurementTrace, path: Union[str, Path]) -> Path:
    """
    Writes a trace as `position_m,amplitude` CSV; floats keep their exact repr.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame({POSITION_COLUMN: trace.positions, AMPLITUDE_COLUMN: trace.amplitudes})
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def load_observations(path: Union[str, Path]) -> ObservationSequence:
    """
    Loads an observation CSV with an `amplitude` column.

    Raises:
        FileNotFoundError: If the file does not exist.
        TraceFormatError: If the column is missing or holds a non-finite value.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        log.error(f"Error: File '{path}' not found.")
        raise

    df.columns = [col.strip().lower() for col in df.columns]
    if AMPLITUDE_COLUMN not in df.columns:
        raise TraceFormatError(f"{path}: missing '{AMPLITUDE_COLUMN}' column, found {list(df.columns)}.")

    amplitudes = _numeric_column(df[AMPLITUDE_COLUMN], AMPLITUDE_COLUMN, path)
    return ObservationSequence(amplitudes=amplitudes, source={"path": str(path)})


def save_observations(
        obs: ObservationSequence, path: Union[str, Path], states: Optional[np.ndarray] = None
) -> Path:
    """
    Writes amplitudes as observation CSV, optionally preceded by a 1-based `state` column.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {} if states is None else {"state": np.asarray(states, dtype=np.int64)}
    columns[AMPLITUDE_COLUMN] = obs.amplitudes
    pd.DataFrame(columns).to_csv(path, index=False, lineterminator="\n")
    return path


def downsample_by_distance(trace: MeasurementTrace, spacing: float = 1.0) -> ObservationSequence:
    """
    Thins a trace so that consecutive kept samples are at least `spacing` meters apart.

    The first record is kept; each following kept record is the first one at
    or beyond the last kept position plus `spacing`. Measured amplitudes are
    kept as they are, nothing is interpolated.

    Args:
        trace (MeasurementTrace): Non-empty trace.
        spacing (float): Minimum separation in meters.

    Returns:
        ObservationSequence: Kept amplitudes with their positions.

    Raises:
        InvalidInputError: If spacing <= 0 or the trace is empty.
    """
    if not spacing > 0:
        raise InvalidInputError(f"Spacing must be positive, got {spacing}.")
    if len(trace) == 0:
        raise InvalidInputError("Cannot down-sample an empty trace.")

    positions = trace.positions
    kept = [0]
    while True:
        target = positions[kept[-1]] + spacing - POSITION_ATOL
        following = max(int(np.searchsorted(positions, target, side="left")), kept[-1] + 1)
        if following >= positions.size:
            break
        kept.append(following)

    index = np.asarray(kept)
    log.info(f"Down-sampled '{trace.trace_id}' from {len(trace)} to {index.size} samples at {spacing:g} m.")

    return ObservationSequence(
        amplitudes=trace.amplitudes[index],
        positions=positions[index],
        source={"trace_id": trace.trace_id, "spacing_m": spacing},
    )
