"""
Experiment runners behind the command-line modes.

Each runner takes a validated `ExperimentConfig` and returns an
`ExperimentResult` whose rows are flat, JSON-safe dicts stamped with the
config hash and the seed that produced them. Runners never write files;
`outputs.emit_outputs` does.
"""
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import chain as concat
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from lmsc_hmm.src.baselines.threshold import (ThresholdClassifier, classify,
                                              estimate_from_labels,
                                              labeling_error_share,
                                              optimal_threshold)
from lmsc_hmm.src.cli.config import (ExperimentConfig, chain_from_spec,
                                     emissions_from_spec, method_span,
                                     sweep_methods)
from lmsc_hmm.src.common.exceptions import (InfiniteDurationError,
                                            LmscHmmError)
from lmsc_hmm.src.common.seeds import spawn_seeds
from lmsc_hmm.src.common.sequences import ObservationSequence, StatePath
from lmsc_hmm.src.distributions.families import EmissionDistribution, Gaussian
from lmsc_hmm.src.distributions.separability import bhattacharyya
from lmsc_hmm.src.fitting.annealing import SaConfig, fit_mixture_sa_restarts
from lmsc_hmm.src.fitting.empirical import EmpiricalPdf, empirical_pdf
from lmsc_hmm.src.fitting.mixture import MixtureModel
from lmsc_hmm.src.hmm.baum_welch import fit
from lmsc_hmm.src.hmm.forward_backward import decode, e_step
from lmsc_hmm.src.hmm.model import FitReport, HmmModel, initial_model
from lmsc_hmm.src.markov.chain import (MarkovChain, mean_run_lengths,
                                       mean_state_durations, merge_short_runs,
                                       simulate, stationary_distribution)
from lmsc_hmm.src.preprocess.synthetic import (default_three_state_model,
                                               slowed_chain, synthetic_trace)
from lmsc_hmm.src.preprocess.trace import (MeasurementTrace,
                                           downsample_by_distance,
                                           load_observations, load_trace)
from lmsc_hmm.src.preprocess.transformations import db_to_linear

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    """
    Outcome of one experiment run.

    Attributes:
        mode (str): Mode that produced the result.
        config_hash (str): Hash of the effective config.
        seed (int): Master seed of the run.
        rows (List[Dict[str, Any]]): Flat records, one per reported estimate.
        summary (Dict[str, Any]): Run-level details (fitted matrices, truth, counts).
        warnings (List[str]): Recoverable anomalies met during the run.
        runtime_s (float): Wall time; logged, never written to result files.
        artifacts (Dict[str, pd.DataFrame]): Plot-ready side tables written as `<name>.csv`.
    """
    mode: str
    config_hash: str
    seed: int
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    runtime_s: float = field(default=0.0, compare=False)
    artifacts: Dict[str, pd.DataFrame] = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "rows": self.rows,
            "summary": self.summary,
            "warnings": self.warnings,
        }

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "ExperimentResult":
        return cls(
            mode=spec["mode"],
            config_hash=spec["config_hash"],
            seed=int(spec["seed"]),
            rows=list(spec.get("rows", [])),
            summary=dict(spec.get("summary", {})),
            warnings=list(spec.get("warnings", [])),
        )


def json_safe(value: Any) -> Any:
    """
    Converts numpy values to plain Python; non-finite floats become None.
    """
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _result(
        config: ExperimentConfig,
        rows: List[Dict[str, Any]],
        summary: Dict[str, Any],
        warnings: List[str],
        started: float,
        artifacts: Optional[Dict[str, pd.DataFrame]] = None,
) -> ExperimentResult:
    stamped = [{**row, "seed": row.get("seed", config.seed), "config_hash": config.config_hash} for row in rows]
    result = ExperimentResult(
        mode=config.mode,
        config_hash=config.config_hash,
        seed=config.seed,
        rows=json_safe(stamped),
        summary=json_safe(summary),
        warnings=list(warnings),
        runtime_s=time.perf_counter() - started,
        artifacts=artifacts or {},
    )
    log.info(f"{config.mode} finished with {len(result.rows)} rows in {result.runtime_s:.2f} s.")
    return result


def _warn(warnings: List[str], message: str) -> None:
    log.warning(message)
    warnings.append(message)


def _durations(chain: MarkovChain, warnings: List[str]) -> np.ndarray:
    try:
        return mean_state_durations(chain)
    except InfiniteDurationError as e:
        _warn(warnings, str(e))
        stay = np.diag(chain.transition_matrix)
        with np.errstate(divide="ignore"):
            return np.where(stay < 1.0, 1.0 / (1.0 - stay), np.inf)


def _state_rows(
        method: str,
        chain: MarkovChain,
        p_hat: Sequence[float],
        warnings: List[str],
        spacing_m: Optional[float] = None,
        per_state: Optional[Dict[str, Sequence[Any]]] = None,
        **columns: Any,
) -> List[Dict[str, Any]]:
    """
    One row per state: p_i, p_ii and the mean duration, in samples and optionally meters.
    """
    stay = np.diag(chain.transition_matrix)
    durations = _durations(chain, warnings)
    rows = []
    for k in range(chain.m):
        row = {
            "method": method,
            "state": k + 1,
            "p_hat": p_hat[k],
            "p_stay_hat": stay[k],
            "duration_samples": durations[k],
        }
        if spacing_m is not None:
            row["duration_m"] = durations[k] * spacing_m
        for name, values in (per_state or {}).items():
            row[name] = values[k]
        rows.append({**row, **columns})
    return rows


def _bw_settings(section: Dict[str, Any]) -> Tuple[int, float, float, int, str]:
    return (
        int(section.get("max_iters", 100)),
        float(section.get("tol", 1e-6)),
        float(section.get("stay", 0.5)),
        int(section.get("restarts", 1)),
        str(section.get("start", "uniform")),
    )


def fit_with_restarts(
        model0: HmmModel,
        obs: ObservationSequence,
        max_iters: int = 100,
        tol: float = 1e-6,
        restarts: int = 1,
        seed: int = 0,
) -> FitReport:
    """
    Runs Baum-Welch from `model0` and from `restarts - 1` random transition matrices.

    Random starts draw every row from a flat Dirichlet and keep the initial
    probabilities and emissions of `model0`. The run with the highest final
    log-likelihood wins; ties go to the earliest start.
    """
    rng = np.random.default_rng(seed)
    starts = [model0]
    for _ in range(restarts - 1):
        rows = rng.dirichlet(np.ones(model0.m), size=model0.m)
        starts.append(model0.with_chain(MarkovChain(rows, model0.chain.initial_probabilities)))

    reports = [fit(start, obs, max_iters=max_iters, tol=tol) for start in starts]
    best = max(range(len(reports)), key=lambda i: (reports[i].log_likelihood_trace[-1], -i))
    if restarts > 1:
        log.info(f"Best of {restarts} Baum-Welch starts: #{best + 1}, ln f(r)={reports[best].log_likelihood_trace[-1]:.6f}")
    return reports[best]


def _decoded_path(model: HmmModel, obs: ObservationSequence) -> StatePath:
    return decode(e_step(model, obs, with_zeta=False).gamma)


def _fit_inputs(
        config: ExperimentConfig, seed: int
) -> Tuple[ObservationSequence, Optional[StatePath], Tuple[EmissionDistribution, ...], Optional[MarkovChain]]:
    """
    Loads the configured observations, or simulates them from `model` when no file is given.
    """
    model = config.section("model")
    emissions = emissions_from_spec(model["emissions"])
    path = config.get("observations")
    if path is not None:
        obs = load_observations(path)
        chain = chain_from_spec(model) if "transition_matrix" in model else None
        return obs, None, emissions, chain

    chain = chain_from_spec(model)
    truth, obs = simulate(chain, emissions, int(config.get("n")), np.random.default_rng(seed))
    return obs, truth, emissions, chain


def run_simulate(config: ExperimentConfig) -> ExperimentResult:
    """
    Draws a state path and amplitudes from the configured model.

    Rows compare the empirical state frequencies and run lengths with the
    model's stationary probabilities and mean durations; the samples
    themselves go to the `observations` artifact.
    """
    started = time.perf_counter()
    warnings: List[str] = []
    model = config.section("model")
    chain = chain_from_spec(model)
    emissions = emissions_from_spec(model["emissions"])
    n = int(config.get("n"))

    path, obs = simulate(chain, emissions, n, np.random.default_rng(config.seed))

    p_true = stationary_distribution(chain)
    frequency = np.bincount(path.states, minlength=chain.m) / n
    runs = mean_run_lengths(path)
    durations = _durations(chain, warnings)

    rows = [
        {
            "state": k + 1,
            "family": emissions[k].family,
            "p_true": p_true[k],
            "frequency": frequency[k],
            "duration_true": durations[k],
            "mean_run_length": runs[k],
        }
        for k in range(chain.m)
    ]
    summary = {"n": n, "model": HmmModel(chain=chain, emissions=emissions).to_dict()}
    artifacts = {"observations": pd.DataFrame({"state": path.one_based(), "amplitude": obs.amplitudes})}

    return _result(config, rows, summary, warnings, started, artifacts)


def run_fit_bw(config: ExperimentConfig) -> ExperimentResult:
    """
    Fits the transition matrix by Baum-Welch with the configured emissions held fixed.
    """
    started = time.perf_counter()
    warnings: List[str] = []
    data_seed, restart_seed = spawn_seeds(config.seed, 2)
    obs, truth, emissions, true_chain = _fit_inputs(config, data_seed)
    max_iters, tol, stay, restarts, start = _bw_settings(config.section("bw"))

    init = config.section("init")
    if "transition_matrix" in init:
        model0 = HmmModel(chain=chain_from_spec(init), emissions=emissions)
    elif start == "weights":
        m = len(emissions)
        priors = stationary_distribution(true_chain) if true_chain is not None else np.full(m, 1.0 / m)
        model0 = initial_model(emissions, initial_probabilities=priors, stay=stay, start=start)
    else:
        model0 = initial_model(emissions, stay=stay)

    report = fit_with_restarts(model0, obs, max_iters=max_iters, tol=tol, restarts=restarts, seed=restart_seed)
    if not report.converged:
        _warn(warnings, f"Baum-Welch reached max_iters={max_iters} without meeting tol={tol}.")

    chain = report.model.chain
    error_share = labeling_error_share(truth, _decoded_path(report.model, obs)) if truth is not None else None
    per_state = {"family": [f.family for f in emissions]}
    if true_chain is not None:
        per_state["p_true"] = stationary_distribution(true_chain)

    rows = _state_rows(
        "BW", chain, stationary_distribution(chain), warnings,
        per_state=per_state,
        error_share=error_share,
        log_likelihood=report.log_likelihood_trace[-1],
        iterations=report.iterations,
        converged=report.converged,
    )
    summary = {
        "n": len(obs),
        "fit": report.to_dict(),
        "true_chain": true_chain.to_dict() if true_chain is not None else None,
    }

    return _result(config, rows, summary, warnings, started)


def threshold_classifier(
        emissions: Sequence[EmissionDistribution],
        priors: Sequence[float],
        span: int = 1,
        thresholds: Optional[Sequence[float]] = None,
) -> ThresholdClassifier:
    """
    Picks the cut points for a threshold baseline.

    Explicit thresholds win; two equal-variance Gaussians get the closed-form
    optimum; anything else is cut at the quantiles of the prior-weighted mixture.
    """
    if thresholds is not None:
        return ThresholdClassifier(thresholds=tuple(thresholds), filter_span=span)

    if (
            len(emissions) == 2
            and all(isinstance(f, Gaussian) for f in emissions)
            and emissions[0].sigma == emissions[1].sigma
            and emissions[0].mu < emissions[1].mu
    ):
        tau = optimal_threshold(emissions[0].mu, emissions[1].mu, emissions[0].sigma, priors[0], priors[1])
        return ThresholdClassifier(thresholds=(tau,), filter_span=span)

    return ThresholdClassifier.from_mixture(priors, emissions, filter_span=span)


def run_baseline(config: ExperimentConfig) -> ExperimentResult:
    """
    Labels the observations with threshold methods, one per configured filter span.
    """
    started = time.perf_counter()
    warnings: List[str] = []
    obs, truth, emissions, true_chain = _fit_inputs(config, spawn_seeds(config.seed, 1)[0])
    m = len(emissions)
    priors = stationary_distribution(true_chain) if true_chain is not None else np.full(m, 1.0 / m)

    rows, classifiers = [], {}
    for span in config.get("spans", [1, 10, 20]):
        method = f"T{span}"
        classifier = threshold_classifier(emissions, priors, span, config.get("thresholds"))
        path = classify(classifier, obs)
        estimate = estimate_from_labels(path, m)
        if estimate.unvisited:
            _warn(warnings, f"{method}: states {list(estimate.unvisited)} never left, rows set uniform.")

        error_share = labeling_error_share(truth, path) if truth is not None else None
        rows.extend(_state_rows(
            method, estimate.chain, estimate.chain.initial_probabilities, warnings,
            filter_span=span, error_share=error_share,
        ))
        classifiers[method] = {"thresholds": classifier.thresholds, "state_order": classifier.state_order}

    summary = {
        "n": len(obs),
        "priors": priors,
        "classifiers": classifiers,
        "true_chain": true_chain.to_dict() if true_chain is not None else None,
    }

    return _result(config, rows, summary, warnings, started)


def _sweep_point(task: Tuple[float, int, Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    Simulates one spacing of the two-Gaussian benchmark and runs every method on it.
    """
    mu1, seed, settings = task
    mu2, sigma = float(settings.get("mu2", 1.0)), float(settings.get("sigma", 0.2))
    max_iters, tol, stay, restarts, start = _bw_settings(settings.get("bw") or {})
    chain = chain_from_spec(settings["chain"])
    emissions = (Gaussian(mu=mu1, sigma=sigma), Gaussian(mu=mu2, sigma=sigma))

    truth, obs = simulate(chain, emissions, int(settings["n"]), np.random.default_rng(seed))
    distance = bhattacharyya(*emissions)
    p_true = stationary_distribution(chain)

    rows = []
    for method in settings.get("methods", ["BW", "T1", "T10", "T20"]):
        row = {"method": method, "mu1": mu1, "bhattacharyya": distance, "seed": seed}
        try:
            if method == "BW":
                model0 = initial_model(emissions, initial_probabilities=p_true, stay=stay, start=start)
                report = fit_with_restarts(model0, obs, max_iters=max_iters, tol=tol, restarts=restarts,
                                           seed=spawn_seeds(seed, 1)[0])
                estimated = report.model.chain
                p1_hat = stationary_distribution(estimated)[0]
                path = _decoded_path(report.model, obs)
            else:
                tau = optimal_threshold(mu1, mu2, sigma, p_true[0], p_true[1])
                path = classify(ThresholdClassifier(thresholds=(tau,), filter_span=method_span(method)), obs)
                estimated = estimate_from_labels(path, 2).chain
                p1_hat = estimated.initial_probabilities[0]
            row.update(
                p12_hat=estimated.transition_matrix[0, 1],
                p1_hat=p1_hat,
                error_share=labeling_error_share(truth, path),
                p21_hat=estimated.transition_matrix[1, 0],
                status="ok",
            )
        except LmscHmmError as e:
            log.error(f"{method} failed at mu1={mu1}: {e}")
            row.update(p12_hat=None, p1_hat=None, error_share=None, p21_hat=None, status=f"failed: {e}")
        rows.append(row)

    log.debug(f"Sweep point mu1={mu1} (B={distance:.3f}) done.")
    return rows


def run_sweep(config: ExperimentConfig) -> ExperimentResult:
    """
    Runs BW and the threshold methods over the mu1 grid of the two-Gaussian benchmark.

    Each grid point gets its own seed spawned from the master seed, so the
    rows do not depend on the number of workers. Rows are ordered by mu1,
    then by the configured method order.
    """
    started = time.perf_counter()
    warnings: List[str] = []
    grid = [float(v) for v in config.get("mu1_grid")]
    methods = sweep_methods(config)
    workers = int(config.get("workers", 1))

    tasks = [(mu1, seed, config.settings) for mu1, seed in zip(grid, spawn_seeds(config.seed, len(grid)))]
    log.info(f"Sweeping {len(grid)} points x {len(methods)} methods with n={config.get('n')} on {workers} worker(s).")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(tqdm(pool.map(_sweep_point, tasks), total=len(tasks), desc="Sweep", unit="point"))
    else:
        chunks = [_sweep_point(task) for task in tqdm(tasks, desc="Sweep", unit="point")]

    rows = sorted(concat.from_iterable(chunks), key=lambda r: (r["mu1"], methods.index(r["method"])))
    failed = [r for r in rows if r["status"] != "ok"]
    for row in failed:
        warnings.append(f"{row['method']} at mu1={row['mu1']}: {row['status']}")

    chain = chain_from_spec(config.section("chain"))
    summary = {
        "n": int(config.get("n")),
        "mu2": float(config.get("mu2", 1.0)),
        "sigma": float(config.get("sigma", 0.2)),
        "chain": chain.to_dict(),
        "p_true": stationary_distribution(chain),
        "methods": methods,
        "failed_rows": len(failed),
    }

    return _result(config, rows, summary, warnings, started)


def load_configured_trace(
        section: Dict[str, Any], spacing_m: float, seed: int
) -> Tuple[MeasurementTrace, Optional[MarkovChain], Optional[Tuple[EmissionDistribution, ...]]]:
    """
    Reads the configured trace, or generates the synthetic three-state stand-in.

    The synthetic chain is given per `spacing_m` metres and slowed down to the
    raw sample spacing, so the down-sampled trace follows that chain again.

    Returns:
        Tuple: The trace, then the true chain and emissions for a synthetic trace (None otherwise).
    """
    path = section.get("path")
    unit = section.get("amplitude_unit", "auto")
    if path is not None:
        trace = load_trace(path)
        if unit == "db" and trace.metadata.get("source_unit") != "amplitude_db":
            trace = MeasurementTrace(
                positions=trace.positions,
                amplitudes=db_to_linear(trace.amplitudes),
                trace_id=trace.trace_id,
                metadata={**trace.metadata, "source_unit": "amplitude_db"},
            )
            log.info(f"Converted '{trace.trace_id}' from dB to linear amplitude.")
        return trace, None, None

    synthetic = section.get("synthetic") or {}
    if "model" in synthetic:
        chain = chain_from_spec(synthetic["model"])
        emissions = emissions_from_spec(synthetic["model"]["emissions"])
    else:
        chain, emissions = default_three_state_model()

    raw_spacing = float(synthetic.get("sample_spacing_m", 0.25))
    factor = max(1, round(spacing_m / raw_spacing))
    trace = synthetic_trace(
        slowed_chain(chain, factor),
        emissions,
        int(synthetic.get("n", 200_000)),
        np.random.default_rng(seed),
        sample_spacing=raw_spacing,
        correlation=float(synthetic.get("correlation", 0.7)),
    )
    return trace, chain, tuple(emissions)


def _truth_at(trace: MeasurementTrace, obs: ObservationSequence, m: int) -> Optional[StatePath]:
    states = trace.metadata.get("states")
    if states is None or obs.positions is None:
        return None
    index = np.searchsorted(trace.positions, obs.positions, side="left")
    return StatePath.from_one_based(np.asarray(states)[index], m)


@dataclass
class _CurveFitStage:
    trace: MeasurementTrace
    obs: ObservationSequence
    target: EmpiricalPdf
    mixture: MixtureModel
    objective: float
    true_chain: Optional[MarkovChain]
    true_emissions: Optional[Tuple[EmissionDistribution, ...]]


def _curve_fit_stage(config: ExperimentConfig, seeds: Sequence[int], warnings: List[str]) -> _CurveFitStage:
    trace_section = config.section("trace")
    spacing = float(trace_section.get("spacing_m", 1.0))
    trace, true_chain, true_emissions = load_configured_trace(trace_section, spacing, seeds[0])

    obs = downsample_by_distance(trace, spacing)
    target = empirical_pdf(obs, bins=int(config.get("bins", 100)))

    sa_cfg = SaConfig.from_dict({**config.section("annealing"), "seed": seeds[1]})
    families = [f.lower() for f in config.get("families")]
    mixture, objective = fit_mixture_sa_restarts(
        target, families, sa_cfg, restarts=int(config.get("restarts", 1)), workers=int(config.get("workers", 1))
    )

    ceiling = config.get("objective_ceiling")
    if ceiling is not None and objective > ceiling:
        _warn(warnings, f"Curve-fit objective {objective:.3e} exceeds the ceiling {ceiling:.3e}; check the fit quality.")

    return _CurveFitStage(trace, obs, target, mixture, objective, true_chain, true_emissions)


def _mixture_rows(mixture: MixtureModel, objective: float) -> List[Dict[str, Any]]:
    return [
        {
            "component": k + 1,
            "family": component.family,
            "weight": weight,
            "params": json.dumps(dict(zip(component.param_names, component.params))),
            "objective": objective,
        }
        for k, (weight, component) in enumerate(zip(mixture.weights, mixture.components))
    ]


def _density_frame(target: EmpiricalPdf, mixture: MixtureModel) -> pd.DataFrame:
    return pd.DataFrame({
        "amplitude": target.centers,
        "empirical_pdf": target.density,
        "fitted_pdf": np.asarray(mixture.pdf(target.centers)),
    })


def run_curve_fit(config: ExperimentConfig) -> ExperimentResult:
    """
    Down-samples the trace and fits the configured mixture to its histogram by simulated annealing.
    """
    started = time.perf_counter()
    warnings: List[str] = []
    stage = _curve_fit_stage(config, spawn_seeds(config.seed, 2), warnings)

    summary = {
        "trace_id": stage.trace.trace_id,
        "n_raw": len(stage.trace),
        "n": len(stage.obs),
        "mixture": stage.mixture.to_dict(),
        "objective": stage.objective,
    }
    artifacts = {"density": _density_frame(stage.target, stage.mixture)}

    return _result(config, _mixture_rows(stage.mixture, stage.objective), summary, warnings, started, artifacts)


def run_pipeline(config: ExperimentConfig) -> ExperimentResult:
    """
    Curve fit, Baum-Welch and threshold baselines on one down-sampled trace.

    The fitted mixture supplies the fixed emissions and the starting state
    probabilities; the transition matrix starts uniform off the diagonal
    unless `init.transition_matrix` is given. Durations are reported in
    samples and in meters of track.
    """
    started = time.perf_counter()
    warnings: List[str] = []
    seeds = spawn_seeds(config.seed, 3)
    stage = _curve_fit_stage(config, seeds, warnings)
    obs, mixture = stage.obs, stage.mixture
    spacing = float(config.section("trace").get("spacing_m", 1.0))
    m = len(mixture.components)

    max_iters, tol, stay, restarts, start = _bw_settings(config.section("bw"))
    init = config.section("init")
    if "transition_matrix" in init:
        model0 = HmmModel(chain=chain_from_spec(init), emissions=mixture.components)
    else:
        model0 = initial_model(mixture.components, initial_probabilities=mixture.weights, stay=stay, start=start)
    report = fit_with_restarts(model0, obs, max_iters=max_iters, tol=tol, restarts=restarts, seed=seeds[2])
    if not report.converged:
        _warn(warnings, f"Baum-Welch reached max_iters={max_iters} without meeting tol={tol}.")

    truth = _truth_at(stage.trace, obs, m) if stage.true_chain is not None and stage.true_chain.m == m else None
    per_state: Dict[str, Sequence[Any]] = {"family": list(mixture.families)}
    if truth is not None:
        per_state["p_true"] = stationary_distribution(stage.true_chain)

    def error_of(path: StatePath) -> Optional[float]:
        return labeling_error_share(truth, path) if truth is not None else None

    bw_path = _decoded_path(report.model, obs)
    rows = _state_rows(
        "BW", report.model.chain, stationary_distribution(report.model.chain), warnings,
        spacing_m=spacing, per_state={**per_state, "mean_run_m": mean_run_lengths(bw_path) * spacing},
        error_share=error_of(bw_path),
    )

    minimum_m = config.get("min_state_duration_m")
    classifiers = {}
    for span in config.get("baseline_spans", [1, 10]):
        method = f"T{span}"
        classifier = ThresholdClassifier.from_mixture(mixture.weights, mixture.components, filter_span=span)
        path = classify(classifier, obs)
        if minimum_m is not None:
            path = merge_short_runs(path, max(1, math.ceil(minimum_m / spacing - 1e-9)))
        estimate = estimate_from_labels(path, m)
        if estimate.unvisited:
            _warn(warnings, f"{method}: states {list(estimate.unvisited)} never left, rows set uniform.")
        rows.extend(_state_rows(
            method, estimate.chain, estimate.chain.initial_probabilities, warnings,
            spacing_m=spacing, per_state={**per_state, "mean_run_m": mean_run_lengths(path) * spacing},
            error_share=error_of(path),
        ))
        classifiers[method] = {"thresholds": classifier.thresholds, "state_order": classifier.state_order}

    summary = {
        "trace_id": stage.trace.trace_id,
        "n_raw": len(stage.trace),
        "n": len(obs),
        "spacing_m": spacing,
        "mixture": mixture.to_dict(),
        "objective": stage.objective,
        "fit": report.to_dict(),
        "classifiers": classifiers,
        "min_state_duration_m": minimum_m,
        "true_model": (
            HmmModel(chain=stage.true_chain, emissions=stage.true_emissions).to_dict()
            if stage.true_chain is not None else None
        ),
    }
    artifacts = {"density": _density_frame(stage.target, mixture)}

    return _result(config, rows, summary, warnings, started, artifacts)


RUNNERS = {
    "simulate": run_simulate,
    "fit-bw": run_fit_bw,
    "baseline": run_baseline,
    "sweep": run_sweep,
    "curve-fit": run_curve_fit,
    "pipeline": run_pipeline,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[config.mode](config)
