"""
Simulated-annealing curve fit of a fixed-family mixture to a histogram density.

The objective is the mean squared error between the mixture density and the
empirical density at the bin centers. Proposals perturb every parameter
with a Gaussian step and the weights on the simplex (perturb, then
renormalize); acceptance is Metropolis with geometric cooling.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from lmsc_hmm.src.common.exceptions import (FitFailedError, InvalidInputError,
                                            NumericalError)
from lmsc_hmm.src.common.seeds import spawn_seeds
from lmsc_hmm.src.distributions.families import (FAMILIES,
                                                 EmissionDistribution)
from lmsc_hmm.src.fitting.empirical import EmpiricalPdf
from lmsc_hmm.src.fitting.mixture import MixtureModel, normalized

log = logging.getLogger(__name__)

# Parameters expressed on the amplitude axis scale with the histogram span.
AMPLITUDE_PARAMS = ("mu", "sigma", "nu")

# Rough amplitude ranking of the families, lowest first; used to spread the
# initial component locations (blockage < shadowing < line of sight).
FAMILY_RANK = {"rayleigh": 0, "lognormal": 1, "gaussian": 1, "rice": 2}


@dataclass(frozen=True)
class SaConfig:
    """
    Annealing schedule and proposal settings.

    Attributes:
        initial_temperature (Optional[float]): Start temperature; None sets it to the
            standard deviation of the objective over `n_probes` random proposals.
        cooling_factor (float): Geometric cooling T <- cooling_factor * T, in (0, 1).
        steps_per_temperature (int): Metropolis steps at each temperature level.
        min_temperature (Optional[float]): Stop temperature; None means
            `min_temperature_ratio` times the initial temperature.
        min_temperature_ratio (float): Ratio used when `min_temperature` is None.
        proposal_scales (Dict[str, float]): Step size per parameter name, plus "weight".
        seed (int): Seed of the proposal stream.
        retry_budget (int): Consecutive out-of-domain proposals tolerated before failing.
        min_step_fraction (float): Floor of the step-size multiplier sqrt(T / T0).
        n_probes (int): Proposals used to set the automatic initial temperature.
        progress (bool): Show a tqdm bar over the temperature levels.
    """
    initial_temperature: Optional[float] = None
    cooling_factor: float = 0.95
    steps_per_temperature: int = 200
    min_temperature: Optional[float] = None
    min_temperature_ratio: float = 1e-6
    proposal_scales: Dict[str, float] = field(default_factory=dict)
    seed: int = 0
    retry_budget: int = 100
    min_step_fraction: float = 0.05
    n_probes: int = 100
    progress: bool = False

    def __post_init__(self):
        if not 0 < self.cooling_factor < 1:
            raise InvalidInputError(f"cooling_factor must lie in (0, 1), got {self.cooling_factor}.")
        if self.initial_temperature is not None and not self.initial_temperature > 0:
            raise InvalidInputError(f"initial_temperature must be positive, got {self.initial_temperature}.")
        if self.min_temperature is not None and not self.min_temperature > 0:
            raise InvalidInputError(f"min_temperature must be positive, got {self.min_temperature}.")
        if self.steps_per_temperature < 1 or self.retry_budget < 1:
            raise InvalidInputError("steps_per_temperature and retry_budget must be at least 1.")

    @classmethod
    def from_dict(cls, spec: Dict) -> "SaConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(spec) - known
        if unknown:
            raise InvalidInputError(f"Unknown annealing settings: {sorted(unknown)}")
        return cls(**spec)


@dataclass
class _State:
    weights: np.ndarray
    components: Tuple[EmissionDistribution, ...]
    objective: float

    def mixture(self) -> MixtureModel:
        return MixtureModel(weights=self.weights, components=self.components)


def objective(mix: MixtureModel, target: EmpiricalPdf) -> float:
    """
    Mean squared error between the mixture and the histogram at bin centers.
    """
    residual = np.asarray(mix.pdf(target.centers)) - target.density
    return float(np.mean(residual * residual))


def initial_guess(target: EmpiricalPdf, families: Sequence[str]) -> MixtureModel:
    """
    Family-agnostic starting mixture.

    Weights are uniform and component locations are spread over the
    empirical quantiles (k + 1/2) / K, assigned in family-rank order.
    """
    k_total = len(families)
    centers = target.centers
    mass = target.density * target.widths
    mean = float(np.sum(mass * centers))
    spread = math.sqrt(max(float(np.sum(mass * (centers - mean) ** 2)), 1e-12)) / k_total
    floor = max(float(target.bin_edges[0]), 0.0) + 1e-3 * (target.bin_edges[-1] - target.bin_edges[0])

    ranked = sorted(range(k_total), key=lambda i: FAMILY_RANK.get(families[i], 1))
    locations = np.empty(k_total)
    for slot, index in enumerate(ranked):
        locations[index] = float(target.quantile((slot + 0.5) / k_total))

    components = []
    for family, location in zip(families, locations):
        positive = max(location, floor)
        if family == "gaussian":
            params = (location, spread)
        elif family == "rayleigh":
            params = (positive / math.sqrt(math.pi / 2.0),)
        elif family == "rice":
            params = (positive, spread)
        elif family == "lognormal":
            params = (math.log(positive), min(max(spread / positive, 0.05), 2.0))
        else:
            raise InvalidInputError(f"Unknown distribution family '{family}'.")
        components.append(FAMILIES[family](*params))

    return MixtureModel(weights=np.full(k_total, 1.0 / k_total), components=tuple(components))


def _default_scales(target: EmpiricalPdf, cfg: SaConfig) -> Dict[str, float]:
    span = float(target.bin_edges[-1] - target.bin_edges[0])
    scales = {name: 0.01 * span for name in AMPLITUDE_PARAMS}
    scales.update({"mu_log": 0.02, "sigma_log": 0.02, "weight": 0.02})
    scales.update(cfg.proposal_scales)
    return scales


def _propose(
        state: _State,
        scales: Dict[str, float],
        rng: np.random.Generator,
        target: EmpiricalPdf,
        retry_budget: int,
        step: float = 1.0,
) -> _State:
    for _ in range(retry_budget):
        weights = state.weights + step * scales["weight"] * rng.standard_normal(state.weights.size)
        steps = [
            [value + step * scales[name] * rng.standard_normal() for name, value in zip(c.param_names, c.params)]
            for c in state.components
        ]
        if np.any(weights <= 0):
            continue
        try:
            components = tuple(c.with_params(values) for c, values in zip(state.components, steps))
        except InvalidInputError:
            continue

        candidate = _State(weights=normalized(weights), components=components, objective=math.nan)
        candidate.objective = objective(candidate.mixture(), target)
        if math.isfinite(candidate.objective):
            return candidate

    raise FitFailedError(f"No admissible proposal within {retry_budget} attempts.")


def fit_mixture_sa(
        target: EmpiricalPdf,
        families: Sequence[str],
        cfg: SaConfig = SaConfig(),
        initial: Optional[MixtureModel] = None,
) -> Tuple[MixtureModel, float]:
    """
    Fits a mixture of the given families to a histogram density by simulated annealing.

    Args:
        target (EmpiricalPdf): Density to match.
        families (Sequence[str]): Family tag of each component, fixed during the fit.
        cfg (SaConfig): Schedule and proposal settings; the run is deterministic under `cfg.seed`.
        initial (Optional[MixtureModel]): Starting mixture, by default `initial_guess`.

    Returns:
        Tuple[MixtureModel, float]: Best mixture visited and its objective value.

    Raises:
        InvalidInputError: If no family is given or they do not match `initial`.
        FitFailedError: If the objective is not finite at the start or proposals
            keep leaving the parameter domain.
    """
    families = tuple(f.lower() for f in families)
    if not families:
        raise InvalidInputError("Need at least one distribution family to fit.")

    start = initial or initial_guess(target, families)
    if start.families != families:
        raise InvalidInputError(f"Initial mixture families {start.families} differ from {families}.")

    rng = np.random.default_rng(cfg.seed)
    scales = _default_scales(target, cfg)

    current = _State(weights=np.array(start.weights), components=start.components, objective=math.nan)
    current.objective = objective(start, target)
    if not math.isfinite(current.objective):
        raise FitFailedError("Objective is not finite at the initial mixture.")
    best = current

    temperature = cfg.initial_temperature
    if temperature is None:
        probes = [_propose(current, scales, rng, target, cfg.retry_budget).objective for _ in range(cfg.n_probes)]
        temperature = float(np.std(probes))
        if not temperature > 0:
            temperature = max(current.objective, 1e-12)
    min_temperature = cfg.min_temperature or temperature * cfg.min_temperature_ratio
    levels = 1 + max(0, math.ceil(math.log(min_temperature / temperature) / math.log(cfg.cooling_factor)))

    log.info(
        f"Annealing {'+'.join(families)} from T={temperature:.3e} to T={min_temperature:.3e} "
        f"over {levels} levels (initial objective {current.objective:.6e})."
    )

    start_temperature = temperature
    accepted = 0
    for level in tqdm(range(levels), desc="Annealing", unit="level", disable=not cfg.progress):
        step = max(cfg.min_step_fraction, math.sqrt(temperature / start_temperature))
        for _ in range(cfg.steps_per_temperature):
            candidate = _propose(current, scales, rng, target, cfg.retry_budget, step)
            delta = candidate.objective - current.objective
            if delta <= 0 or rng.random() < math.exp(-delta / temperature):
                current = candidate
                accepted += 1
                if current.objective < best.objective:
                    best = current
        log.debug(f"Level {level}: T={temperature:.3e}, current={current.objective:.6e}, best={best.objective:.6e}")
        temperature *= cfg.cooling_factor

    log.info(f"Annealing done: best objective {best.objective:.6e}, {accepted} accepted moves.")

    return best.mixture(), best.objective


def _restart_job(args) -> Tuple[MixtureModel, float]:
    target, families, cfg, initial = args
    return fit_mixture_sa(target, families, cfg, initial)


def fit_mixture_sa_restarts(
        target: EmpiricalPdf,
        families: Sequence[str],
        cfg: SaConfig = SaConfig(),
        restarts: int = 1,
        workers: int = 1,
        initial: Optional[MixtureModel] = None,
) -> Tuple[MixtureModel, float]:
    """
    Runs independent annealing restarts and keeps the best objective.

    Restart seeds derive from `cfg.seed`, so the result does not depend on
    `workers`. Ties go to the earliest restart.
    """
    if restarts < 1:
        raise InvalidInputError(f"restarts must be at least 1, got {restarts}.")
    if restarts == 1:
        return fit_mixture_sa(target, families, cfg, initial)

    jobs = [(target, families, replace(cfg, seed=s, progress=False), initial) for s in spawn_seeds(cfg.seed, restarts)]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_restart_job, jobs))
    else:
        outcomes = [_restart_job(job) for job in tqdm(jobs, desc="Restarts", unit="fit", disable=not cfg.progress)]

    best_index = min(range(restarts), key=lambda i: (outcomes[i][1], i))
    log.info(f"Best of {restarts} restarts: #{best_index + 1} with objective {outcomes[best_index][1]:.6e}")

    if not math.isfinite(outcomes[best_index][1]):
        raise NumericalError("Every annealing restart ended with a non-finite objective.")

    return outcomes[best_index]
