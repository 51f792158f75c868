"""
Per-state amplitude densities of the land mobile satellite channel.

Four families are supported: Gaussian (synthetic test densities), Rayleigh
(blockage), Rice (direct line of sight) and lognormal (shadowing). Every
density is evaluated in the log domain first; `pdf` is derived from
`log_pdf` so both stay consistent and the log form never underflows.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Optional, Sequence, Tuple, Type, Union

import numpy as np
from scipy import special, stats

from lmsc_hmm.src.common.exceptions import InvalidInputError

Amplitude = Union[float, np.ndarray]

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Upper-tail probability of a standard normal at 10 sigma.
TEN_SIGMA_TAIL = float(stats.norm.sf(10.0))


def _as_amplitudes(r: Amplitude) -> Tuple[np.ndarray, bool]:
    values = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"Amplitude must be finite, got {r!r}.")
    return values, values.ndim == 0


def _unwrap(values: np.ndarray, scalar: bool) -> Amplitude:
    return float(values) if scalar else values


def _check_scale(name: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise InvalidInputError(f"Parameter '{name}' must be finite and strictly positive, got {value}.")


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidInputError(f"Parameter '{name}' must be finite, got {value}.")


class EmissionDistribution(ABC):
    """
    Base class of the emission density families.

    Subclasses are frozen dataclasses; `family` is the tag used in JSON
    configs and `param_names` fixes the order of `params`.
    """
    family: ClassVar[str]
    param_names: ClassVar[Tuple[str, ...]]

    @abstractmethod
    def _log_pdf(self, r: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _sample(self, rng: np.random.Generator, size) -> np.ndarray:
        ...

    @abstractmethod
    def frozen(self):
        """Returns the equivalent frozen `scipy.stats` distribution."""

    @abstractmethod
    def bounds(self) -> Tuple[float, float]:
        """Returns the 10-sigma-equivalent extent of the density."""

    def log_pdf(self, r: Amplitude) -> Amplitude:
        """
        Evaluates ln f(r) directly in the log domain.

        Args:
            r (Amplitude): Amplitude or array of amplitudes, finite.

        Returns:
            Amplitude: Log-density, -inf outside the support.

        Raises:
            InvalidInputError: If any amplitude is not finite.
        """
        values, scalar = _as_amplitudes(r)
        with np.errstate(divide="ignore"):
            return _unwrap(self._log_pdf(values), scalar)

    def pdf(self, r: Amplitude) -> Amplitude:
        """
        Evaluates f(r); exactly 0 outside the support.
        """
        values, scalar = _as_amplitudes(r)
        with np.errstate(divide="ignore"):
            return _unwrap(np.exp(self._log_pdf(values)), scalar)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> Amplitude:
        """
        Draws amplitudes with an exact sampler, deterministic for a seeded `rng`.
        """
        draws = self._sample(rng, size)
        return float(draws) if size is None else draws

    def cdf(self, r: Amplitude) -> Amplitude:
        values, scalar = _as_amplitudes(r)
        return _unwrap(self.frozen().cdf(values), scalar)

    def ppf(self, q: Amplitude) -> Amplitude:
        values = np.asarray(q, dtype=float)
        return _unwrap(self.frozen().ppf(values), values.ndim == 0)

    def mean(self) -> float:
        return float(self.frozen().mean())

    @property
    def params(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.param_names)

    def with_params(self, values: Sequence[float]) -> "EmissionDistribution":
        """
        Builds a distribution of the same family from a parameter vector.

        Raises:
            InvalidInputError: If the values leave the parameter domain.
        """
        if len(values) != len(self.param_names):
            raise InvalidInputError(
                f"{self.family} takes {len(self.param_names)} parameters, got {len(values)}."
            )
        return type(self)(*(float(v) for v in values))

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.family, **{name: getattr(self, name) for name in self.param_names}}


@dataclass(frozen=True)
class Gaussian(EmissionDistribution):
    mu: float
    sigma: float

    family: ClassVar[str] = "gaussian"
    param_names: ClassVar[Tuple[str, ...]] = ("mu", "sigma")

    def __post_init__(self):
        _check_finite("mu", self.mu)
        _check_scale("sigma", self.sigma)

    def _log_pdf(self, r):
        z = (r - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - LOG_SQRT_2PI

    def _sample(self, rng, size):
        return self.mu + self.sigma * rng.standard_normal(size)

    def frozen(self):
        return stats.norm(loc=self.mu, scale=self.sigma)

    def bounds(self):
        return self.mu - 10.0 * self.sigma, self.mu + 10.0 * self.sigma

    def mean(self):
        return self.mu


@dataclass(frozen=True)
class Rayleigh(EmissionDistribution):
    sigma: float

    family: ClassVar[str] = "rayleigh"
    param_names: ClassVar[Tuple[str, ...]] = ("sigma",)

    def __post_init__(self):
        _check_scale("sigma", self.sigma)

    def _log_pdf(self, r):
        s2 = self.sigma * self.sigma
        inside = r > 0
        safe = np.where(inside, r, 1.0)
        values = np.log(safe) - math.log(s2) - safe * safe / (2.0 * s2)
        return np.where(inside, values, -np.inf)

    def _sample(self, rng, size):
        # inverse CDF
        u = rng.random(size)
        return self.sigma * np.sqrt(-2.0 * np.log1p(-u))

    def frozen(self):
        return stats.rayleigh(scale=self.sigma)

    def bounds(self):
        return 0.0, self.sigma * math.sqrt(-2.0 * math.log(TEN_SIGMA_TAIL))

    def mean(self):
        return self.sigma * math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class Rice(EmissionDistribution):
    """
    Rice density with line-of-sight amplitude `nu` and scatter scale `sigma`.

    The Rician K-factor is nu**2 / (2 * sigma**2); with nu = 0 the density
    is Rayleigh with the same sigma.
    """
    nu: float
    sigma: float

    family: ClassVar[str] = "rice"
    param_names: ClassVar[Tuple[str, ...]] = ("nu", "sigma")

    def __post_init__(self):
        _check_finite("nu", self.nu)
        if self.nu < 0:
            raise InvalidInputError(f"Parameter 'nu' must be non-negative, got {self.nu}.")
        _check_scale("sigma", self.sigma)

    def _log_pdf(self, r):
        s2 = self.sigma * self.sigma
        inside = r > 0
        safe = np.where(inside, r, 1.0)
        x = safe * self.nu / s2
        # ln I0(x) = ln(i0e(x)) + x, finite for any x
        log_bessel = np.log(special.i0e(x)) + x
        values = (
            np.log(safe) - math.log(s2) - (safe * safe + self.nu * self.nu) / (2.0 * s2) + log_bessel
        )
        return np.where(inside, values, -np.inf)

    def _sample(self, rng, size):
        x = rng.standard_normal(size)
        y = rng.standard_normal(size)
        return np.sqrt((self.nu + self.sigma * x) ** 2 + (self.sigma * y) ** 2)

    def frozen(self):
        return stats.rice(b=self.nu / self.sigma, scale=self.sigma)

    def bounds(self):
        return max(0.0, self.nu - 10.0 * self.sigma), self.nu + 10.0 * self.sigma


@dataclass(frozen=True)
class Lognormal(EmissionDistribution):
    """
    Lognormal density: ln r is Gaussian with mean `mu_log` and deviation `sigma_log`.
    """
    mu_log: float
    sigma_log: float

    family: ClassVar[str] = "lognormal"
    param_names: ClassVar[Tuple[str, ...]] = ("mu_log", "sigma_log")

    def __post_init__(self):
        _check_finite("mu_log", self.mu_log)
        _check_scale("sigma_log", self.sigma_log)

    def _log_pdf(self, r):
        inside = r > 0
        log_r = np.log(np.where(inside, r, 1.0))
        z = (log_r - self.mu_log) / self.sigma_log
        values = -log_r - math.log(self.sigma_log) - LOG_SQRT_2PI - 0.5 * z * z
        return np.where(inside, values, -np.inf)

    def _sample(self, rng, size):
        return np.exp(self.mu_log + self.sigma_log * rng.standard_normal(size))

    def frozen(self):
        return stats.lognorm(s=self.sigma_log, scale=math.exp(self.mu_log))

    def bounds(self):
        return math.exp(self.mu_log - 10.0 * self.sigma_log), math.exp(self.mu_log + 10.0 * self.sigma_log)

    def mean(self):
        return math.exp(self.mu_log + 0.5 * self.sigma_log ** 2)


FAMILIES: Dict[str, Type[EmissionDistribution]] = {
    cls.family: cls for cls in (Gaussian, Rayleigh, Rice, Lognormal)
}


def distribution_from_dict(spec: Dict[str, Any]) -> EmissionDistribution:
    """
    Builds a distribution from its JSON literal, e.g. {"type": "gaussian", "mu": 1.0, "sigma": 0.2}.

    Raises:
        InvalidInputError: If the family is unknown or a parameter is missing.
    """
    family = str(spec.get("type", "")).lower()
    if family not in FAMILIES:
        raise InvalidInputError(f"Unknown distribution type '{spec.get('type')}'. Expected one of {sorted(FAMILIES)}.")

    cls = FAMILIES[family]
    missing = [name for name in cls.param_names if name not in spec]
    if missing:
        raise InvalidInputError(f"Distribution '{family}' is missing parameters: {missing}")

    return cls(*(float(spec[name]) for name in cls.param_names))
