"""Model parameters and conditional log-return moments.

The asset follows a mixed fractional Brownian motion (one Brownian and one
independent fractional component, both scaled by ``sigma``) with compound
Poisson log-normal jumps.  Conditional on the number of jumps in a window the
log-return is Gaussian; every closed-form price in the package is a
Poisson-weighted sum of Gaussian expectations built from the moments here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Tuple, Union

import numpy as np

from .errors import DegenerateModelError

ArrayLike = Union[float, int, np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """Risk-neutral parameters of the jump mixed-fBm model.

    ``lam`` is the jump intensity (``lambda`` is reserved in Python), ``k`` the
    mean proportional jump ``E[J - 1]`` and ``sigma_j`` the standard deviation
    of ``ln J``.  ``q`` only shifts the drift; discounting always uses ``r``.
    """

    r: float
    sigma: float
    hurst: float
    lam: float = 0.0
    k: float = 0.0
    sigma_j: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if not self.lam >= 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.sigma_j >= 0.0:
            raise ValueError(f"sigma_j must be >= 0, got {self.sigma_j}")
        if not self.k > -1.0:
            raise ValueError(f"k must be > -1, got {self.k}")
        for name in ("r", "q"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def lambda_prime(self) -> float:
        """Jump intensity under the share measure, ``lam * (1 + k)``."""
        return self.lam * (1.0 + self.k)

    @property
    def series_intensity(self) -> float:
        """Rate of the Poisson series: ``lambda_prime``, or 0 when every jump is ``J = 1``."""
        if self.k == 0.0 and self.sigma_j == 0.0:
            return 0.0
        return self.lambda_prime

    @property
    def mu_j(self) -> float:
        """Mean of ``ln J``."""
        return math.log1p(self.k) - 0.5 * self.sigma_j**2

    def replace(self, **changes) -> "ModelParams":
        fields = dict(
            r=self.r, sigma=self.sigma, hurst=self.hurst, lam=self.lam,
            k=self.k, sigma_j=self.sigma_j, q=self.q,
        )
        fields.update(changes)
        return ModelParams(**fields)


@dataclass(frozen=True)
class TimeWindow:
    t_start: float
    t_end: float

    def __post_init__(self):
        if not 0.0 <= self.t_start < self.t_end:
            raise ValueError(
                f"need 0 <= t_start < t_end, got [{self.t_start}, {self.t_end}]"
            )

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class ConditionalMoments:
    """Mean and variance of ``ln(S_end / S_start)`` given the jump count.

    Fields are arrays when the moments were requested for an array of counts.
    """

    mean: ArrayLike
    variance: ArrayLike

    @property
    def std(self) -> ArrayLike:
        return np.sqrt(self.variance)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for Poisson-weighted series."""

    tail_tolerance: float = 1e-12
    max_terms: int = 170

    def __post_init__(self):
        if not 0.0 < self.tail_tolerance < 1.0:
            raise ValueError("tail_tolerance must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def split(self, parts: int) -> "SeriesControl":
        """Same cap, tolerance shared evenly over ``parts`` Poisson dimensions."""
        return SeriesControl(self.tail_tolerance / parts, self.max_terms)


def diffusion_variance(params: ModelParams, t_start: float, t_end: float) -> float:
    """Variance contributed by the Brownian and fractional parts on a window."""
    h2 = 2.0 * params.hurst
    s2 = params.sigma**2
    return s2 * (t_end - t_start) + s2 * (t_end**h2 - t_start**h2)


def conditional_moments(
    params: ModelParams, window: TimeWindow, n_jumps: ArrayLike
) -> ConditionalMoments:
    """Conditional mean and variance of the log-return over ``window``."""
    n = np.asarray(n_jumps)
    if np.any(n < 0):
        raise ValueError("n_jumps must be >= 0")
    dt = window.length
    diff_var = diffusion_variance(params, window.t_start, window.t_end)
    drift = (params.r - params.q - params.lam * params.k) * dt
    mean = drift - 0.5 * diff_var + n * params.mu_j
    variance = diff_var + n * params.sigma_j**2
    if np.ndim(mean) == 0:
        return ConditionalMoments(float(mean), float(variance))
    return ConditionalMoments(mean, variance)


def log_return_correlation(
    params: ModelParams,
    t0: float,
    t1: float,
    t2: float,
    n1: ArrayLike,
    m: ArrayLike,
) -> ArrayLike:
    """Correlation of the log-returns over ``[t0, t1]`` and ``[t0, t2]``.

    The covariance is the variance of the shorter, nested log-return given
    ``n1`` jumps on ``[t0, t1]`` and ``m`` jumps on ``[t0, t2]``.  This is exact
    for the Brownian and jump parts and matches the window variances used
    throughout the pricing formulas.
    """
    if not t0 < t1 <= t2:
        raise ValueError(f"need t0 < t1 <= t2, got {t0}, {t1}, {t2}")
    if np.any(np.asarray(m) < np.asarray(n1)):
        raise ValueError("m must be >= n1")
    v1 = conditional_moments(params, TimeWindow(t0, t1), n1).variance
    v2 = conditional_moments(params, TimeWindow(t0, t2), m).variance
    if np.any(np.asarray(v2) <= 0.0):
        raise DegenerateModelError(
            "zero log-return variance on the longer window; correlation undefined"
        )
    rho = np.sqrt(np.asarray(v1) / np.asarray(v2))
    return float(rho) if np.ndim(rho) == 0 else rho


def jump_discount(params: ModelParams, dt: float, n_jumps: ArrayLike) -> ArrayLike:
    """Discount factor ``exp(-r_n dt)`` paired with share-measure Poisson weights.

    ``r_n = r - lam*k + n ln(1+k)/dt``.  Multiplying by the ``lam(1+k)`` Poisson
    weight gives back the ``lam`` weight times ``exp(-r dt)``.
    """
    return np.exp(-params.r * dt + params.lam * params.k * dt
                  - np.asarray(n_jumps) * math.log1p(params.k))


@dataclass(frozen=True)
class PoissonWeights:
    """Truncated Poisson probabilities ``P(N = n)`` for ``n = 0..len-1``."""

    weights: np.ndarray
    shortfall: float
    capped: bool

    @property
    def counts(self) -> np.ndarray:
        return np.arange(len(self.weights))

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self) -> Iterator[Tuple[int, float]]:
        return iter(zip(range(len(self.weights)), self.weights.tolist()))


def poisson_weights(rate_times_dt: float, control: SeriesControl = SeriesControl()) -> PoissonWeights:
    """Poisson probabilities by the ratio recurrence, truncated at the tail tolerance.

    Stops at the first ``N`` whose cumulative mass reaches
    ``1 - control.tail_tolerance``; if ``control.max_terms`` is hit first the
    result is flagged as ``capped`` but still returned.
    """
    x = float(rate_times_dt)
    if not x >= 0.0 or not math.isfinite(x):
        raise ValueError(f"rate_times_dt must be finite and >= 0, got {rate_times_dt}")
    if x == 0.0:
        return PoissonWeights(np.array([1.0]), 0.0, False)
    target = 1.0 - control.tail_tolerance
    w = math.exp(-x)
    weights = [w]
    total = w
    n = 0
    while total < target and len(weights) < control.max_terms:
        w = w * x / (n + 1)
        n += 1
        weights.append(w)
        total += w
    shortfall = max(0.0, 1.0 - math.fsum(weights))
    capped = total < target
    return PoissonWeights(np.array(weights), shortfall, capped)
