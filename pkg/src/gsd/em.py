"""Two-component univariate Gaussian mixture fitting by EM.

The fit alternates posterior responsibilities (E-step) with
responsibility-weighted moment updates (M-step) until the relative change
in log-likelihood drops below a tolerance. Component variances are floored
at a small fraction of the sample variance; hitting the floor, or a
component proportion collapsing below 1e-3, marks the fit as non-converged
and stops it (downstream consumers discard non-converged fits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError, InvalidParameterError
from .gmm_core import GaussianClassParams

__all__ = [
    "EmConfig",
    "MixtureEstimate",
    "em_fit",
    "assign_components",
    "default_init",
]

_MIN_SAMPLES = 10
_MIN_PROPORTION = 1e-3
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class EmConfig:
    """Knobs of the EM loop.

    Attributes:
        max_iterations: hard cap on EM update steps.
        tolerance: relative log-likelihood change below which the fit stops.
        variance_floor: component variance floor, as a fraction of the
            sample variance of the input values.
    """

    max_iterations: int = 200
    tolerance: float = 1e-6
    variance_floor: float = 1e-9

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise InvalidParameterError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if not self.tolerance > 0.0:
            raise InvalidParameterError(f"tolerance must be > 0, got {self.tolerance}")
        if not self.variance_floor > 0.0:
            raise InvalidParameterError(
                f"variance_floor must be > 0, got {self.variance_floor}"
            )


@dataclass(frozen=True)
class MixtureEstimate:
    """Fitted two-component mixture.

    Component order follows the init pair; use :func:`assign_components` to
    map components back to class labels. ``log_likelihood_history`` records
    the total log-likelihood at the initial parameters and after every
    accepted update step; it is non-decreasing.
    """

    comp_a: GaussianClassParams
    comp_b: GaussianClassParams
    log_likelihood: float
    iterations: int
    converged: bool
    log_likelihood_history: tuple[float, ...]


def _log_weighted_densities(
    x: np.ndarray, mu: np.ndarray, var: np.ndarray, p: np.ndarray
) -> np.ndarray:
    """(2, n) array of log(p_k * phi(x; mu_k, var_k))."""
    d = x[None, :] - mu[:, None]
    return (
        np.log(p)[:, None]
        - 0.5 * np.log(var)[:, None]
        - 0.5 * _LOG_2PI
        - 0.5 * d * d / var[:, None]
    )


def _log_likelihood(lw: np.ndarray) -> float:
    m = lw.max(axis=0)
    return float(np.sum(m + np.log(np.exp(lw - m).sum(axis=0))))


def em_fit(
    values, init: tuple[GaussianClassParams, GaussianClassParams],
    config: EmConfig = EmConfig(),
) -> MixtureEstimate:
    """Fit a two-component Gaussian mixture to ``values`` starting at ``init``.

    Raises:
        InsufficientDataError: fewer than 10 values.
        DegenerateDataError: all values identical (no mixture identifiable).
        InvalidParameterError: non-finite values.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < _MIN_SAMPLES:
        raise InsufficientDataError(
            f"em_fit needs at least {_MIN_SAMPLES} values, got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("em_fit input contains non-finite values")
    sample_var = float(x.var())
    if sample_var == 0.0:
        raise DegenerateDataError("all values identical; no mixture is identifiable")
    floor_var = config.variance_floor * sample_var

    ca, cb = init
    mu = np.array([ca.mean, cb.mean])
    var = np.array([ca.std_dev**2, cb.std_dev**2])
    p = np.array([ca.proportion, cb.proportion])
    p = p / p.sum()

    lw = _log_weighted_densities(x, mu, var, p)
    ll_prev = _log_likelihood(lw)
    history = [ll_prev]
    converged = False
    iterations = 0

    for it in range(1, config.max_iterations + 1):
        iterations = it
        # E-step: posterior responsibilities from the current parameters.
        m = lw.max(axis=0)
        w = np.exp(lw - m)
        resp = w / w.sum(axis=0)

        # M-step: responsibility-weighted moments.
        nk = resp.sum(axis=1)
        p_new = nk / x.size
        if p_new.min() < _MIN_PROPORTION:
            break  # a component vanished: non-converged, keep last valid params
        mu_new = (resp * x).sum(axis=1) / nk
        d = x[None, :] - mu_new[:, None]
        var_new = (resp * d * d).sum(axis=1) / nk
        if var_new.min() < floor_var:
            break  # component collapsing onto a point: non-converged

        mu, var, p = mu_new, var_new, p_new
        lw = _log_weighted_densities(x, mu, var, p)
        ll = _log_likelihood(lw)
        history.append(ll)
        if abs(ll - ll_prev) < config.tolerance * max(abs(ll_prev), 1e-12):
            converged = True
            ll_prev = ll
            break
        ll_prev = ll

    comp_a = GaussianClassParams(
        mean=float(mu[0]), std_dev=float(np.sqrt(var[0])), proportion=float(p[0])
    )
    comp_b = GaussianClassParams(
        mean=float(mu[1]), std_dev=float(np.sqrt(var[1])), proportion=float(p[1])
    )
    return MixtureEstimate(
        comp_a=comp_a,
        comp_b=comp_b,
        log_likelihood=history[-1],
        iterations=iterations,
        converged=converged,
        log_likelihood_history=tuple(history),
    )


def assign_components(
    estimate: MixtureEstimate,
    train0: GaussianClassParams,
    train1: GaussianClassParams,
) -> tuple[GaussianClassParams, GaussianClassParams]:
    """Map the two fitted components to class labels by joint nearest means.

    Both pairings are scored by total |estimated mean - training mean| and
    the cheaper one wins; ties keep the identity pairing. Returns the pair
    in (class 0, class 1) order.
    """
    a, b = estimate.comp_a, estimate.comp_b
    identity = abs(a.mean - train0.mean) + abs(b.mean - train1.mean)
    swapped = abs(a.mean - train1.mean) + abs(b.mean - train0.mean)
    if swapped < identity:
        return b, a
    return a, b


def default_init(values) -> tuple[GaussianClassParams, GaussianClassParams]:
    """Deterministic data-driven cold start: moments of the median split.

    The sample is cut at its median; each half's mean and standard
    deviation seed one component, with equal starting proportions. The init
    is affine-equivariant and needs no randomness, which keeps downstream
    fits reproducible.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < _MIN_SAMPLES:
        raise InsufficientDataError(
            f"default_init needs at least {_MIN_SAMPLES} values, got {x.size}"
        )
    sd = float(x.std())
    if sd == 0.0:
        raise DegenerateDataError("all values identical; no mixture is identifiable")
    med = float(np.median(x))
    lower = x[x <= med]
    upper = x[x > med]
    if upper.size == 0:  # heavy ties at the median
        lower = x[x < med]
        upper = x[x >= med]
    floor = max(1e-3 * sd, 1e-12)
    return (
        GaussianClassParams(
            mean=float(lower.mean()), std_dev=max(float(lower.std()), floor),
            proportion=0.5,
        ),
        GaussianClassParams(
            mean=float(upper.mean()), std_dev=max(float(upper.std()), floor),
            proportion=0.5,
        ),
    )
