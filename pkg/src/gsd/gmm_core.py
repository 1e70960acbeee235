"""Closed-form machinery for a pair of weighted univariate Gaussians.

A binary decision stump over one numeric feature models each class c as
N(mean_c, std_dev_c) weighted by the class prior proportion_c. The decision
boundary is a point where the weighted densities cross,

    p0 * phi(x; mu0, s0) = p1 * phi(x; mu1, s1),

which in log form is the quadratic a*x^2 + b*x + c = 0 with

    a = 1/(2*s0^2) - 1/(2*s1^2)
    b = mu1/s1^2 - mu0/s0^2
    c = mu0^2/(2*s0^2) - mu1^2/(2*s1^2) - ln(p0*s1 / (p1*s0))

The misclassification mass of a boundary alpha is

    E(alpha) = min(p0*F0(alpha), p1*F1(alpha))
             + min(p0*(1 - F0(alpha)), p1*(1 - F1(alpha)))

with F_c the class CDF. Among the candidate crossings, the boundary kept is
the one with minimal E. When the weighted densities never cross (one class
encompasses the other), there is no usable boundary and the feature is
dropped by callers.

All functions here are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError

__all__ = [
    "GaussianClassParams",
    "BoundaryResult",
    "normal_cdf",
    "misclassification_area",
    "boundary_candidates",
    "select_boundary",
]

# Two candidate boundaries with misclassification mass equal within this
# tolerance count as a tie; the smaller one is kept for determinism.
_TIE_EPS = 1e-12

# |a| below 1e-12 * (1/s0^2 + 1/s1^2) is treated as the equal-variance case,
# where the quadratic degenerates to the linear equation b*x + c = 0.
_DEGENERACY_SCALE = 1e-12


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class GaussianClassParams:
    """Per-feature, per-class Gaussian parameters plus the class prior.

    Attributes:
        mean: class-conditional mean, in feature units.
        std_dev: class-conditional standard deviation, > 0.
        proportion: class prior in (0, 1); the two classes of a pair sum to 1.
    """

    mean: float
    std_dev: float
    proportion: float

    def __post_init__(self) -> None:
        _require_finite("mean", self.mean)
        _require_finite("std_dev", self.std_dev)
        _require_finite("proportion", self.proportion)
        if self.std_dev <= 0.0:
            raise InvalidParameterError(f"std_dev must be > 0, got {self.std_dev}")
        if not 0.0 < self.proportion < 1.0:
            raise InvalidParameterError(
                f"proportion must be in (0, 1), got {self.proportion}"
            )


@dataclass(frozen=True)
class BoundaryResult:
    """A selected decision boundary and its misclassification mass.

    Attributes:
        alpha: boundary location, in feature units.
        error: misclassification mass in [0, min(p0, p1)].
        root_count: number of density crossings the boundary was chosen from (1 or 2).
    """

    alpha: float
    error: float
    root_count: int


def normal_cdf(x: float, mean: float, std_dev: float) -> float:
    """Cumulative distribution function of N(mean, std_dev^2) at x.

    Absolute error is within 1e-9 of the exact value over the whole real
    line; both tails are computed through erfc to avoid cancellation.
    """
    x = _require_finite("x", x)
    mean = _require_finite("mean", mean)
    std_dev = _require_finite("std_dev", std_dev)
    if std_dev <= 0.0:
        raise InvalidParameterError(f"std_dev must be > 0, got {std_dev}")
    z = (x - mean) / std_dev
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def misclassification_area(
    c0: GaussianClassParams, c1: GaussianClassParams, alpha: float
) -> float:
    """Probability mass assigned to the wrong class by the boundary alpha.

    E = min(p0*F0, p1*F1) + min(p0*(1-F0), p1*(1-F1)), evaluated at alpha.
    The result lies in [0, min(p0, p1)] for any alpha.
    """
    alpha = _require_finite("alpha", alpha)
    f0 = normal_cdf(alpha, c0.mean, c0.std_dev)
    f1 = normal_cdf(alpha, c1.mean, c1.std_dev)
    left = min(c0.proportion * f0, c1.proportion * f1)
    right = min(c0.proportion * (1.0 - f0), c1.proportion * (1.0 - f1))
    return left + right


def _quadratic_coefficients(
    c0: GaussianClassParams, c1: GaussianClassParams
) -> tuple[float, float, float]:
    v0 = c0.std_dev * c0.std_dev
    v1 = c1.std_dev * c1.std_dev
    a = 0.5 / v0 - 0.5 / v1
    b = c1.mean / v1 - c0.mean / v0
    c = (
        c0.mean * c0.mean / (2.0 * v0)
        - c1.mean * c1.mean / (2.0 * v1)
        - math.log((c0.proportion * c1.std_dev) / (c1.proportion * c0.std_dev))
    )
    return a, b, c


def boundary_candidates(
    c0: GaussianClassParams, c1: GaussianClassParams
) -> list[float]:
    """All real x where the weighted class densities are equal.

    Returns 0, 1 or 2 roots in ascending order. Equal variances reduce the
    quadratic to a linear equation (one root, or none when the weighted
    densities are parallel in log space); a negative discriminant means one
    weighted density encompasses the other and there is no crossing.
    Identically shaped classes yield no boundary.
    """
    a, b, c = _quadratic_coefficients(c0, c1)

    v0 = c0.std_dev * c0.std_dev
    v1 = c1.std_dev * c1.std_dev
    if abs(a) < _DEGENERACY_SCALE * (1.0 / v0 + 1.0 / v1):
        # Equal-variance branch: b*x + c = 0. b == 0 means the log-density
        # difference is constant: either identical shapes (c == 0 too) or a
        # pure prior offset; neither admits a crossing.
        if b == 0.0:
            return []
        return [-c / b]

    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    if disc == 0.0:
        return [-b / (2.0 * a)]
    # Numerically stable two-root form.
    sqrt_disc = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sqrt_disc, b))
    if q == 0.0:
        # b == 0 and c == 0: double root at the origin of the parabola.
        return [0.0]
    roots = sorted((q / a, c / q))
    return roots


def select_boundary(
    c0: GaussianClassParams, c1: GaussianClassParams
) -> BoundaryResult | None:
    """Boundary with minimal misclassification mass, or None when none exists.

    Candidates whose misclassification masses tie within 1e-12 are resolved
    toward the smaller alpha so that the choice is deterministic.
    """
    candidates = boundary_candidates(c0, c1)
    if not candidates:
        return None
    best_alpha = candidates[0]  # ascending, so ties keep the smaller root
    best_error = misclassification_area(c0, c1, best_alpha)
    for alpha in candidates[1:]:
        err = misclassification_area(c0, c1, alpha)
        if err < best_error - _TIE_EPS:
            best_alpha = alpha
            best_error = err
    return BoundaryResult(
        alpha=best_alpha, error=best_error, root_count=len(candidates)
    )
