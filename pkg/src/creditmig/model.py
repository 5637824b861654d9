"""Model constants, admissibility checks, and frame transformations.

The pricing problem lives in a moving log-price frame xi. The bond value u
is capped by the obstacle e^xi (default region), and the diffusion switches
between a low volatility sigma_h (high rating) and a high volatility sigma_l
(low rating) when the weighted value v = e^{-xi} u crosses the threshold
gamma. Everything here is pure and reentrant; instances are immutable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParameterError",
    "ModelParams",
    "ValidatedParams",
    "DerivedConstants",
    "validate_params",
    "derived_constants",
    "smoothed_heaviside",
    "sigma_eff",
    "u_to_v",
    "v_to_u",
]


class ParameterError(ValueError):
    """A model constant violates an admissibility constraint.

    ``constraint`` carries a short machine-readable name of the violated
    condition (e.g. ``"main_sigma"``), so callers can report it without
    parsing the message.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class ModelParams:
    """Financial constants of the bond model.

    The bond face value is fixed at 1, so all prices are per unit face.
    Rates are per unit time, volatilities per square-root time.
    """

    r: float        # risk-free rate
    delta: float    # credit discount rate
    sigma_h: float  # volatility in the high-rating regime
    sigma_l: float  # volatility in the low-rating regime
    gamma: float    # debt-to-asset threshold separating the rating regimes


# Parameters that passed validate_params; enforced by convention, not by the
# type system (validate_params returns the same immutable instance).
ValidatedParams = ModelParams


@dataclass(frozen=True)
class DerivedConstants:
    """Dimensionless regime constants and the moving-frame drift."""

    c_l: float  # 2 delta / sigma_l^2, below 1 for admissible parameters
    c_h: float  # 2 delta / sigma_h^2, above 1
    c: float    # frame drift r - delta


def validate_params(p: ModelParams) -> ValidatedParams:
    """Check the admissibility constraints and return the parameters.

    Raises ParameterError naming the first violated constraint:

    * ``r_positive`` / ``delta_positive``: rates must be positive
    * ``sigma_positive``: both volatilities must be positive
    * ``sigma_order``: sigma_h < sigma_l
    * ``gamma_range``: 0 < gamma < 1
    * ``main_sigma``: sigma_h^2 / 2 < delta < sigma_l^2 / 2 (strict; keeps
      both rating regimes reachable and c_l < 1 < c_h)
    """
    if not p.r > 0.0:
        raise ParameterError("r_positive", f"r must be positive, got {p.r}")
    if not p.delta > 0.0:
        raise ParameterError(
            "delta_positive", f"delta must be positive, got {p.delta}")
    if not (p.sigma_h > 0.0 and p.sigma_l > 0.0):
        raise ParameterError(
            "sigma_positive",
            f"volatilities must be positive, got sigma_h={p.sigma_h}, "
            f"sigma_l={p.sigma_l}")
    if not p.sigma_h < p.sigma_l:
        raise ParameterError(
            "sigma_order",
            f"need sigma_h < sigma_l, got sigma_h={p.sigma_h}, "
            f"sigma_l={p.sigma_l}")
    if not 0.0 < p.gamma < 1.0:
        raise ParameterError(
            "gamma_range", f"gamma must lie in (0, 1), got {p.gamma}")
    if not 0.5 * p.sigma_h**2 < p.delta < 0.5 * p.sigma_l**2:
        raise ParameterError(
            "main_sigma",
            f"need sigma_h^2/2 < delta < sigma_l^2/2, got "
            f"{0.5 * p.sigma_h**2:g} vs delta={p.delta:g} vs "
            f"{0.5 * p.sigma_l**2:g}")
    return p


def derived_constants(p: ValidatedParams) -> DerivedConstants:
    """Regime constants c_l = 2 delta / sigma_l^2, c_h = 2 delta / sigma_h^2
    and the frame drift c = r - delta."""
    return DerivedConstants(
        c_l=2.0 * p.delta / p.sigma_l**2,
        c_h=2.0 * p.delta / p.sigma_h**2,
        c=p.r - p.delta,
    )


def smoothed_heaviside(z, eps: float):
    """C^1 quintic ramp: 0 for z <= -eps, 1 for z >= 0.

    On (-eps, 0) the value is 6 w^5 + 15 w^4 + 10 w^3 + 1 with w = z / eps.
    This matches 0 and 1 at the endpoints with vanishing derivative and is
    non-decreasing throughout. Works elementwise on arrays.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    w = np.clip(np.asarray(z, dtype=float) / eps, -1.0, 0.0)
    h = ((6.0 * w + 15.0) * w + 10.0) * w**3 + 1.0
    if np.isscalar(z):
        return float(h)
    return h


def sigma_eff(u, xi, p: ValidatedParams, eps: float):
    """Effective volatility with the rating indicator smoothed over width eps.

    sigma_h + (sigma_l - sigma_h) * H_eps(u - gamma e^xi); always inside
    [sigma_h, sigma_l].
    """
    return p.sigma_h + (p.sigma_l - p.sigma_h) * smoothed_heaviside(
        u - p.gamma * np.exp(xi), eps)


def u_to_v(u, xi):
    """Weighted value v = e^{-xi} u."""
    return np.exp(-xi) * u


def v_to_u(v, xi):
    """Inverse of u_to_v: u = e^{xi} v."""
    return np.exp(xi) * v
