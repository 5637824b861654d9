"""Closed-form steady profile of the bond value in the moving frame.

The steady profile K(xi) equals 1 below the default boundary kappa_star,
follows a two-exponential branch up to the transit boundary eta_star where it
crosses gamma, and decays like e^{-xi} above. A single transcendental
equation fixes the boundary separation; everything else is explicit. The
time-dependent solution converges uniformly to this profile, which makes it
the reference for measuring solver error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    DerivedConstants,
    ModelParams,
    derived_constants,
    validate_params,
)

__all__ = [
    "TravelingWave",
    "psi",
    "psi_inverse",
    "build_traveling_wave",
    "tw_value",
    "tw_derivative",
    "tw_second_derivative",
    "tw_residual",
]

# Bracket growth limit for psi_inverse; psi drops below any gamma in (0, 1)
# long before this for admissible c_l.
_BRACKET_CAP = 1e6


def psi(x, c_l: float):
    """Decreasing two-exponential map with psi(0) = 1 and psi(x) -> 0.

    psi(x) = (-c_l e^{-x} + e^{-c_l x}) / (1 - c_l). Its inverse evaluated at
    gamma is the separation eta_star - kappa_star of the steady boundaries.
    Defined for x >= 0 only.
    """
    xarr = np.asarray(x, dtype=float)
    if np.any(xarr < 0.0):
        raise ValueError("psi is defined on x >= 0")
    out = (-c_l * np.exp(-xarr) + np.exp(-c_l * xarr)) / (1.0 - c_l)
    if np.isscalar(x):
        return float(out)
    return out


def psi_inverse(gamma: float, c_l: float, tol: float = 1e-12,
                max_iter: int = 200) -> float:
    """Invert psi by bisection; deterministic and unconditionally convergent.

    The bracket [0, X] grows geometrically from X = 1 until psi(X) < gamma;
    growth past the hard cap signals a gamma that is not numerically
    attainable. Bisection then halves the bracket until it is narrower than
    tol (or max_iter splits, whichever comes first).
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    hi = 1.0
    while psi(hi, c_l) >= gamma:
        hi *= 2.0
        if hi > _BRACKET_CAP:
            raise RuntimeError(
                f"psi bracket exceeded {_BRACKET_CAP:g}; gamma={gamma!r} is "
                "not attainable")
    lo = 0.0
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if psi(mid, c_l) > gamma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TravelingWave:
    """Steady profile and its free boundaries.

    K(xi) = 1 for xi <= kappa_star,
          = coef_c e^{-xi} + coef_d e^{-c_l xi}   on (kappa_star, eta_star),
          = e^{-xi} + coef_b e^{-c_h xi}          for xi > eta_star,
    continuous everywhere and C^1 on [kappa_star, inf).
    """

    kappa_star: float
    eta_star: float
    coef_b: float
    coef_c: float
    coef_d: float
    constants: DerivedConstants
    gamma: float

    @property
    def separation(self) -> float:
        """Boundary gap eta_star - kappa_star (the inverted psi at gamma)."""
        return self.eta_star - self.kappa_star


def build_traveling_wave(p: ModelParams, tol: float = 1e-12) -> TravelingWave:
    """Construct the steady profile for admissible parameters.

    Solves psi(x) = gamma for the boundary separation, places eta_star by its
    closed form, then kappa_star and the branch coefficients follow from the
    value/derivative matching at the two boundaries.
    """
    p = validate_params(p)
    cons = derived_constants(p)
    width = psi_inverse(p.gamma, cons.c_l, tol)
    eta_star = -math.log(
        p.gamma + math.exp(-cons.c_l * width) / (cons.c_h - 1.0))
    kappa_star = eta_star - width
    coef_b = (p.gamma - math.exp(-eta_star)) * math.exp(cons.c_h * eta_star)
    coef_c = -cons.c_l / (1.0 - cons.c_l) * math.exp(kappa_star)
    coef_d = math.exp(cons.c_l * kappa_star) / (1.0 - cons.c_l)
    return TravelingWave(
        kappa_star=kappa_star,
        eta_star=eta_star,
        coef_b=coef_b,
        coef_c=coef_c,
        coef_d=coef_d,
        constants=cons,
        gamma=p.gamma,
    )


# The evaluators below use branch-shifted exponentials (arguments relative to
# kappa_star / eta_star) so the boundary values 1 and gamma come out exact to
# round-off instead of as differences of large terms.

def _middle_terms(tw: TravelingWave, x):
    c_l = tw.constants.c_l
    e1 = np.exp(-(x - tw.kappa_star))
    e2 = np.exp(-c_l * (x - tw.kappa_star))
    return c_l, e1, e2


def _upper_tail(tw: TravelingWave, x):
    # coef_b e^{-c_h x} rewritten as (gamma - e^{-eta_star}) e^{-c_h (x - eta_star)}
    g = tw.gamma - math.exp(-tw.eta_star)
    return g * np.exp(-tw.constants.c_h * (x - tw.eta_star))


def tw_value(tw: TravelingWave, xi):
    """K(xi); continuous, K(kappa_star) = 1, K(eta_star) = gamma."""
    x = np.asarray(xi, dtype=float)
    c_l, e1, e2 = _middle_terms(tw, x)
    middle = (-c_l * e1 + e2) / (1.0 - c_l)
    upper = np.exp(-x) + _upper_tail(tw, x)
    out = np.where(x <= tw.kappa_star, 1.0,
                   np.where(x <= tw.eta_star, middle, upper))
    if np.isscalar(xi):
        return float(out)
    return out


def tw_derivative(tw: TravelingWave, xi):
    """dK/dxi; 0 for xi <= kappa_star (right limit at the contact point),
    the shared one-sided value at eta_star, and the upper-branch formula
    above."""
    x = np.asarray(xi, dtype=float)
    c_l, e1, e2 = _middle_terms(tw, x)
    middle = c_l / (1.0 - c_l) * (e1 - e2)
    upper = -np.exp(-x) - tw.constants.c_h * _upper_tail(tw, x)
    out = np.where(x <= tw.kappa_star, 0.0,
                   np.where(x <= tw.eta_star, middle, upper))
    if np.isscalar(xi):
        return float(out)
    return out


def tw_second_derivative(tw: TravelingWave, xi):
    """d^2K/dxi^2 on the open branches (0 on the flat part below
    kappa_star); jumps at both boundaries."""
    x = np.asarray(xi, dtype=float)
    c_l, e1, e2 = _middle_terms(tw, x)
    middle = c_l * (-e1 + c_l * e2) / (1.0 - c_l)
    upper = np.exp(-x) + tw.constants.c_h**2 * _upper_tail(tw, x)
    out = np.where(x <= tw.kappa_star, 0.0,
                   np.where(x <= tw.eta_star, middle, upper))
    if np.isscalar(xi):
        return float(out)
    return out


def tw_residual(tw: TravelingWave, xi):
    """Steady-equation defect at xi, evaluated from the analytic branches.

    Between the boundaries the defect is K'' + K' + c_l (K' + K); above
    eta_star the regime constant is c_h. On the flat part xi <= kappa_star
    the differential equation is replaced by the obstacle identity K = 1,
    whose defect 1 - K is reported instead. All three vanish to round-off
    for a correctly assembled profile.
    """
    x = np.asarray(xi, dtype=float)
    k0 = tw_value(tw, x)
    k1 = tw_derivative(tw, x)
    k2 = tw_second_derivative(tw, x)
    c = np.where(x > tw.eta_star, tw.constants.c_h, tw.constants.c_l)
    out = np.where(x <= tw.kappa_star, 1.0 - k0, k2 + k1 + c * (k1 + k0))
    if np.isscalar(xi):
        return float(out)
    return out
