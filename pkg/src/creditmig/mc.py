"""Regime-switching Monte Carlo cross-check of the PDE bond price.

Paths evolve in the same moving log-price frame as the PDE, so the default
and transit boundaries extracted from a finite-difference run apply directly:
the volatility switches when the frame coordinate crosses the transit
boundary, and the contract terminates with the recovery payout when it
reaches the default boundary. Discounted payoffs then estimate the same
conditional expectation the PDE value represents, giving an independent
price to compare against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import BoundaryTrace
from .model import ModelParams, validate_params
from .wave import TravelingWave

__all__ = [
    "McConfig",
    "McResult",
    "ComparisonRecord",
    "PathSample",
    "simulate_path",
    "price_bond_mc",
    "compare_mc_pde",
    "pde_reference_price",
    "disabled_boundary_trace",
]

# Paths are simulated in fixed-size blocks, each with its own counter-based
# random stream keyed on (seed, block). The block size is a constant so a
# path's increments depend only on (seed, path index), never on n_paths.
_PATH_BLOCK = 4096

# Sentinel far below any reachable frame coordinate; a boundary placed here
# can never be crossed.
_FAR_BELOW = -1.0e18


@dataclass(frozen=True)
class McConfig:
    """Simulation controls for one Monte Carlo run."""

    n_paths: int
    maturity: float
    s0: float
    seed: int
    dt_sim: float | None = None  # step target; defaults to maturity / 2000

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.maturity > 0.0:
            raise ValueError(f"maturity must be positive, got {self.maturity}")
        if not self.s0 > 0.0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if self.dt_sim is not None and not self.dt_sim > 0.0:
            raise ValueError(f"dt_sim must be positive, got {self.dt_sim}")

    @property
    def step_count(self) -> int:
        """Steps per path; dt_sim is shrunk if needed to divide the
        maturity exactly."""
        dt = self.dt_sim if self.dt_sim is not None else self.maturity / 2000.0
        return max(1, int(math.ceil(self.maturity / dt - 1e-12)))

    @property
    def step_size(self) -> float:
        return self.maturity / self.step_count


@dataclass(frozen=True)
class McResult:
    """Price estimate with sampling error and path statistics."""

    price: float
    std_error: float
    n_default: int
    n_migrations: int
    n_paths: int


@dataclass(frozen=True)
class ComparisonRecord:
    """Gap between a Monte Carlo estimate and a reference value."""

    mc_price: float
    reference: float
    abs_diff: float
    rel_diff: float
    z_score: float


@dataclass(frozen=True)
class PathSample:
    """One simulated path with enough detail to audit the regime logic."""

    payoff: float
    defaulted: bool
    n_migrations: int
    xi_path: np.ndarray       # frame coordinate at each step start
    high_regime: np.ndarray   # regime used for each completed step
    eta_at_steps: np.ndarray  # transit boundary level at each step start


def disabled_boundary_trace(horizon: float) -> BoundaryTrace:
    """Trace with both boundaries far below any reachable state.

    Paths never default and never leave the high-rating regime; used for the
    single-regime lognormal control run.
    """
    times = np.array([0.0, float(horizon)])
    far = np.full(2, _FAR_BELOW)
    return BoundaryTrace(times=times, kappa_hat=far, eta_hat=far.copy())


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = ((int(seed) & 0xFFFFFFFFFFFFFFFF) << 64) + block
    return np.random.Generator(np.random.Philox(key=key))


def _boundaries_at(taus: np.ndarray, trace: BoundaryTrace,
                   tw: TravelingWave | None):
    """Boundary positions at the requested times-to-maturity.

    Linear interpolation inside the trace; beyond its coverage the steady
    positions take over when a traveling wave is supplied, otherwise the
    request is an error.
    """
    t_max = float(trace.times[-1])
    if float(np.max(taus)) > t_max + 1e-9:
        if tw is None:
            raise ValueError(
                f"time-to-maturity {float(np.max(taus)):g} outside boundary "
                f"trace coverage [0, {t_max:g}] and no steady tail given")
        inside = taus <= t_max
        kappa = np.where(inside,
                         np.interp(taus, trace.times, trace.kappa_hat),
                         tw.kappa_star)
        eta = np.where(inside,
                       np.interp(taus, trace.times, trace.eta_hat),
                       tw.eta_star)
        return kappa, eta
    return (np.interp(taus, trace.times, trace.kappa_hat),
            np.interp(taus, trace.times, trace.eta_hat))


def simulate_path(rng: np.random.Generator, p: ModelParams,
                  trace: BoundaryTrace, cfg: McConfig,
                  tw: TravelingWave | None = None,
                  return_details: bool = False):
    """Draw one path and return its discounted payoff.

    The frame coordinate xi(s) = log S_s + (r - delta)(T - s) takes
    Euler-Maruyama steps d xi = (delta - sigma^2/2) ds + sigma dW with sigma
    chosen by the regime at the step start (sigma_h above the transit
    boundary). Default triggers at a step start when xi is at or below the
    default boundary; the holder then receives S e^{-delta tau} on the spot,
    discounted back to time zero. Survivors collect min(S_T, 1) at maturity.
    """
    p = validate_params(p)
    n = cfg.step_count
    dt = cfg.step_size
    taus = cfg.maturity - dt * np.arange(n)
    kappa_at, eta_at = _boundaries_at(taus, trace, tw)
    z = np.asarray(rng.standard_normal(n), dtype=float)
    sqdt = math.sqrt(dt)

    xi = math.log(cfg.s0) + (p.r - p.delta) * cfg.maturity
    xi_path = [xi]
    regimes = []
    migrations = 0
    defaulted = False
    payoff = None
    for k in range(n):
        tau = float(taus[k])
        if xi <= kappa_at[k]:
            spot = math.exp(xi - (p.r - p.delta) * tau)
            elapsed = cfg.maturity - tau
            payoff = math.exp(-p.r * elapsed) * spot * math.exp(-p.delta * tau)
            defaulted = True
            break
        high = xi > eta_at[k]
        if regimes and high != regimes[-1]:
            migrations += 1
        regimes.append(high)
        sigma = p.sigma_h if high else p.sigma_l
        xi += (p.delta - 0.5 * sigma * sigma) * dt + sigma * sqdt * float(z[k])
        xi_path.append(xi)
    if payoff is None:
        payoff = math.exp(-p.r * cfg.maturity) * min(math.exp(xi), 1.0)
    if not return_details:
        return payoff
    m = len(regimes)
    return PathSample(
        payoff=payoff,
        defaulted=defaulted,
        n_migrations=migrations,
        xi_path=np.array(xi_path),
        high_regime=np.array(regimes, dtype=bool),
        eta_at_steps=np.asarray(eta_at[:m], dtype=float) if m else
        np.empty(0),
    )


def price_bond_mc(p: ModelParams, trace: BoundaryTrace, cfg: McConfig,
                  tw: TravelingWave | None = None) -> McResult:
    """Average discounted payoff over cfg.n_paths independent paths.

    Blocks of paths run vectorized; each block draws from its own
    counter-based stream keyed on (seed, block), so the result is
    reproducible for a fixed seed and each path's draws are a fixed function
    of (seed, path index). Aggregation order is fixed by path index.
    """
    p = validate_params(p)
    n = cfg.step_count
    dt = cfg.step_size
    taus = cfg.maturity - dt * np.arange(n)
    kappa_at, eta_at = _boundaries_at(taus, trace, tw)
    sqdt = math.sqrt(dt)
    xi0 = math.log(cfg.s0) + (p.r - p.delta) * cfg.maturity
    discount_full = math.exp(-p.r * cfg.maturity)

    payoffs = np.empty(cfg.n_paths)
    n_default = 0
    n_migrations = 0
    for start in range(0, cfg.n_paths, _PATH_BLOCK):
        stop = min(start + _PATH_BLOCK, cfg.n_paths)
        m = stop - start
        rng = _block_rng(cfg.seed, start // _PATH_BLOCK)
        z = rng.standard_normal((m, n))
        xi = np.full(m, xi0)
        alive = np.ones(m, dtype=bool)
        pay = np.zeros(m)
        prev_high = None
        for k in range(n):
            tau = float(taus[k])
            hit = alive & (xi <= kappa_at[k])
            if hit.any():
                spot = np.exp(xi[hit] - (p.r - p.delta) * tau)
                elapsed = cfg.maturity - tau
                pay[hit] = (math.exp(-p.r * elapsed) * spot
                            * math.exp(-p.delta * tau))
                alive &= ~hit
                n_default += int(np.count_nonzero(hit))
            high = xi > eta_at[k]
            if prev_high is not None:
                n_migrations += int(np.count_nonzero(alive
                                                     & (high != prev_high)))
            prev_high = high
            sigma = np.where(high, p.sigma_h, p.sigma_l)
            step = (p.delta - 0.5 * sigma**2) * dt + sigma * sqdt * z[:, k]
            xi = np.where(alive, xi + step, xi)
        pay[alive] = discount_full * np.minimum(np.exp(xi[alive]), 1.0)
        payoffs[start:stop] = pay

    price = float(payoffs.mean())
    if cfg.n_paths > 1:
        std_error = float(payoffs.std(ddof=1) / math.sqrt(cfg.n_paths))
    else:
        std_error = 0.0  # single-sample convention
    return McResult(price=price, std_error=std_error, n_default=n_default,
                    n_migrations=n_migrations, n_paths=cfg.n_paths)


def compare_mc_pde(mc: McResult, pde_value: float) -> ComparisonRecord:
    """Absolute and relative gap plus the gap in standard-error units."""
    diff = abs(mc.price - pde_value)
    if pde_value != 0.0:
        rel = diff / abs(pde_value)
    else:
        rel = 0.0 if diff == 0.0 else math.inf
    if mc.std_error > 0.0:
        z = diff / mc.std_error
    else:
        z = 0.0 if diff == 0.0 else math.inf
    return ComparisonRecord(mc_price=mc.price, reference=pde_value,
                            abs_diff=diff, rel_diff=rel, z_score=z)


def pde_reference_price(field, s0: float) -> float:
    """Discounted PDE price for spot s0 at the run horizon.

    The bond price at calendar time zero with time-to-maturity T is
    e^{-rT} u(xi_0, T) with xi_0 = log s0 + (r - delta) T; u is interpolated
    on the final stored row.
    """
    p = field.params
    horizon = field.grid.horizon
    xi0 = math.log(s0) + (p.r - p.delta) * horizon
    if not field.grid.xi_min <= xi0 <= field.grid.xi_max:
        raise ValueError(
            f"xi_0={xi0:g} for s0={s0:g} falls outside the solver domain")
    u0 = float(np.interp(xi0, field.grid.points(), field.final_values))
    return math.exp(-p.r * horizon) * u0
