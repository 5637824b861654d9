"""Penalized explicit-implicit upwind finite-difference solver.

The obstacle problem for the bond value u(xi, t) is regularized by the steep
reaction term (u - e^xi)^+ / eps. Each time step freezes the regime
volatility at the previous step's values, assembles one tridiagonal M-matrix
(implicit diffusion, upwinded convection), and runs an active-set Newton
iteration in which the penalty's linearization folds into the diagonal and
the right-hand side. Boundary positions, the sup-distance to the steady
profile, Newton counts, and M-matrix margins are recorded every step;
solution rows are stored sparsely to keep long runs cheap in memory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import solve_banded

from .diagnostics import BoundaryTrace, _default_crossing, _transit_crossing
from .model import ModelParams, sigma_eff, validate_params
from .wave import TravelingWave, build_traveling_wave, tw_value

__all__ = [
    "SolverError",
    "NewtonIterationError",
    "Grid",
    "SolverConfig",
    "TridiagonalSystem",
    "SolutionField",
    "initial_condition",
    "convection_coefficient",
    "assemble_system",
    "thomas_solve",
    "newton_penalty_solve",
    "run_solver",
]


class SolverError(RuntimeError):
    """A linear or Newton solve could not complete."""


class NewtonIterationError(SolverError):
    """The Newton loop exhausted max_newton_iters without converging.

    Carries the last iterate and the last relative change so callers can see
    how far the iteration got (usually a sign of mismatched eps / tolerance).
    """

    def __init__(self, message: str, last_iterate, residual: float,
                 iterations: int):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [xi_min, xi_max] x [0, n_steps * dt].

    n_space counts intervals, so there are n_space + 1 nodes. n_steps = 0 is
    allowed and means "initial condition only".
    """

    xi_min: float
    xi_max: float
    n_space: int
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.xi_max > self.xi_min:
            raise ValueError(
                f"need xi_min < xi_max, got [{self.xi_min}, {self.xi_max}]")
        if self.n_space < 2:
            raise ValueError(f"n_space must be at least 2, got {self.n_space}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")

    @property
    def dxi(self) -> float:
        return (self.xi_max - self.xi_min) / self.n_space

    @property
    def n_points(self) -> int:
        return self.n_space + 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def points(self) -> np.ndarray:
        return np.linspace(self.xi_min, self.xi_max, self.n_space + 1)

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @classmethod
    def from_spacing(cls, xi_min: float, xi_max: float, dxi: float,
                     dt: float, t_final: float) -> "Grid":
        """Build a grid from target spacings, rounded to whole cells/steps."""
        if dxi <= 0.0 or dt <= 0.0 or t_final < 0.0:
            raise ValueError("spacings must be positive and t_final >= 0")
        n_space = int(round((xi_max - xi_min) / dxi))
        n_steps = int(round(t_final / dt))
        return cls(xi_min=xi_min, xi_max=xi_max, n_space=n_space, dt=dt,
                   n_steps=n_steps)


@dataclass(frozen=True)
class SolverConfig:
    """Penalty and Newton controls; defaults reproduce the reference setup."""

    eps_penalty: float = 1e-8
    eps_heaviside: float = 1e-8
    tol_newton: float = 1e-4
    max_newton_iters: int = 50

    def __post_init__(self):
        for name in ("eps_penalty", "eps_heaviside", "tol_newton"):
            if not getattr(self, name) > 0.0:
                raise ValueError(
                    f"{name} must be positive, got {getattr(self, name)}")
        if self.max_newton_iters < 2:
            raise ValueError(
                f"max_newton_iters must be >= 2, got {self.max_newton_iters}")


@dataclass
class TridiagonalSystem:
    """Row-aligned tridiagonal bands with right-hand side.

    lower[j] multiplies x[j-1] (lower[0] is structurally zero) and upper[j]
    multiplies x[j+1] (upper[-1] zero). Systems built by assemble_system are
    M-matrices: positive diagonal, non-positive off-diagonals, strictly
    diagonally dominant.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return len(self.diag)


def initial_condition(grid: Grid) -> np.ndarray:
    """Payoff row u(xi, 0) = min(1, e^xi)."""
    return np.minimum(1.0, np.exp(grid.points()))


def convection_coefficient(sigma, delta):
    """Drift coefficient b = delta - sigma^2 / 2 of the xi-derivative.

    Its sign picks the upwind direction: forward differencing for b >= 0
    (high-rating regime under the admissibility constraints), backward for
    b < 0 (low-rating regime).
    """
    return delta - 0.5 * np.square(sigma)


def assemble_system(u_prev: np.ndarray, grid: Grid, p: ModelParams,
                    cfg: SolverConfig) -> TridiagonalSystem:
    """One implicit time step linearized at the previous solution row.

    The volatility (hence the convection coefficient) is frozen at u_prev.
    Interior row j encodes

        (u_j - u_prev_j)/dt = sigma_j^2/2 * (u_{j+1} + u_{j-1} - 2 u_j)/dxi^2
                              + b_j * D_up u_j

    with D_up the one-sided difference chosen by sign(b_j), written in the
    M-matrix orientation (all u terms on the left, u_prev/dt on the right).
    Boundary rows pin u(xi_min) = e^{xi_min} (default region identity) and
    u(xi_max) = 1 (asymptotic value of e^xi K).
    """
    xi = grid.points()
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape != xi.shape:
        raise ValueError(
            f"u_prev has length {u_prev.shape}, grid expects {xi.shape}")
    sig = sigma_eff(u_prev, xi, p, cfg.eps_heaviside)
    b = convection_coefficient(sig, p.delta)
    dxi = grid.dxi
    diffusion = 0.5 * sig**2 / dxi**2
    b_fwd = np.maximum(b, 0.0) / dxi
    b_bwd = np.maximum(-b, 0.0) / dxi

    lower = -(diffusion + b_bwd)
    diag = 1.0 / grid.dt + 2.0 * diffusion + b_fwd + b_bwd
    upper = -(diffusion + b_fwd)
    rhs = u_prev / grid.dt

    lower[0] = 0.0
    diag[0] = 1.0
    upper[0] = 0.0
    rhs[0] = math.exp(grid.xi_min)
    lower[-1] = 0.0
    diag[-1] = 1.0
    upper[-1] = 0.0
    rhs[-1] = 1.0
    return TridiagonalSystem(lower=lower, diag=diag, upper=upper, rhs=rhs)


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Direct tridiagonal elimination (LAPACK banded solve), O(n).

    Intended for the diagonally dominant systems produced by
    assemble_system; a singular pivot raises SolverError.
    """
    n = system.n
    if not len(system.lower) == len(system.upper) == len(system.rhs) == n:
        raise ValueError("band length mismatch")
    ab = np.zeros((3, n))
    ab[0, 1:] = system.upper[:-1]
    ab[1] = system.diag
    ab[2, :-1] = system.lower[1:]
    try:
        return solve_banded((1, 1), ab, system.rhs, overwrite_ab=True,
                            check_finite=False)
    except LinAlgError as exc:
        raise SolverError(f"zero pivot in tridiagonal solve: {exc}") from exc


def newton_penalty_solve(system: TridiagonalSystem, obstacle: np.ndarray,
                         u_prev: np.ndarray,
                         cfg: SolverConfig) -> tuple[np.ndarray, int]:
    """Active-set Newton iteration for one penalized time step.

    Starts from the previous step's row. Each pass adds 1/eps to the diagonal
    on the active set {u > e^xi} and the matching obstacle term to the
    right-hand side, then re-solves; with a stable active set the iteration
    reaches an exact fixed point. Stops when the relative sup-norm change
    drops below tol_newton and returns (solution, iterations used).
    """
    if len(u_prev) != system.n or len(obstacle) != system.n:
        raise ValueError("length mismatch between system and vectors")
    inv_eps = 1.0 / cfg.eps_penalty
    u_k = np.asarray(u_prev, dtype=float)
    change = math.inf
    for k in range(1, cfg.max_newton_iters + 1):
        active = (u_k - obstacle) > 0.0
        active[0] = False   # Dirichlet rows carry no penalty
        active[-1] = False
        step = TridiagonalSystem(
            lower=system.lower,
            diag=system.diag + inv_eps * active,
            upper=system.upper,
            rhs=system.rhs + inv_eps * (active * obstacle),
        )
        u_next = thomas_solve(step)
        change = float(np.max(np.abs(u_next - u_k))
                       / max(1.0, float(np.max(np.abs(u_k)))))
        if change < cfg.tol_newton:
            return u_next, k
        u_k = u_next
    raise NewtonIterationError(
        f"no convergence in {cfg.max_newton_iters} iterations "
        f"(last relative change {change:.3e}); check eps_penalty/tol_newton",
        last_iterate=u_k, residual=change, iterations=cfg.max_newton_iters)


@dataclass
class SolutionField:
    """Result of a solver run: sparse solution rows plus per-step series."""

    grid: Grid
    times: np.ndarray           # stored snapshot times (grid-aligned)
    values: np.ndarray          # (len(times), n_points) stored rows of u
    newton_counts: np.ndarray   # inner iterations per time step
    trace: BoundaryTrace        # per-step boundary positions, incl. t = 0
    errors_vs_wave: np.ndarray  # sup|u - e^xi K| per step, incl. t = 0
    wave: TravelingWave
    params: ModelParams
    config: SolverConfig
    m_matrix_all_ok: bool
    m_matrix_min_margin: float  # min over rows/steps of diag - |low| - |up|
    m_matrix_max_offdiag: float  # largest off-diagonal seen (should be <= 0)

    def value_at(self, t: float) -> np.ndarray:
        """Stored row at time t (must be one of the stored snapshot times)."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(float(self.times[i]) - t) > 0.5 * self.grid.dt:
            raise KeyError(f"no stored snapshot at t={t:g}")
        return self.values[i]

    @property
    def final_values(self) -> np.ndarray:
        return self.values[-1]


def _check_domain(grid: Grid, tw: TravelingWave, gamma: float):
    """The domain must contain both boundary trajectories with margin: the
    steady default boundary on the left, the initial transit position on the
    right."""
    left_need = tw.kappa_star - 1.0
    right_need = math.log(1.0 / gamma) + 1.0
    if not grid.xi_min < left_need:
        raise ValueError(
            f"xi_min={grid.xi_min:g} too high: need xi_min < kappa_star - 1 "
            f"= {left_need:g}")
    if not grid.xi_max > right_need:
        raise ValueError(
            f"xi_max={grid.xi_max:g} too low: need xi_max > log(1/gamma) + 1 "
            f"= {right_need:g}")


def _snapshot_steps(snapshot_times: Sequence[float], grid: Grid) -> list[int]:
    steps = {0, grid.n_steps}
    for t in snapshot_times:
        if not -1e-9 <= t <= grid.horizon + 1e-9:
            raise ValueError(
                f"snapshot time {t:g} outside [0, {grid.horizon:g}]")
        steps.add(min(grid.n_steps, max(0, int(round(t / grid.dt)))))
    return sorted(steps)


def run_solver(p: ModelParams, grid: Grid, cfg: SolverConfig,
               snapshot_times: Sequence[float] = (),
               tw: TravelingWave | None = None) -> SolutionField:
    """March the penalized scheme from the payoff row to the grid horizon.

    Stores the initial row, the final row, and any requested snapshot times
    (rounded to the nearest step). Deterministic: identical inputs produce
    bit-identical fields. Newton failures abort with the failing step index.
    """
    p = validate_params(p)
    if tw is None:
        tw = build_traveling_wave(p)
    _check_domain(grid, tw, p.gamma)

    xi = grid.points()
    obstacle = np.exp(xi)
    inv_obstacle = 1.0 / obstacle
    wave_row = obstacle * tw_value(tw, xi)
    tol_b = 10.0 * cfg.eps_penalty + 1e-6

    snap_steps = _snapshot_steps(snapshot_times, grid)
    slot = {s: i for i, s in enumerate(snap_steps)}
    values = np.empty((len(snap_steps), grid.n_points))
    newton_counts = np.zeros(grid.n_steps, dtype=int)
    kappa_hat = np.empty(grid.n_steps + 1)
    eta_hat = np.empty(grid.n_steps + 1)
    errors = np.empty(grid.n_steps + 1)

    u = initial_condition(grid)
    values[slot[0]] = u
    v = u * inv_obstacle
    kappa_hat[0] = _default_crossing(v, xi, grid.dxi, grid.xi_min, tol_b)
    eta_hat[0] = _transit_crossing(v, xi, grid.dxi, p.gamma)
    errors[0] = float(np.max(np.abs(u - wave_row)))

    min_margin = math.inf
    max_offdiag = -math.inf
    for i in range(1, grid.n_steps + 1):
        system = assemble_system(u, grid, p, cfg)
        margin = float(np.min(system.diag - np.abs(system.lower)
                              - np.abs(system.upper)))
        offdiag = float(max(system.lower.max(), system.upper.max()))
        min_margin = min(min_margin, margin)
        max_offdiag = max(max_offdiag, offdiag)
        try:
            u, iters = newton_penalty_solve(system, obstacle, u, cfg)
        except NewtonIterationError as exc:
            raise SolverError(
                f"Newton iteration failed at step {i} "
                f"(t={i * grid.dt:g}): {exc}") from exc
        newton_counts[i - 1] = iters
        v = u * inv_obstacle
        kappa_hat[i] = _default_crossing(v, xi, grid.dxi, grid.xi_min, tol_b)
        eta_hat[i] = _transit_crossing(v, xi, grid.dxi, p.gamma)
        errors[i] = float(np.max(np.abs(u - wave_row)))
        if i in slot:
            values[slot[i]] = u

    if grid.n_steps == 0:
        m_ok = True
        min_margin = math.inf
        max_offdiag = -math.inf
    else:
        m_ok = bool(min_margin > 0.0 and max_offdiag <= 0.0)

    return SolutionField(
        grid=grid,
        times=np.array([s * grid.dt for s in snap_steps]),
        values=values,
        newton_counts=newton_counts,
        trace=BoundaryTrace(times=grid.times(), kappa_hat=kappa_hat,
                            eta_hat=eta_hat),
        errors_vs_wave=errors,
        wave=tw,
        params=p,
        config=cfg,
        m_matrix_all_ok=m_ok,
        m_matrix_min_margin=min_margin,
        m_matrix_max_offdiag=max_offdiag,
    )
