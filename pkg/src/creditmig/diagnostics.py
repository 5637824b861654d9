"""Boundary extraction, error measurement, and the solution invariant suite.

All checks work on the weighted value v = e^{-xi} u, which is the frame in
which the two free boundaries are level sets: the default boundary is where v
leaves 1, the transit boundary is where v crosses gamma. Extraction refines
node hits by linear interpolation, so it is exact on rows sampled from
piecewise-linear profiles and scheme-independent otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .wave import TravelingWave, tw_value

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .solver import Grid, SolutionField, TridiagonalSystem

__all__ = [
    "DEFAULT_BOUNDARY_TOL",
    "INVARIANT_NAMES",
    "BoundaryExtractionError",
    "BoundaryTrace",
    "InvariantResult",
    "DiagnosticsReport",
    "extract_default_boundary",
    "extract_transit_boundary",
    "sup_error_vs_tw",
    "check_m_matrix",
    "check_invariants",
]

# Ten times the default penalty parameter plus an absolute floor; rows whose
# weighted value sits within this band of 1 still count as the default region.
DEFAULT_BOUNDARY_TOL = 10.0 * 1e-8 + 1e-6


class BoundaryExtractionError(RuntimeError):
    """The weighted value row does not cross the threshold cleanly."""


@dataclass(frozen=True)
class BoundaryTrace:
    """Per-step positions of the default boundary kappa_hat and the transit
    boundary eta_hat, indexed by solver time."""

    times: np.ndarray
    kappa_hat: np.ndarray
    eta_hat: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


def _default_crossing(v, xi, dxi, xi_min, tol_b):
    threshold = 1.0 - tol_b
    below = v < threshold
    if not below.any():
        return float(xi_min)  # degenerate: whole row is default region
    j = int(np.argmax(below))
    if j == 0:
        return float(xi_min)
    frac = (v[j - 1] - threshold) / (v[j - 1] - v[j])
    return float(xi[j - 1] + dxi * frac)


def _transit_crossing(v, xi, dxi, gamma):
    s = v - gamma
    down = (s[:-1] > 0.0) & (s[1:] <= 0.0)
    up = (s[:-1] <= 0.0) & (s[1:] > 0.0)
    n_down = int(np.count_nonzero(down))
    n_up = int(np.count_nonzero(up))
    if n_down != 1 or n_up != 0:
        raise BoundaryExtractionError(
            f"expected exactly one downward crossing of gamma={gamma:g}, "
            f"found {n_down} down / {n_up} up")
    j = int(np.argmax(down))
    return float(xi[j] + dxi * s[j] / (s[j] - s[j + 1]))


def extract_default_boundary(u_row, grid: "Grid",
                             tol_b: float = DEFAULT_BOUNDARY_TOL) -> float:
    """Leftmost xi where e^{-xi} u drops below 1 - tol_b, refined by linear
    interpolation across the bracketing cell.

    Returns grid.xi_min when no node is below the threshold (a degenerate
    all-default row).
    """
    if tol_b <= 0.0:
        raise ValueError(f"tol_b must be positive, got {tol_b}")
    xi = grid.points()
    v = np.exp(-xi) * np.asarray(u_row, dtype=float)
    return _default_crossing(v, xi, grid.dxi, grid.xi_min, tol_b)


def extract_transit_boundary(u_row, grid: "Grid", gamma: float) -> float:
    """Unique downward crossing of e^{-xi} u through gamma, linearly
    interpolated.

    Raises BoundaryExtractionError when the row does not cross gamma exactly
    once going down: that signals a domain that is too small, a monotonicity
    violation, or a degenerate plateau at gamma.
    """
    xi = grid.points()
    v = np.exp(-xi) * np.asarray(u_row, dtype=float)
    return _transit_crossing(v, xi, grid.dxi, gamma)


def sup_error_vs_tw(u_row, tw: TravelingWave, grid: "Grid") -> float:
    """Sup-norm distance between the row and the steady profile e^xi K."""
    xi = grid.points()
    wave_row = np.exp(xi) * tw_value(tw, xi)
    return float(np.max(np.abs(np.asarray(u_row, dtype=float) - wave_row)))


def check_m_matrix(system: "TridiagonalSystem") -> bool:
    """True iff the system has a positive diagonal, non-positive
    off-diagonals, and strict row diagonal dominance."""
    return bool(
        np.all(system.diag > 0.0)
        and np.all(system.lower <= 0.0)
        and np.all(system.upper <= 0.0)
        and np.all(system.diag > np.abs(system.lower) + np.abs(system.upper))
    )


INVARIANT_NAMES = (
    "value_bounds",             # 0 <= u <= min(1, e^xi) up to penalty slack
    "monotone_in_xi",           # u non-decreasing in xi
    "weighted_monotone_in_xi",  # v = e^{-xi} u non-increasing in xi
    "monotone_in_time",         # u non-increasing between stored steps
    "weighted_concavity",       # v_xixi + v_xi <= 0 discretely
    "penalty_consistency",      # (u - e^xi)^+ bounded by 10 eps
    "m_matrix",                 # every assembled system was an M-matrix
    "boundary_monotone",        # kappa_hat, eta_hat non-increasing in time
    "boundary_separation",      # kappa_hat < eta_hat throughout
)


@dataclass(frozen=True)
class InvariantResult:
    name: str
    passed: bool
    worst_violation: float
    location: str


@dataclass
class DiagnosticsReport:
    """Outcome of the invariant suite over a stored solution field.

    Failures are data, not exceptions; ``all_passed`` is the single gate.
    """

    results: list[InvariantResult]
    newton_max: int
    newton_mean: float
    sup_error_initial: float
    sup_error_final: float

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, name: str) -> InvariantResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def table(self) -> str:
        width = max(len(r.name) for r in self.results)
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(
                f"{r.name:<{width}}  {status}  worst={r.worst_violation:.3e}"
                f"  at {r.location}")
        lines.append(
            f"newton iterations: max={self.newton_max} "
            f"mean={self.newton_mean:.3f}")
        lines.append(
            f"sup error vs wave: initial={self.sup_error_initial:.6e} "
            f"final={self.sup_error_final:.6e}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def _num(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "all_passed": self.all_passed,
            "invariants": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "worst_violation": _num(r.worst_violation),
                    "location": r.location,
                }
                for r in self.results
            ],
            "newton": {"max": self.newton_max, "mean": self.newton_mean},
            "sup_error": {
                "initial": _num(self.sup_error_initial),
                "final": _num(self.sup_error_final),
            },
        }


class _Extreme:
    """Tracks the signed maximum of a violation measure and its location.

    Values below zero mean the invariant held with margin; the reported
    violation magnitude is clipped at zero.
    """

    def __init__(self):
        self.value = -math.inf
        self.location = "-"

    def update(self, value: float, location: str):
        if value > self.value:
            self.value = value
            self.location = location

    def update_max(self, series, location_of):
        series = np.asarray(series)
        if series.size == 0:
            return
        i = int(np.argmax(series))
        self.update(float(series[i]), location_of(i))

    @property
    def magnitude(self) -> float:
        return max(0.0, self.value) if math.isfinite(self.value) else 0.0


def check_invariants(field: "SolutionField",
                     tw: TravelingWave | None = None) -> DiagnosticsReport:
    """Evaluate every registered invariant on the stored snapshots and the
    per-step boundary trace of a solver run.

    Slacks: pointwise comparisons allow 10 eps + 1e-8, per-cell monotonicity
    allows 1e-8, the penalty overshoot allows 10 eps, and boundary
    monotonicity allows one grid cell. All failures are reported with the
    worst deviation and where it occurred.
    """
    if tw is None:
        tw = field.wave
    grid = field.grid
    xi = grid.points()
    obstacle = np.exp(xi)
    cap = np.minimum(1.0, obstacle)
    dxi = grid.dxi
    eps = field.config.eps_penalty
    slack = 10.0 * eps + 1e-8
    cell_slack = 1e-8

    worst = {name: _Extreme() for name in INVARIANT_NAMES}

    prev_row = None
    prev_t = None
    for t, u in zip(field.times, field.values):
        v = u / obstacle

        def site(i):
            return f"t={t:g}, xi={xi[i]:.6g}"

        worst["value_bounds"].update_max(-u, site)
        worst["value_bounds"].update_max(u - cap, site)
        worst["monotone_in_xi"].update_max(u[:-1] - u[1:], site)
        worst["weighted_monotone_in_xi"].update_max(v[1:] - v[:-1],
                                                    lambda i: site(i + 1))
        curv = (v[2:] + v[:-2] - 2.0 * v[1:-1]) / dxi**2 \
            + (v[2:] - v[:-2]) / (2.0 * dxi)
        worst["weighted_concavity"].update_max(curv, lambda i: site(i + 1))
        worst["penalty_consistency"].update_max(u - obstacle, site)
        if prev_row is not None:
            t0 = prev_t
            worst["monotone_in_time"].update_max(
                u - prev_row,
                lambda i: f"t={t0:g}->{t:g}, xi={xi[i]:.6g}")
        prev_row = u
        prev_t = t

    if not field.m_matrix_all_ok:
        deficiency = max(-field.m_matrix_min_margin,
                         field.m_matrix_max_offdiag, 0.0)
        worst["m_matrix"].update(deficiency or math.inf,
                                 "recorded during run")

    trace = field.trace
    times = trace.times
    for name, series in (("kappa_hat", trace.kappa_hat),
                         ("eta_hat", trace.eta_hat)):
        worst["boundary_monotone"].update_max(
            series[1:] - series[:-1],
            lambda i, name=name: f"{name}, t={times[i]:g}->{times[i + 1]:g}")
    worst["boundary_separation"].update_max(
        trace.kappa_hat - trace.eta_hat,
        lambda i: f"t={times[i]:g}")

    thresholds = {
        "value_bounds": slack,
        "monotone_in_xi": cell_slack,
        "weighted_monotone_in_xi": cell_slack,
        "monotone_in_time": cell_slack,
        "weighted_concavity": slack,
        "penalty_consistency": 10.0 * eps,
        "boundary_monotone": dxi,
    }
    results = []
    for name in INVARIANT_NAMES:
        w = worst[name]
        if name == "m_matrix":
            passed = field.m_matrix_all_ok
        elif name == "boundary_separation":
            # strict: kappa_hat must stay below eta_hat
            passed = not math.isfinite(w.value) or w.value < 0.0
        else:
            passed = w.value <= thresholds[name]
        results.append(InvariantResult(name, bool(passed), w.magnitude,
                                       w.location))

    counts = np.asarray(field.newton_counts)
    newton_max = int(counts.max()) if counts.size else 0
    newton_mean = float(counts.mean()) if counts.size else 0.0
    return DiagnosticsReport(
        results=results,
        newton_max=newton_max,
        newton_mean=newton_mean,
        sup_error_initial=float(field.errors_vs_wave[0]),
        sup_error_final=float(field.errors_vs_wave[-1]),
    )
