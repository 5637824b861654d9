"""Figure rendering for the report path.

Each command that emits delimited data also renders the matching figure next
to it. The Agg backend keeps output deterministic and headless-safe.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "wave_figure",
    "snapshots_figure",
    "error_figure",
    "boundaries_figure",
]

_DPI = 150


def _finish(fig, ax, path):
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def wave_figure(path, xs, k_values, u_values, kappa_star, eta_star):
    """Steady profile K and its fixed-frame counterpart e^xi K."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, u_values, lw=1.8, label=r"$e^{\xi} K(\xi)$")
    ax.plot(xs, k_values, lw=1.2, ls="--", label=r"$K(\xi)$")
    ax.axvline(kappa_star, color="k", lw=0.8, ls=":",
               label=r"$\kappa^*,\ \eta^*$")
    ax.axvline(eta_star, color="k", lw=0.8, ls=":")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel("value")
    ax.set_title("Steady traveling profile")
    ax.legend()
    _finish(fig, ax, path)


def snapshots_figure(path, field):
    """Stored solution rows against the steady profile."""
    from .wave import tw_value

    xi = field.grid.points()
    wave_row = np.exp(xi) * tw_value(field.wave, xi)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for t, row in zip(field.times, field.values):
        ax.plot(xi, row, lw=1.0, label=f"t={t:g}")
    ax.plot(xi, wave_row, "k--", lw=1.6, label="steady profile")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$u(\xi, t)$")
    ax.set_title("Solution snapshots")
    ax.legend(fontsize=8)
    _finish(fig, ax, path)


def error_figure(path, times, errors):
    """Sup-norm distance to the steady profile over time."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(times, errors, lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\sup_\xi |u - e^{\xi} K|$")
    ax.set_title("Distance to the steady profile")
    _finish(fig, ax, path)


def boundaries_figure(path, trace, kappa_star, eta_star):
    """Default and transit boundaries over time with their steady limits."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(trace.times, trace.kappa_hat, lw=1.2,
            label=r"$\hat\kappa(t)$ default")
    ax.plot(trace.times, trace.eta_hat, lw=1.2,
            label=r"$\hat\eta(t)$ transit")
    ax.axhline(kappa_star, color="C0", lw=0.8, ls=":")
    ax.axhline(eta_star, color="C1", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\xi$")
    ax.set_title("Free boundaries")
    ax.legend()
    _finish(fig, ax, path)
