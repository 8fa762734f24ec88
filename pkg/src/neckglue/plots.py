"""SVG figure rendering for the CLI report path.

Simple matplotlib polyline charts written next to the CSV output.  Plotting
never affects exit codes; callers wrap these in a guard.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_orbit(path, t, v, w):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.plot(t, v, lw=1.0)
    ax1.set_xlabel("t")
    ax1.set_ylabel("v")
    ax1.set_title("one period")
    ax2.plot(v, w, lw=1.0)
    ax2.set_xlabel("v")
    ax2.set_ylabel("v'")
    ax2.set_title("phase orbit")
    _save(fig, path)


def plot_radial_profile(path, r, values, ylabel, title, logx=True):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(r, values, lw=1.0)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path)


def plot_spectrum(path, eigenvalues, shift):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    idx = list(range(len(eigenvalues)))
    ax.plot(idx, eigenvalues, "o-", ms=3, lw=0.8)
    ax.axhline(shift, color="k", lw=0.8, ls="--", label=f"shift n = {shift}")
    ax.set_xlabel("mode index (sorted)")
    ax.set_ylabel("Laplace eigenvalue")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def plot_iteration_history(path, values, ylabel, title):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(range(1, len(values) + 1), values, "o-", ms=3, lw=0.8)
    if any(v > 0 for v in values):
        ax.set_yscale("log")
        # zero entries would otherwise silently clip the log axis
        floor = min(v for v in values if v > 0)
        ax.set_ylim(bottom=floor / 10.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path)
