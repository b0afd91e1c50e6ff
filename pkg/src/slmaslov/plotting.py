"""Figure rendering for CLI reports.  Every plot lands in a file; nothing
opens a window."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def spectrum_figure(path, rows, title=""):
    """Stem plot of eigenvalues per method from CSV-style rows
    (j, lambda, mult, method, residual)."""
    fig, ax = plt.subplots()
    methods = sorted({r[3] for r in rows})
    for off, method in enumerate(methods):
        pts = [(r[0], r[1]) for r in rows if r[3] == method]
        if not pts:
            continue
        js, lams = zip(*pts)
        ax.plot(js, lams, "o" if off == 0 else "x", label=method)
    ax.set_xlabel("index j")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def branches_figure(path, ts, theta, title=""):
    fig, ax = plt.subplots()
    for j in range(theta.shape[1]):
        ax.plot(ts, theta[:, j], lw=1)
    for k in range(int(np.floor(theta.min() / (2 * np.pi))),
                   int(np.ceil(theta.max() / (2 * np.pi))) + 1):
        ax.axhline(2 * np.pi * k, color="k", lw=0.5, alpha=0.4)
    ax.set_xlabel("path parameter")
    ax.set_ylabel("lifted eigenphase (rad)")
    ax.set_title(title)
    return _save(fig, path)


def jump_figure(path, curves, title=""):
    """Eigenvalue branches against the path parameter on both sides of the
    singularity; curves maps side -> (s values, list of value arrays)."""
    fig, ax = plt.subplots()
    for side, sign in (("minus", -1.0), ("plus", 1.0)):
        svals, tables = curves[side]
        for s, vals in zip(svals, tables):
            ax.plot([sign * s] * len(vals), vals, "k.", ms=2.5)
    ax.set_xlabel("path parameter s")
    ax.set_ylabel("eigenvalues")
    ax.set_title(title)
    return _save(fig, path)


def range_figure(path, report, title=""):
    fig, ax = plt.subplots()
    pred = report.prediction
    if report.samples:
        ax.plot(np.zeros(len(report.samples)) + 0.5, report.samples, "o",
                ms=3, alpha=0.5, label="layer samples")
    if report.sweep_values:
        ax.plot(np.zeros(len(report.sweep_values)) + 1.0, report.sweep_values,
                "s", ms=3, alpha=0.5, label="tan-path sweep")
    if pred["left"] != -np.inf:
        ax.axhline(pred["left"], color="tab:red",
                   ls="-" if pred["left_closed"] else "--", label="left endpoint")
    ax.axhline(pred["right"], color="tab:green",
               ls="-" if pred["right_closed"] else "--", label="right endpoint")
    ax.set_xlim(0, 1.5)
    ax.set_xticks([])
    ax.set_ylabel(f"eigenvalue {report.j} on layer {report.r}")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)


def dist_curve_figure(path, lam_grid, dist_curve, title=""):
    fig, ax = plt.subplots()
    ax.loglog([-l for l in lam_grid], dist_curve, "o-", ms=3)
    ax.set_xlabel("-lambda")
    ax.set_ylabel("distance to the Dirichlet plane")
    ax.set_title(title)
    return _save(fig, path)


def axioms_figure(path, report, title=""):
    keys = [k for k, v in report.items() if isinstance(v, dict)]
    fig, ax = plt.subplots()
    trials = [report[k]["trials"] for k in keys]
    fails = [report[k]["failures"] for k in keys]
    x = np.arange(len(keys))
    ax.bar(x, trials, label="trials")
    ax.bar(x, fails, label="failures")
    ax.set_xticks(x)
    ax.set_xticklabels(keys, rotation=25, ha="right", fontsize=7)
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)
