"""
Report figures.  Everything renders off-screen to files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
colors = ["#08589e", "#2b8cbe", "#4eb3d3", "#7bccc4", "#a8ddb5", "#d95f0e"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.family": "serif",
    "font.size": 9,
    "mathtext.fontset": "stix",
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
}


def _figure():
    fig, ax = plt.subplots()
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_series(path, times, series: dict, keys=None, logy=False, title=None):
    """Time series from a run; ``series`` maps column name to values."""
    with plt.rc_context(params):
        fig, ax = _figure()
        for k in keys or sorted(series):
            vals = np.asarray(series[k], dtype=float)
            if logy:
                vals = np.where(vals > 0, vals, np.nan)
            ax.plot(times, vals, label=k)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("$t$")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        return _save(fig, path)


def plot_ladder(path, ladder_by_time: dict, sigma: float, offset: int = 7):
    """``log b_m - sigma log((m-7)!)`` against ``m`` for selected times."""
    from scipy.special import gammaln

    with plt.rc_context(params):
        fig, ax = _figure()
        for t, lad in ladder_by_time.items():
            b = np.asarray(lad).sum(axis=1)
            m = np.arange(len(b))
            keep = (m > offset) & (b > 0)
            z = np.log(b[keep]) - sigma * gammaln(m[keep] - offset + 1)
            ax.plot(m[keep], z, "o-", label=f"t = {t:.3g}")
        ax.set_xlabel("$m$")
        ax.set_ylabel(r"$\log b_m - \sigma \log((m-7)!)$")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_ledger(path, pairs):
    """Observed constant and its running sup for each ``(rho, rho~)`` pair."""
    with plt.rc_context(params):
        fig, ax = _figure()
        for i, p in enumerate(pairs):
            c = colors[i % len(colors)]
            ax.plot(p.times, p.chat, color=c, alpha=0.5)
            ax.plot(p.times, p.running_sup, color=c, label=fr"$\rho$={p.rho:g}, $\tilde\rho$={p.rho_tilde:g}")
        ax.set_xlabel("$t$")
        ax.set_ylabel(r"$\hat C(t)$")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_audit(path, audit):
    """Energy-identity terms and residual against time."""
    with plt.rc_context(params):
        fig, ax = _figure()
        lhs = audit.lhs_series.sum(axis=1)
        rhs = audit.initial + audit.pairing_series + audit.commutator_series
        ax.plot(audit.times, lhs, label="LHS")
        ax.plot(audit.times, rhs, "--", label="RHS")
        ax2 = ax.twinx()
        ax2.plot(audit.times, audit.residual_series, color=colors[-1], label="residual")
        ax2.set_ylabel("residual")
        ax.set_xlabel("$t$")
        ax.set_title(f"energy identity, m = {audit.m}")
        ax.legend(loc="upper left")
        ax2.legend(loc="upper right")
        return _save(fig, path)
