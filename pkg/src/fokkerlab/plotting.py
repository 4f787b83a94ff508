"""Matplotlib figures for the report path (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

# no timestamp or version in the PNG, so reruns give identical bytes
PNG_METADATA = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=PNG_METADATA)
    plt.close(fig)
    return path


def convergence_figure(report, path: Path) -> Path:
    Ns = np.array(report.Ns, dtype=float)
    err = np.array([e.sup_error for e in report.entries])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(Ns, err, "o-", label="sup-time lattice error")
        if report.fitted_order is not None:
            ax.loglog(Ns, [report.predicted_error(n) for n in Ns], "k--", lw=0.8, label=f"fit, slope {report.fitted_order:.2f}")
        ax.loglog(Ns, err[0] * Ns[0] / Ns, ":", color="0.5", label="1/N reference")
        ax.set_xlabel("N")
        ax.set_ylabel("error")
        ax.set_title(report.label)
        ax.legend()
        return _save(fig, path)


def defect_figure(study, path: Path) -> Path:
    Ns = np.array([r.N for r in study.reports], dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for region in ("all", "interior", "boundary"):
            vals = np.array([getattr(r, f"defect_{region}") for r in study.reports])
            keep = vals > 0
            if keep.any():
                ax.loglog(Ns[keep], vals[keep], "o-", label=region)
        ax.set_xlabel("N")
        ax.set_ylabel("generator defect")
        ax.legend()
        return _save(fig, path)


def trajectory_figure(times, x, values, path: Path, xlabel: str, ylabel: str, every: int = 5) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        idx = list(range(0, len(times), every))
        if idx[-1] != len(times) - 1:
            idx.append(len(times) - 1)
        cmap = plt.get_cmap("viridis")
        for n, i in enumerate(idx):
            ax.plot(x, values[i], color=cmap(n / max(1, len(idx) - 1)), lw=1.0, label=f"t={times[i]:.3g}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend()
        return _save(fig, path)


def decay_figure(decay, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        vals = np.array(decay.strip_max)
        keep = vals > 0
        ax.loglog(np.array(decay.Ns)[keep], vals[keep], "o-", label="max |u''| on strips")
        ax.set_xlabel("N")
        ax.set_ylabel("strip maximum")
        if decay.slope is not None:
            ax.set_title(f"slope {decay.slope:.2f}, R^2 {decay.r2:.3f}")
        ax.legend()
        return _save(fig, path)


def histogram_figure(emp, p_exact, path: Path) -> Path:
    k = np.arange(emp.N + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(k, emp.probabilities, width=0.9, color="0.7", label=f"SSA, {emp.n_paths} paths")
        if p_exact is not None:
            ax.plot(k, p_exact, "k.-", lw=0.8, label="master equation")
        ax.set_xlabel("k")
        ax.set_ylabel("probability")
        ax.legend()
        return _save(fig, path)
