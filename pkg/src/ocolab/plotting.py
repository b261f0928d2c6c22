"""Figure output for experiment reports (files only, non-interactive backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_regret(traces, path, title="", bound=None, bound_label="bound"):
    """Cumulative regret curves (one per seed) with an optional bound overlay."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, y in traces.items():
        y = np.asarray(y)
        ax.plot(np.arange(1, y.size + 1), y, lw=1.0, label=str(label))
    if bound is not None:
        b = np.asarray(bound)
        if np.all(np.isfinite(b)):
            ax.plot(np.arange(1, b.size + 1), b, "k--", lw=1.2, label=bound_label)
    ax.set_xlabel("round")
    ax.set_ylabel("regret")
    ax.set_title(title)
    if len(traces) <= 8:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_series(series, path, title="", xlabel="round", ylabel="value"):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, y in series.items():
        y = np.asarray(y)
        ax.plot(np.arange(1, y.size + 1), y, lw=1.0, label=str(label))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
