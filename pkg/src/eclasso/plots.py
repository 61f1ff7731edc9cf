"""Matplotlib renderings of path profiles and recovery summaries.

Figures are written as PNG with the Agg backend and no software/date
metadata, so reruns produce identical bytes.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def plot_path_profiles(panels, path, ncols=2):
    """One panel per ``(title, lambdas, coefs, support)``.

    ``coefs`` is (len(lambdas), p). Support columns are drawn solid, the rest
    dashed; the x axis is log(lambda), decreasing to the right like a lars plot.
    """
    nrows = int(np.ceil(len(panels) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.5 * ncols, 4 * nrows), squeeze=False)
    for ax, (title, lambdas, coefs, support) in zip(axes.flat, panels):
        x = np.log(lambdas)
        support = set(int(j) for j in support)
        active = np.flatnonzero(np.any(coefs != 0, axis=0))
        for j in active:
            style = "-" if j in support else "--"
            ax.plot(x, coefs[:, j], style, lw=1.2 if j in support else 0.9, label=f"X{j + 1}")
        ax.axhline(0.0, color="0.6", lw=0.6)
        ax.invert_xaxis()
        ax.set_xlabel("log(lambda)")
        ax.set_ylabel("coefficient")
        ax.set_title(title)
        if len(active) <= 10:
            ax.legend(fontsize=7, loc="upper left")
    for ax in axes.flat[len(panels):]:
        ax.set_visible(False)
    fig.tight_layout()
    _save(fig, path)


def plot_recovery_rates(labels, rates, errors, path, title="exact support recovery"):
    fig, ax = plt.subplots(figsize=(max(5, 0.6 * len(labels) + 2), 3.8))
    pos = np.arange(len(labels))
    ax.bar(pos, rates, yerr=errors, color="0.55", capsize=3)
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, rotation=45 if len(labels) > 6 else 0, ha="right" if len(labels) > 6 else "center")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("recovery rate")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_theorem1(rows, path, title="recovery vs A_n"):
    x = [r["lambda_mean"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.errorbar(x, [r["recovery_rate"] for r in rows], yerr=[3 * r["se"] for r in rows],
                marker="o", ms=3, capsize=2, label="P(exact recovery)")
    ax.plot(x, [r["a_n_rate"] for r in rows], "s--", ms=3, label="P(A_n)")
    ax.set_xscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
