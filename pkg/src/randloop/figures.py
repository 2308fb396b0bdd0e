"""Figure rendering for report output.

Each helper takes the rows already written to the delimited output and
saves a PNG next to it.  Rendering is optional everywhere; the data files
are the authoritative output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_partition_check(rows, path):
    """Bar chart of sampled partition-function estimates vs exact values.

    rows: (label, sampled, stderr, exact).
    """
    labels = [r[0] for r in rows]
    sampled = [r[1] for r in rows]
    err = [3 * r[2] for r in rows]
    exact = [r[3] for r in rows]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(rows)), 4))
    xs = range(len(rows))
    ax.errorbar(xs, sampled, yerr=err, fmt="o", capsize=4, label="sampler (3 s.e.)")
    ax.plot(xs, exact, "k_", markersize=18, label="exact")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("partition function")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_correlations(rows, path):
    """Sampled correlations with error bars against exact values.

    rows: (pair_label, observable, sampled, stderr, exact).
    """
    obs_names = sorted({r[1] for r in rows})
    fig, axes = plt.subplots(1, len(obs_names),
                             figsize=(4.5 * len(obs_names), 4), squeeze=False)
    for ax, name in zip(axes[0], obs_names):
        sub = [r for r in rows if r[1] == name]
        xs = range(len(sub))
        ax.errorbar(xs, [r[2] for r in sub], yerr=[3 * r[3] for r in sub],
                    fmt="o", capsize=4, label="sampler (3 s.e.)")
        ax.plot(xs, [r[4] for r in sub], "k_", markersize=18, label="exact")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([r[0] for r in sub], rotation=30, ha="right")
        ax.set_title(name)
    axes[0][0].set_ylabel("correlation")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_macro_loop(betas, means, stderrs, path):
    """Mean fraction of time-volume taken by the loop through the origin."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(betas, means, yerr=[3 * e for e in stderrs], fmt="o-",
                capsize=4)
    ax.set_xlabel("beta")
    ax.set_ylabel("E[l0 / (beta |Lambda|)]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
