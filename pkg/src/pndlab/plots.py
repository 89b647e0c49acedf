"""Figures written next to the TSV/JSON outputs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(p, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return p


def training_curves(histories: dict, path, title=""):
    """``histories`` maps seed -> list of per-epoch records."""
    has_energy = any("energy" in h[0] for h in histories.values() if h)
    fig, axes = plt.subplots(1, 2 if has_energy else 1, figsize=(9 if has_energy else 4.5, 3.2),
                             squeeze=False)
    for seed, hist in histories.items():
        ep = [r["epoch"] for r in hist]
        axes[0, 0].plot(ep, [r["val_acc"] for r in hist], lw=0.8, label=f"seed {seed}")
        if has_energy:
            axes[0, 1].plot(ep, [r["energy"] for r in hist], lw=0.8)
    axes[0, 0].set_xlabel("epoch")
    axes[0, 0].set_ylabel("validation accuracy")
    if has_energy:
        axes[0, 1].set_xlabel("epoch")
        axes[0, 1].set_ylabel("Dirichlet energy")
    if len(histories) <= 10:
        axes[0, 0].legend(fontsize=6)
    fig.suptitle(title, fontsize=9)
    return _save(fig, path)


def sweep_lines(cells, path, title=""):
    """``cells`` is a list of (gamma, T, mean, std)."""
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for g in sorted({c[0] for c in cells}):
        pts = sorted((c[1], c[2], c[3]) for c in cells if c[0] == g)
        t, m, s = (np.array(x) for x in zip(*pts))
        ax.errorbar(t, 100 * m, yerr=100 * s, marker="o", capsize=3, label=f"γ = {g:g}")
    ax.set_xscale("log")
    ax.set_xlabel("propagation steps T")
    ax.set_ylabel("test accuracy (%)")
    ax.legend(fontsize=7)
    ax.set_title(title, fontsize=9)
    return _save(fig, path)


def chain_targets(targets: dict, labels, hops, chains, path):
    """Probability of the true chain class along a few chains, one panel per target."""
    fig, axes = plt.subplots(1, len(targets), figsize=(2.6 * len(targets), 0.6 + 0.5 * len(chains)),
                             squeeze=False)
    length = int(hops.max()) + 1
    for ax, (name, P) in zip(axes[0], targets.items()):
        grid = np.array([[P[c * length + j, labels[c * length]] for j in range(length)]
                         for c in chains])
        im = ax.imshow(grid, vmin=0, vmax=1, cmap="viridis", aspect="auto")
        ax.set_title(name, fontsize=8)
        ax.set_xlabel("hops from base")
        ax.set_yticks(range(len(chains)))
        ax.set_yticklabels([f"chain {c}" for c in chains], fontsize=6)
    fig.colorbar(im, ax=axes[0].tolist(), shrink=0.8, label="p(chain class)")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(p, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return p


def energy_traces(traces: dict, path):
    """``traces`` maps seed -> {variant: list of energies from epoch 0}."""
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    styles = {"glnn": "-", "invkd": "--"}
    for seed, per in traces.items():
        for name, e in per.items():
            ax.plot(range(len(e)), e, styles.get(name, ":"), lw=0.8,
                    label=f"{name} seed {seed}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("tr(FᵀLF)")
    ax.legend(fontsize=6)
    return _save(fig, path)


def threshold_scatter(approx, exact, path, tolerance=0.02):
    fig, ax = plt.subplots(figsize=(3.8, 3.5))
    approx, exact = np.asarray(approx), np.asarray(exact)
    bad = np.abs(approx - exact) > tolerance
    ax.scatter(exact[~bad], approx[~bad], s=12, label="within tolerance")
    if bad.any():
        ax.scatter(exact[bad], approx[bad], s=18, marker="x", color="C3", label="outside tolerance")
    hi = max(float(exact.max(initial=0)), float(approx.max(initial=0)), 1e-3)
    ax.plot([0, hi], [0, hi], "k:", lw=0.8)
    ax.set_xlabel("exact threshold q*")
    ax.set_ylabel("closed-form threshold")
    ax.legend(fontsize=7)
    return _save(fig, path)
