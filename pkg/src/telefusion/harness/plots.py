"""Deterministic SVG figures for run reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids so identical data gives identical bytes
plt.rcParams["svg.hashsalt"] = "telefusion"
plt.rcParams["svg.fonttype"] = "none"


def _save(w, rel, fig):
    try:
        return w.svg(rel, fig)
    finally:
        plt.close(fig)


def loss_plot(w, rel: str, curves: dict[str, dict], log: bool = False, ylabel: str = "loss"):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, c in curves.items():
        for key, style in (("train_loss", "-"), ("val_loss", "--")):
            if c.get(key):
                ax.plot(c["epoch"], c[key], style, label=f"{label} {key.split('_')[0]}")
        if c.get("val_accuracy"):
            ax.plot(c["epoch"], c["val_accuracy"], ":", label=f"{label} val accuracy")
    if log:
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    return _save(w, rel, fig)


def pair_histogram(w, rel: str, hist: dict, xlabel: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    lo, hi = np.asarray(hist["bin_lo"]), np.asarray(hist["bin_hi"])
    ax.bar(lo, hist["count_pre"], width=hi - lo, align="edge", alpha=0.5, label="global model")
    ax.bar(lo, hist["count_post"], width=hi - lo, align="edge", alpha=0.5, label="aggregated model")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("cases")
    ax.legend()
    return _save(w, rel, fig)


def pair_cdf(w, rel: str, cdf: dict, xlabel: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(cdf["mse_pre"], cdf["fraction"], where="post", label="global model")
    ax.step(cdf["mse_post"], cdf["fraction"], where="post", label="aggregated model")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.legend()
    return _save(w, rel, fig)


def table_bars(w, rel: str, rows: list[dict]):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(len(rows))
    ax.bar(x - 0.2, [r["mse_pre"] for r in rows], 0.4, label="global model")
    ax.bar(x + 0.2, [r["mse_post"] for r in rows], 0.4, label="aggregated model")
    ax.set_xticks(x, [f"({r['mean']}, {r['variance']})" for r in rows])
    ax.set_xlabel("power error (mean dB, variance dB$^2$)")
    ax.set_ylabel("MSE (dB$^2$)")
    ax.legend()
    return _save(w, rel, fig)


def multi_histogram(w, rel: str, hist: dict, names: list[str], xlabel: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    centers = (np.asarray(hist["bin_lo"]) + np.asarray(hist["bin_hi"])) / 2
    for n in names:
        ax.step(centers, hist[f"count_{n}"], where="mid", label=n)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("test links")
    ax.legend()
    return _save(w, rel, fig)


def multi_cdf(w, rel: str, cdf: dict, names: list[str], xlabel: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in names:
        ax.step(cdf[f"abs_error_{n}"], cdf["fraction"], where="post", label=n)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.legend()
    return _save(w, rel, fig)
