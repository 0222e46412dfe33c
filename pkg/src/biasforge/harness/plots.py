"""Deterministic SVG rendering of attention heatmaps and sweep curves."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..clas.model import NO_BIAS_LABEL  # noqa: E402

_RC = {"svg.fonttype": "none", "svg.hashsalt": "biasforge", "path.simplify": False}


def _save(fig, path):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_attention(trace, path, title=None):
    """Heatmap of bias attention (rows: phrases incl. no-bias, columns: output steps)."""
    labels = list(trace.labels)
    labels[0] = labels[0] or NO_BIAS_LABEL
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.18 * len(trace.bias)), 1.0 + 0.3 * len(labels)))
        ax.imshow(trace.bias.T, aspect="auto", cmap="Greys", vmin=0.0, vmax=1.0, interpolation="nearest")
        ax.set_yticks(range(len(labels)), labels)
        if trace.outputs:
            ax.set_xticks(range(len(trace.outputs)), [o if o != " " else "_" for o in trace.outputs])
        if title:
            ax.set_title(title)
        fig.tight_layout()
    _save(fig, path)
    return path


def plot_sweep(curves: dict, path, title="WER vs. number of distractors"):
    """One polyline per model; ``curves`` maps model name to ``[(n, wer), ...]``."""
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name in sorted(curves):
            xs, ys = zip(*curves[name])
            ax.plot(xs, ys, marker="o", label=name, gid=f"curve-{name}")
        ax.set_xlabel("max number of distracting bias phrases")
        ax.set_ylabel("WER")
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
    _save(fig, path)
    return path


def emit_plots(out_dir, report=None, traces=None, prefix=""):
    """Write report CSVs and SVG figures into ``out_dir``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if report is not None:
        p = os.path.join(out_dir, f"{prefix}report.csv")
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
        written.append(p)
        if report.sweeps:
            p = os.path.join(out_dir, f"{prefix}sweep.csv")
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write(report.sweep_csv())
            written.append(p)
            written.append(plot_sweep(report.sweeps, os.path.join(out_dir, f"{prefix}sweep.svg")))
    for utt_id, trace in traces or ():
        written.append(plot_attention(trace, os.path.join(out_dir, f"{prefix}attention_{utt_id}.svg"), utt_id))
    return written
