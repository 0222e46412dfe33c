"""Evaluation: WER, model comparison, distractor sweeps, attention statistics and plots."""

from .evaluation import (
    AttentionMetrics, EvalReport, attention_metrics, bias_sets_digest, distractor_sweep, emission_window,
    evaluate, fuzzy_protocol_sets, read_traces, run_comparison, trace_statistics, write_traces,
)
from .metrics import align_counts, corpus_wer, wer
from .plots import emit_plots, plot_attention, plot_sweep

__all__ = [
    "AttentionMetrics", "EvalReport", "align_counts", "attention_metrics", "bias_sets_digest", "corpus_wer",
    "distractor_sweep", "emission_window", "emit_plots", "evaluate", "fuzzy_protocol_sets", "plot_attention",
    "plot_sweep", "read_traces", "run_comparison", "trace_statistics", "wer", "write_traces",
]
