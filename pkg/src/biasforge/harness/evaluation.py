"""Model comparison, distractor sweeps and attention statistics."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..biasset import BiasSet, build_test_bias_set, derive_seed
from ..errors import ConfigError, DataFormatError
from .metrics import corpus_wer

REPORT_FIELDS = ("model", "test_set", "wer", "substitutions", "deletions", "insertions", "ref_words", "utterances")


@dataclass
class EvalReport:
    """WER rows per (model, test set) plus optional sweep curves per model."""

    rows: list = field(default_factory=list)
    sweeps: dict = field(default_factory=dict)
    bias_digests: dict = field(default_factory=dict)

    def wer(self, model, test_set):
        for r in self.rows:
            if r["model"] == model and r["test_set"] == test_set:
                return r["wer"]
        raise KeyError((model, test_set))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in self.rows:
            w.writerow([r["model"], r["test_set"], repr(float(r["wer"]))] + [int(r[k]) for k in REPORT_FIELDS[3:]])
        return buf.getvalue()

    def sweep_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "n_distractors", "wer"])
        for model, curve in self.sweeps.items():
            for n, value in curve:
                w.writerow([model, n, repr(float(value))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, sweep_text=None):
        rows = []
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if tuple(header or ()) != REPORT_FIELDS:
            raise DataFormatError("unexpected report header", line=1)
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(REPORT_FIELDS):
                raise DataFormatError("wrong number of report fields", line=lineno)
            rows.append({"model": rec[0], "test_set": rec[1], "wer": float(rec[2]),
                         **{k: int(v) for k, v in zip(REPORT_FIELDS[3:], rec[3:])}})
        sweeps = {}
        if sweep_text:
            reader = csv.reader(io.StringIO(sweep_text))
            next(reader, None)
            for rec in reader:
                sweeps.setdefault(rec[0], []).append((int(rec[1]), float(rec[2])))
        return cls(rows, sweeps)

    def __eq__(self, other):
        return isinstance(other, EvalReport) and self.rows == other.rows and self.sweeps == other.sweeps


def bias_sets_digest(examples):
    """SHA-256 of the serialized bias sets attached to ``examples``."""
    h = hashlib.sha256()
    for ex in examples:
        rec = None if ex.bias_set is None else ex.bias_set.to_record()
        h.update(json.dumps([ex.utt_id, rec], sort_keys=True).encode())
    return h.hexdigest()


def evaluate(model, examples, bias_sets=None):
    refs = [ex.transcript for ex in examples]
    return corpus_wer(refs, model.predict(examples, bias_sets))


def run_comparison(models: dict, test_sets: dict) -> EvalReport:
    """WER of each model on each test set, all models seeing identical bias sets.

    ``test_sets`` maps names to example lists with ``bias_set`` attached.
    Models must share one architecture.
    """
    configs = {name: m.model_config() for name, m in models.items()}
    if len(set(configs.values())) > 1:
        raise ConfigError("models differ in architecture; refusing to compare")
    report = EvalReport()
    for set_name, examples in test_sets.items():
        report.bias_digests[set_name] = bias_sets_digest(examples)
    for model_name, model in models.items():
        before = model.params_digest()
        for set_name, examples in test_sets.items():
            if bias_sets_digest(examples) != report.bias_digests[set_name]:
                raise ConfigError(f"bias sets of {set_name!r} changed during evaluation")
            res = evaluate(model, examples)
            report.rows.append({"model": model_name, "test_set": set_name, **res})
        if model.params_digest() != before:
            raise RuntimeError(f"evaluation modified parameters of {model_name!r}")
    return report


def entity_phrases(example):
    return [" ".join(example.tokens[s:e]) for s, e in example.nnp_spans]


def distractor_sweep(model, examples, points, distractors, seed=0, correct=entity_phrases):
    """``[(n, WER)]`` with test bias sets of correct phrases + ``n`` random distractors."""
    points = [int(p) for p in points]
    if not points or points[0] != 0 or any(b <= a for a, b in zip(points, points[1:])):
        raise ValueError("sweep points must be strictly ascending and start at 0")
    distractors = list(distractors)
    curve = []
    for n in points:
        sets = []
        for ex in examples:
            rng = np.random.default_rng(derive_seed(seed, "sweep", n, ex.utt_id))
            sets.append(build_test_bias_set(correct(ex), distractors, n, rng))
        curve.append((n, evaluate(model, examples, sets)["wer"]))
    return curve


@dataclass
class AttentionMetrics:
    """Per-utterance attention statistics inside the truth phrase's emission window."""

    utt_ids: list = field(default_factory=list)
    mass_on_truth: list = field(default_factory=list)
    top1_truth_rate: list = field(default_factory=list)
    entropy: list = field(default_factory=list)

    def summary(self):
        out = {}
        for key in ("mass_on_truth", "top1_truth_rate", "entropy"):
            vals = np.asarray(getattr(self, key))
            out[f"mean_{key}"] = float(vals.mean()) if vals.size else math.nan
            out[f"median_{key}"] = float(np.median(vals)) if vals.size else math.nan
        out["utterances"] = len(self.utt_ids)
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["utt_id", "mass_on_truth", "top1_truth_rate", "entropy"])
        for row in zip(self.utt_ids, self.mass_on_truth, self.top1_truth_rate, self.entropy):
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue()


def emission_window(tokens, span):
    """Character-step range ``[start, end)`` of a token span in the space-joined reference."""
    start = sum(len(t) + 1 for t in tokens[: span[0]])
    end = start + len(" ".join(tokens[span[0] : span[1]]))
    return start, end


def trace_statistics(trace, window):
    """(mass_on_truth, top1_truth_rate, entropy) averaged over the window steps."""
    rows = trace.bias[window[0] : window[1]]
    cols = [i + 1 for i in trace.truth]
    mass = rows[:, cols].sum(axis=1)
    top1 = np.isin(rows.argmax(axis=1), cols)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.where(rows > 0, rows * np.log(rows), 0.0).sum(axis=1)
    return float(mass.mean()), float(top1.mean()), float(ent.mean())


def fuzzy_protocol_sets(examples, inventory, n_fuzzy=9, tau_phon=0.6, lexicon=None, seed=0):
    """Bias sets of one truth phrase (the first NNP span) plus its fuzzy alternatives."""
    sets = []
    for ex in examples:
        truth = entity_phrases(ex)[0]
        alts = inventory.alternatives(truth, n_fuzzy, tau_phon, lexicon)
        rng = np.random.default_rng(derive_seed(seed, "fuzzy-protocol", ex.utt_id))
        sets.append(build_test_bias_set([truth], [], 0, rng, fixed=alts))
    return sets


def attention_metrics(model, examples, bias_sets=None, inventory=None, n_fuzzy=9, tau_phon=0.6, lexicon=None,
                      seed=0):
    """Attention statistics under the truth + fuzzy-alternatives protocol.

    Returns ``(AttentionMetrics, traces)``; traces are teacher-forced on the
    reference so the emission window of the truth phrase is exact.
    """
    if bias_sets is None:
        if inventory is None:
            raise ValueError("need either bias_sets or an inventory")
        bias_sets = fuzzy_protocol_sets(examples, inventory, n_fuzzy, tau_phon, lexicon, seed)
    metrics = AttentionMetrics()
    traces = []
    for ex, bias in zip(examples, bias_sets):
        trace = model.trace(ex, bias)
        traces.append(trace)
        if not bias.truth:
            continue
        truth_text = bias.truth_texts[0].split()
        span = next(((s, e) for s, e in _spans_of(ex.tokens, truth_text)), None)
        if span is None:
            continue
        mass, top1, ent = trace_statistics(trace, emission_window(ex.tokens, span))
        metrics.utt_ids.append(ex.utt_id)
        metrics.mass_on_truth.append(mass)
        metrics.top1_truth_rate.append(top1)
        metrics.entropy.append(ent)
    return metrics, traces


def _spans_of(tokens, phrase):
    n = len(phrase)
    for i in range(len(tokens) - n + 1):
        if list(tokens[i : i + n]) == list(phrase):
            yield i, i + n


def write_traces(path, utt_ids, traces):
    """Line-delimited JSON, one trace per utterance."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for utt_id, tr in zip(utt_ids, traces):
            fh.write(json.dumps({"utt_id": utt_id, **tr.to_record()}, separators=(",", ":")) + "\n")


def read_traces(path):
    from ..clas.decoding import AttentionTrace

    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append((rec["utt_id"], AttentionTrace.from_record(rec)))
            except (ValueError, KeyError) as exc:
                raise DataFormatError(f"bad trace record: {exc}", path, lineno) from None
    return out
