"""Greedy and length-normalized beam-search decoding with attention traces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .model import NO_BIAS_LABEL, CLASModel, make_batch


@dataclass
class AttentionTrace:
    """Per-step attention rows for one decoded (or teacher-forced) utterance.

    ``bias`` has shape (T, N+1) with column 0 for the no-bias option and the
    remaining columns in the order of ``labels[1:]``; ``audio`` is (T, K).
    """

    labels: tuple
    bias: np.ndarray
    audio: np.ndarray
    outputs: tuple = ()
    truth: tuple = field(default=())

    def to_record(self):
        return {
            "labels": list(self.labels),
            "truth": list(self.truth),
            "outputs": list(self.outputs),
            "bias": self.bias.tolist(),
            "audio": self.audio.tolist(),
        }

    @classmethod
    def from_record(cls, rec):
        return cls(tuple(rec["labels"]), np.asarray(rec["bias"], dtype=np.float64),
                   np.asarray(rec["audio"], dtype=np.float64), tuple(rec["outputs"]), tuple(rec.get("truth", ())))


def canonical_order(texts):
    """Indices that sort phrase texts; the model always sees phrases in this order."""
    return sorted(range(len(texts)), key=lambda i: texts[i])


def _prepare(model, frames_list, phrase_lists):
    orders = [canonical_order(list(p)) for p in phrase_lists]
    sorted_lists = [[p[i] for i in o] for p, o in zip(phrase_lists, orders)]
    batch = make_batch(model, frames_list, sorted_lists)
    memory = model.memory(batch.frames, batch.frame_lengths, batch.phrases)
    return memory, orders, batch.frame_lengths


def _unsort_columns(rows, order):
    """Map bias-attention columns from canonical order back to the caller's order."""
    out = np.empty_like(rows)
    out[:, 0] = rows[:, 0]
    for sorted_pos, original in enumerate(order):
        out[:, original + 1] = rows[:, sorted_pos + 1]
    return out


@torch.no_grad()
def greedy_decode(model: CLASModel, frames_list, phrase_lists, max_len=None, return_traces=False):
    """Batched argmax decoding; ``max_len`` defaults to 4x the frame count per utterance."""
    model.eval()
    memory, orders, lengths = _prepare(model, frames_list, phrase_lists)
    B = len(frames_list)
    limits = (4 * lengths).tolist() if max_len is None else [max_len] * B
    y = torch.full((B,), model.vocab.sos, dtype=torch.long)
    state = model.initial_state(B)
    outputs = [[] for _ in range(B)]
    done = [False] * B
    bias_rows, audio_rows = [], []
    for t in range(max(limits)):
        logp, state, bw, aw = model.step(state, memory, y, step_id=t)
        y = logp.argmax(-1)
        if return_traces:
            bias_rows.append(bw.numpy().astype(np.float64))
            audio_rows.append(aw.numpy().astype(np.float64))
        for i, tok in enumerate(y.tolist()):
            if done[i]:
                continue
            outputs[i].append(tok)
            if tok == model.vocab.eos or len(outputs[i]) >= limits[i]:
                done[i] = True
        if all(done):
            break
    texts = [model.vocab.decode(o) for o in outputs]
    if not return_traces:
        return texts
    traces = []
    for i in range(B):
        steps = len(outputs[i])
        n = len(phrase_lists[i]) + 1
        bias = np.stack([r[i, :n] for r in bias_rows[:steps]])
        audio = np.stack([r[i, : int(lengths[i])] for r in audio_rows[:steps]])
        labels = (NO_BIAS_LABEL,) + tuple(phrase_lists[i])
        traces.append(AttentionTrace(labels, _unsort_columns(bias, orders[i]), audio,
                                     tuple(model.vocab.symbols[o] for o in outputs[i])))
    return texts, traces


@torch.no_grad()
def beam_search(model: CLASModel, frames, phrases, beam_width=4, max_len=None):
    """Length-normalized beam search for one utterance.

    Alive hypotheses are ranked by accumulated log-probability; finished ones
    (ending in the end symbol, or reaching ``max_len``) by log-probability per
    emitted label.  Returns ``(text, trace, normalized_score)``.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    model.eval()
    phrases = list(phrases)
    memory, orders, lengths = _prepare(model, [frames], [phrases])
    limit = int(4 * lengths[0]) if max_len is None else int(max_len)
    eos = model.vocab.eos
    # each hypothesis: (tokens, logp, bias rows, audio rows)
    alive = [((), 0.0, [], [])]
    state = model.initial_state(1)
    finished = []
    for t in range(limit):
        n = len(alive)
        y_prev = torch.tensor([h[0][-1] if h[0] else model.vocab.sos for h in alive], dtype=torch.long)
        mem = memory.select(torch.zeros(n, dtype=torch.long))
        logp, new_state, bw, aw = model.step(state, mem, y_prev, step_id=t)
        logp = logp.numpy().astype(np.float64)
        cands = []
        for h_idx, (toks, score, _, _) in enumerate(alive):
            for tok in range(logp.shape[1]):
                cands.append((score + float(logp[h_idx, tok]), h_idx, tok))
        cands.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_alive, keep = [], []
        for score, h_idx, tok in cands[:beam_width]:
            toks, _, brows, arows = alive[h_idx]
            hyp = (toks + (tok,), score, brows + [bw[h_idx].numpy()], arows + [aw[h_idx].numpy()])
            if tok == eos or t + 1 >= limit:
                finished.append(hyp)
            else:
                next_alive.append(hyp)
                keep.append(h_idx)
        if not next_alive:
            break
        alive = next_alive
        state = new_state.select(torch.tensor(keep, dtype=torch.long))
    best = max(enumerate(finished), key=lambda ih: (ih[1][1] / len(ih[1][0]), -ih[0]))[1]
    toks, score, brows, arows = best
    labels = (NO_BIAS_LABEL,) + tuple(phrases)
    bias = _unsort_columns(np.stack(brows).astype(np.float64), orders[0])
    trace = AttentionTrace(labels, bias, np.stack(arows).astype(np.float64), tuple(model.vocab.symbols[t] for t in toks))
    return model.vocab.decode(toks), trace, score / len(toks)


@torch.no_grad()
def teacher_forced_trace(model: CLASModel, frames, phrases, text, truth=()):
    """Attention rows while the reference ``text`` is forced through the decoder."""
    model.eval()
    phrases = list(phrases)
    order = canonical_order(phrases)
    sorted_phrases = [phrases[i] for i in order]
    batch = make_batch(model, [frames], [sorted_phrases], [text])
    memory = model.memory(batch.frames, batch.frame_lengths, batch.phrases)
    _, bias, audio = model.teacher_forced(memory, batch.targets, return_attention=True)
    bias = _unsort_columns(bias[0].numpy().astype(np.float64), order)
    labels = (NO_BIAS_LABEL,) + tuple(phrases)
    outputs = tuple(model.vocab.symbols[i] for i in batch.targets[0].tolist())
    return AttentionTrace(labels, bias, audio[0].numpy().astype(np.float64), outputs, tuple(truth))
