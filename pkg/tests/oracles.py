"""Independent reference implementations used by the tests.

None of these share code with the package; they are deliberately naive
(exhaustive enumeration, finite differences) so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import torch


def alignments(n, m):
    """All monotone sets of (i, j) pairings between n ref and m hyp positions."""
    for k in range(min(n, m) + 1):
        for ref_idx in itertools.combinations(range(n), k):
            for hyp_idx in itertools.combinations(range(m), k):
                yield list(zip(ref_idx, hyp_idx))


def brute_force_wer(ref, hyp):
    """(edits, S, D, I) minimising edits, then indels, by enumerating every alignment."""
    best = None
    for pairs in alignments(len(ref), len(hyp)):
        s = sum(ref[i] != hyp[j] for i, j in pairs)
        d = len(ref) - len(pairs)
        ins = len(hyp) - len(pairs)
        key = (s + d + ins, d + ins)
        if best is None or key < best[0]:
            best = (key, (s, d, ins))
    (edits, _), (s, d, ins) = best
    return edits, s, d, ins


def levenshtein_recursive(a, b, sub_cost, indel=1.0):
    """Textbook recursion without tables; only for short inputs."""
    if not a:
        return indel * len(b)
    if not b:
        return indel * len(a)
    return min(
        levenshtein_recursive(a[1:], b[1:], sub_cost, indel) + (0.0 if a[0] == b[0] else sub_cost(a[0], b[0])),
        levenshtein_recursive(a[1:], b, sub_cost, indel) + indel,
        levenshtein_recursive(a, b[1:], sub_cost, indel) + indel,
    )


def exhaustive_pair_counts(corpus, max_len):
    """Fuzzy pair counts by trying every prefix/suffix split of every hypothesis pair.

    For each ordered pair of distinct hypotheses, the longest common prefix is
    taken first and then the longest common suffix of what remains.
    """
    counts = {}
    for _, hyps in corpus:
        hyps = list(dict.fromkeys(tuple(h.split()) if isinstance(h, str) else tuple(h) for h in hyps))
        for x, y in itertools.permutations(hyps, 2):
            best = None
            for p in range(min(len(x), len(y)) + 1):
                if x[:p] != y[:p]:
                    continue
                for q in range(min(len(x), len(y)) - p + 1):
                    if q and x[len(x) - q :] != y[len(y) - q :]:
                        continue
                    if best is None or (p, q) > best:
                        best = (p, q)
            p, q = best
            a, b = x[p : len(x) - q], y[p : len(y) - q]
            if a and b and len(a) <= max_len and len(b) <= max_len:
                key = (" ".join(a), " ".join(b))
                counts[key] = counts.get(key, 0) + 1
    return counts


def exhaustive_decode(model, frames, phrases, max_len):
    """Best length-normalised sequence over every label string of length <= max_len.

    A string is complete when it ends with the end symbol or has max_len labels.
    Scores come from teacher forcing each candidate through the model.
    """
    from biasforge.clas import make_batch

    V = len(model.vocab)
    eos = model.vocab.eos
    order = sorted(range(len(phrases)), key=lambda i: phrases[i])
    phrases = [phrases[i] for i in order]
    batch = make_batch(model, [frames], [phrases])
    model.eval()
    best = None
    with torch.no_grad():
        memory = model.memory(batch.frames, batch.frame_lengths, batch.phrases)
        for length in range(1, max_len + 1):
            for seq in itertools.product(range(V), repeat=length):
                if eos in seq[:-1]:
                    continue
                if length < max_len and seq[-1] != eos:
                    continue
                state = model.initial_state(1)
                y = torch.tensor([model.vocab.sos])
                total = 0.0
                for t, tok in enumerate(seq):
                    logp, state, _, _ = model.step(state, memory, y, step_id=t)
                    total += float(logp[0, tok])
                    y = torch.tensor([tok])
                score = total / length
                if best is None or score > best[0] + 1e-12:
                    best = (score, seq)
    return best


def finite_difference_grads(loss_fn, params, eps=1e-5):
    """Central differences of ``loss_fn()`` for every entry of every tensor in ``params``."""
    grads = {}
    with torch.no_grad():
        for name, p in params:
            g = np.zeros(tuple(p.shape))
            flat = p.view(-1)
            for k in range(flat.numel()):
                old = float(flat[k])
                flat[k] = old + eps
                up = float(loss_fn())
                flat[k] = old - eps
                down = float(loss_fn())
                flat[k] = old
                g.reshape(-1)[k] = (up - down) / (2 * eps)
            grads[name] = g
    return grads


def relative_error(a, b):
    """``||a - b|| / max(||a||, ||b||)`` over a whole tensor (0 when both vanish)."""
    a, b = np.asarray(a, float).ravel(), np.asarray(b, float).ravel()
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)


def entropy(p):
    p = np.asarray(p, float)
    return -sum(x * math.log(x) for x in p if x > 0)
