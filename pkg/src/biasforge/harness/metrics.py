"""Word error rate with substitution/deletion/insertion counts."""

from __future__ import annotations


def align_counts(ref, hyp):
    """Minimal-edit alignment counts ``(S, D, I)``.

    Among alignments with the fewest edits, the one with the most
    substitutions (fewest insertions + deletions) is chosen.
    """
    ref = ref.split() if isinstance(ref, str) else list(ref)
    hyp = hyp.split() if isinstance(hyp, str) else list(hyp)
    n, m = len(ref), len(hyp)
    # cell: (edits, indels, S, D, I)
    prev = [(j, j, 0, 0, j) for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [(i, i, 0, i, 0)]
        for j in range(1, m + 1):
            e, x, s, d, ins = prev[j - 1]
            if ref[i - 1] == hyp[j - 1]:
                diag = (e, x, s, d, ins)
            else:
                diag = (e + 1, x, s + 1, d, ins)
            e, x, s, d, ins = prev[j]
            up = (e + 1, x + 1, s, d + 1, ins)
            e, x, s, d, ins = cur[j - 1]
            left = (e + 1, x + 1, s, d, ins + 1)
            cur.append(min(diag, up, left, key=lambda c: (c[0], c[1])))
        prev = cur
    _, _, s, d, ins = prev[m]
    return s, d, ins


def wer(ref, hyp):
    """``(wer, S, D, I)`` for one reference/hypothesis pair."""
    ref_toks = ref.split() if isinstance(ref, str) else list(ref)
    if not ref_toks:
        raise ValueError("WER is undefined for an empty reference")
    s, d, i = align_counts(ref_toks, hyp)
    return (s + d + i) / len(ref_toks), s, d, i


def corpus_wer(refs, hyps):
    """Aggregate WER over paired lists: total edits / total reference words."""
    refs, hyps = list(refs), list(hyps)
    if len(refs) != len(hyps):
        raise ValueError("reference and hypothesis lists differ in length")
    S = D = I = N = 0
    for r, h in zip(refs, hyps):
        _, s, d, i = wer(r, h)
        S, D, I = S + s, D + d, I + i
        N += len(r.split() if isinstance(r, str) else r)
    if N == 0:
        raise ValueError("WER is undefined for an empty reference corpus")
    return {"wer": (S + D + I) / N, "substitutions": S, "deletions": D, "insertions": I, "ref_words": N,
            "utterances": len(refs)}
