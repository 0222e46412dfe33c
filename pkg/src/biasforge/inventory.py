"""Fuzzy inventory: phonetically similar n-gram alternatives mined from N-best lists.

Two hypotheses of one utterance contribute a pair when they share a maximal
common prefix and suffix and differ in exactly one contiguous middle span on
each side, both spans non-empty and at most ``max_ngram_len`` tokens.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from sklearn.base import BaseEstimator

from ._validation import check_is_fitted, check_positive_int, check_probability
from .errors import DataFormatError
from .phonetics import Lexicon, phonetic_similarity, to_phonemes

DEFAULT_MAX_NGRAM = 3
DEFAULT_TAU_PHON = 0.6
DEFAULT_K = 3


@dataclass(frozen=True, eq=False)
class HypothesisCorpus:
    """Utterances with their (deduplicated) decoding hypotheses."""

    utterances: tuple = ()

    def __post_init__(self):
        clean = []
        for utt_id, hyps in self.utterances:
            seen = {}
            for h in hyps:
                toks = tuple(h.split()) if isinstance(h, str) else tuple(h)
                seen.setdefault(toks, None)
            if not seen:
                raise ValueError(f"utterance {utt_id!r} has no hypotheses")
            clean.append((str(utt_id), tuple(seen)))
        object.__setattr__(self, "utterances", tuple(clean))

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    @classmethod
    def from_lines(cls, lines, path=None):
        utts = []
        for lineno, raw in enumerate(lines, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            hyps = [p for p in parts[1:] if p.strip()]
            if not parts[0] or not hyps:
                raise DataFormatError("expected 'utt_id<TAB>hyp1<TAB>hyp2...'", path, lineno)
            utts.append((parts[0], hyps))
        return cls(tuple(utts))

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, path)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for utt_id, hyps in self.utterances:
                fh.write("\t".join([utt_id] + [" ".join(h) for h in hyps]) + "\n")


def differing_spans(s, t):
    """Middle spans left after stripping the maximal common prefix, then suffix."""
    n = min(len(s), len(t))
    p = 0
    while p < n and s[p] == t[p]:
        p += 1
    q = 0
    while q < n - p and s[len(s) - 1 - q] == t[len(t) - 1 - q]:
        q += 1
    return tuple(s[p : len(s) - q]), tuple(t[p : len(t) - q])


def count_pairs(utterances, max_ngram_len=DEFAULT_MAX_NGRAM):
    """Co-occurrence counts over (utt_id, hypotheses) records as a Counter of (a, b)."""
    counts = Counter()
    for _, hyps in utterances:
        for s, t in combinations(hyps, 2):
            a, b = differing_spans(s, t)
            if a and b and a != b and len(a) <= max_ngram_len and len(b) <= max_ngram_len:
                a, b = " ".join(a), " ".join(b)
                counts[a, b] += 1
                counts[b, a] += 1
    return counts


@dataclass(frozen=True, eq=False)
class FuzzyInventory:
    """n-gram -> ((alternative, count), ...) sorted by count desc then alternative."""

    pairs: dict = field(default_factory=dict)

    def __post_init__(self):
        table = {}
        for phrase, alts in self.pairs.items():
            merged = Counter()
            for alt, count in alts:
                if alt == phrase:
                    raise ValueError(f"self pair for {phrase!r}")
                if count <= 0:
                    raise ValueError(f"non-positive count for ({phrase!r}, {alt!r})")
                merged[alt] += int(count)
            table[phrase] = tuple(sorted(merged.items(), key=lambda kv: (-kv[1], kv[0])))
        object.__setattr__(self, "pairs", dict(sorted(table.items())))
        object.__setattr__(self, "_cache", {})

    @classmethod
    def from_counts(cls, counts):
        pairs = {}
        for (a, b), c in counts.items():
            if c > 0:
                pairs.setdefault(a, []).append((b, c))
        return cls(pairs)

    def count(self, a, b):
        for alt, c in self.pairs.get(a, ()):
            if alt == b:
                return c
        return 0

    def candidates(self, phrase):
        return self.pairs.get(phrase, ())

    def __contains__(self, phrase):
        return phrase in self.pairs

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        return isinstance(other, FuzzyInventory) and self.pairs == other.pairs

    def items(self):
        """Flat ``(phrase, alternative, count)`` triples in file order."""
        for phrase, alts in self.pairs.items():
            for alt, c in alts:
                yield phrase, alt, c

    def merge(self, other: "FuzzyInventory") -> "FuzzyInventory":
        counts = Counter({(a, b): c for a, b, c in self.items()})
        counts.update({(a, b): c for a, b, c in other.items()})
        return FuzzyInventory.from_counts(counts)

    def alternatives(self, phrase, k=DEFAULT_K, tau_phon=DEFAULT_TAU_PHON, lexicon=None):
        key = (phrase, k, tau_phon, id(lexicon))
        hit = self._cache.get(key)
        if hit is None:
            hit = tuple(fuzzy_alternatives(self, phrase, k, tau_phon, lexicon))
            self._cache[key] = hit
        return list(hit)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for phrase, alt, c in self.items():
                fh.write(f"{phrase}\t{alt}\t{c}\n")

    @classmethod
    def from_file(cls, path):
        pairs = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataFormatError("expected 'phrase<TAB>alternative<TAB>count'", path, lineno)
                try:
                    count = int(parts[2])
                except ValueError:
                    raise DataFormatError(f"bad count {parts[2]!r}", path, lineno) from None
                pairs.setdefault(parts[0], []).append((parts[1], count))
        try:
            return cls(pairs)
        except ValueError as exc:
            raise DataFormatError(str(exc), path) from None


def mine_pairs(corpus: HypothesisCorpus, max_ngram_len=DEFAULT_MAX_NGRAM) -> FuzzyInventory:
    check_positive_int(max_ngram_len, "max_ngram_len")
    return FuzzyInventory.from_counts(count_pairs(corpus, max_ngram_len))


def fuzzy_alternatives(inv: FuzzyInventory, phrase, k=DEFAULT_K, tau_phon=DEFAULT_TAU_PHON, lexicon=None):
    """Top-``k`` co-occurring alternatives whose phonetic similarity is at least ``tau_phon``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    check_probability(tau_phon, "tau_phon")
    lexicon = Lexicon.default() if lexicon is None else lexicon
    out = []
    if k == 0:
        return out
    source = to_phonemes(phrase, lexicon)
    for alt, _ in inv.candidates(phrase):
        if alt == phrase:
            continue
        if phonetic_similarity(source, to_phonemes(alt, lexicon), lexicon.inventory) >= tau_phon:
            out.append(alt)
            if len(out) == k:
                break
    return out


class FuzzyInventoryMiner(BaseEstimator):
    """Estimator wrapper: ``fit`` mines a corpus, queries go through :meth:`alternatives`."""

    def __init__(self, max_ngram_len=DEFAULT_MAX_NGRAM, k=DEFAULT_K, tau_phon=DEFAULT_TAU_PHON, lexicon=None):
        self.max_ngram_len = max_ngram_len
        self.k = k
        self.tau_phon = tau_phon
        self.lexicon = lexicon

    def fit(self, X, y=None):
        corpus = X if isinstance(X, HypothesisCorpus) else HypothesisCorpus(tuple(X))
        self.inventory_ = mine_pairs(corpus, self.max_ngram_len)
        return self

    def alternatives(self, phrase, k=None, tau_phon=None):
        check_is_fitted(self, "inventory_")
        return self.inventory_.alternatives(
            phrase,
            self.k if k is None else k,
            self.tau_phon if tau_phon is None else tau_phon,
            self.lexicon,
        )

    def transform(self, X):
        return [self.alternatives(p) for p in X]
