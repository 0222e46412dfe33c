"""Pronunciation lookup and a feature-weighted phonemic similarity metric.

Phonemes carry three categorical articulatory features (place, manner and
voicing for consonants; height, backness and rounding for vowels).  The
substitution cost between two phonemes is the fraction of differing feature
slots, or 1.0 across the consonant/vowel boundary.  Sequence similarity is
``1 - WED / max(len)`` with unit insertion/deletion cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

from ._validation import check_tokens
from .errors import DataFormatError

CONSONANT = "consonant"
VOWEL = "vowel"

PhonemeSeq = tuple  # tuple[str, ...] of inventory symbols


@dataclass(frozen=True)
class Phoneme:
    symbol: str
    kind: str
    features: tuple

    def __post_init__(self):
        if self.kind not in (CONSONANT, VOWEL):
            raise ValueError(f"phoneme class must be consonant or vowel, got {self.kind!r}")
        if not self.features or any(not f for f in self.features):
            raise ValueError(f"phoneme {self.symbol!r} has an incomplete feature assignment")


class PhonemeInventory:
    """Immutable symbol -> :class:`Phoneme` table."""

    def __init__(self, phonemes: Iterable[Phoneme]):
        table = {}
        n_features = None
        for ph in phonemes:
            if ph.symbol in table:
                raise ValueError(f"duplicate phoneme symbol {ph.symbol!r}")
            if n_features is None:
                n_features = len(ph.features)
            elif len(ph.features) != n_features:
                raise ValueError(f"phoneme {ph.symbol!r} has {len(ph.features)} features, expected {n_features}")
            table[ph.symbol] = ph
        if not table:
            raise ValueError("empty phoneme inventory")
        self._table = table
        self.n_features = n_features

    @classmethod
    def from_file(cls, path) -> "PhonemeInventory":
        with open(path, encoding="utf-8") as fh:
            return cls(_parse_phoneme_lines(fh, path))

    @classmethod
    def default(cls) -> "PhonemeInventory":
        return _default_inventory()

    def __getitem__(self, symbol) -> Phoneme:
        try:
            return self._table[symbol]
        except KeyError:
            raise KeyError(f"unknown phoneme symbol {symbol!r}") from None

    def __contains__(self, symbol):
        return symbol in self._table

    def __iter__(self):
        return iter(self._table.values())

    def __len__(self):
        return len(self._table)

    @property
    def symbols(self):
        return tuple(self._table)

    def feature_values(self, kind):
        """Sorted distinct values per feature slot for one phoneme class."""
        slots = [set() for _ in range(self.n_features)]
        for ph in self._table.values():
            if ph.kind == kind:
                for i, value in enumerate(ph.features):
                    slots[i].add(value)
        return [tuple(sorted(s)) for s in slots]

    def substitution_cost(self, a, b) -> float:
        pa, pb = self[a], self[b]
        if pa.kind != pb.kind:
            return 1.0
        diff = sum(x != y for x, y in zip(pa.features, pb.features))
        return diff / self.n_features


def _parse_phoneme_lines(lines, path=None):
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataFormatError("expected 'symbol<TAB>class<TAB>f1,f2,f3'", path, lineno)
        symbol, kind, feats = parts
        try:
            yield Phoneme(symbol.strip(), kind.strip(), tuple(f.strip() for f in feats.split(",")))
        except ValueError as exc:
            raise DataFormatError(str(exc), path, lineno) from None


def _data_path(name):
    return resources.files("biasforge").joinpath("data").joinpath(name)


@lru_cache(maxsize=None)
def _default_inventory():
    with _data_path("phonemes.tsv").open(encoding="utf-8") as fh:
        return PhonemeInventory(_parse_phoneme_lines(fh, "phonemes.tsv"))


@lru_cache(maxsize=None)
def _default_letter_rules():
    rules = {}
    with _data_path("letter_rules.tsv").open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip() or raw.startswith("#"):
                continue
            letter, _, phones = raw.rstrip("\n").partition("\t")
            if not phones:
                raise DataFormatError("expected 'letter<TAB>PH ...'", "letter_rules.tsv", lineno)
            rules[letter] = tuple(phones.split())
    return rules


@dataclass(frozen=True, eq=False)
class Lexicon:
    """Word -> pronunciations map.  Only the first pronunciation is used for similarity."""

    entries: Mapping[str, tuple] = field(default_factory=dict)
    inventory: PhonemeInventory = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        inv = self.inventory or PhonemeInventory.default()
        object.__setattr__(self, "inventory", inv)
        frozen = {}
        for word, prons in self.entries.items():
            if not word or word != word.lower() or any(c.isspace() for c in word):
                raise ValueError(f"lexicon words must be lowercase and whitespace-free, got {word!r}")
            prons = tuple(tuple(p) for p in prons)
            if not prons or any(not p for p in prons):
                raise ValueError(f"lexicon entry {word!r} needs at least one non-empty pronunciation")
            for pron in prons:
                for sym in pron:
                    if sym not in inv:
                        raise ValueError(f"lexicon entry {word!r} uses unknown phoneme {sym!r}")
            frozen[word] = prons
        object.__setattr__(self, "entries", frozen)

    @classmethod
    def from_lines(cls, lines, path=None, inventory=None) -> "Lexicon":
        entries: dict[str, list] = {}
        for lineno, raw in enumerate(lines, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            word, sep, pron = line.partition("\t")
            if not sep or not pron.split():
                raise DataFormatError("expected 'word<TAB>PH1 PH2 ...'", path, lineno)
            entries.setdefault(word.strip(), []).append(tuple(pron.split()))
        try:
            return cls(entries, inventory)
        except ValueError as exc:
            raise DataFormatError(str(exc), path) from None

    @classmethod
    def from_file(cls, path, inventory=None) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, path, inventory)

    @classmethod
    def default(cls) -> "Lexicon":
        return _default_lexicon()

    def __contains__(self, word):
        return word in self.entries

    def __len__(self):
        return len(self.entries)

    @property
    def words(self):
        return tuple(self.entries)

    def pronunciation(self, word) -> PhonemeSeq:
        """First-listed pronunciation, with clitic and letter-rule fallbacks."""
        prons = self.entries.get(word)
        if prons is not None:
            return prons[0]
        if word.endswith("'s") and word[:-2] in self.entries:
            return self.entries[word[:-2]][0] + ("Z",)
        return letters_to_phonemes(word)

    def to_lines(self):
        for word, prons in self.entries.items():
            for pron in prons:
                yield f"{word}\t{' '.join(pron)}\n"


@lru_cache(maxsize=None)
def _default_lexicon():
    with _data_path("lexicon.tsv").open(encoding="utf-8") as fh:
        return Lexicon.from_lines(fh, "lexicon.tsv")


def letters_to_phonemes(word) -> PhonemeSeq:
    """Deterministic letter-by-letter fallback; characters without a rule are skipped."""
    rules = _default_letter_rules()
    out = []
    for ch in word.lower():
        out.extend(rules.get(ch, ()))
    return tuple(out)


def to_phonemes(phrase, lexicon: Lexicon | None = None) -> PhonemeSeq:
    """Concatenate the first pronunciation of each word of ``phrase``."""
    lexicon = Lexicon.default() if lexicon is None else lexicon
    tokens = check_tokens(phrase, "phrase")
    out = []
    for tok in tokens:
        out.extend(lexicon.pronunciation(tok.lower()))
    return tuple(out)


def phoneme_substitution_cost(a, b, inventory: PhonemeInventory | None = None) -> float:
    inventory = PhonemeInventory.default() if inventory is None else inventory
    return inventory.substitution_cost(a, b)


def weighted_edit_distance(a: Sequence[str], b: Sequence[str], inventory: PhonemeInventory | None = None) -> float:
    """Edit distance with feature-based substitution cost and unit indels."""
    inventory = PhonemeInventory.default() if inventory is None else inventory
    cost = inventory.substitution_cost
    # validate symbols even when one side is empty
    for sym in a:
        inventory[sym]
    for sym in b:
        inventory[sym]
    prev = [float(j) for j in range(len(b) + 1)]
    for i, pa in enumerate(a, 1):
        cur = [float(i)]
        for j, pb in enumerate(b, 1):
            sub = prev[j - 1] + (0.0 if pa == pb else cost(pa, pb))
            cur.append(min(sub, prev[j] + 1.0, cur[j - 1] + 1.0))
        prev = cur
    return prev[-1]


def phonetic_similarity(a: Sequence[str], b: Sequence[str], inventory: PhonemeInventory | None = None) -> float:
    """``1 - WED(a, b) / max(len(a), len(b))``; two empty sequences are identical."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - weighted_edit_distance(a, b, inventory) / longest


def phrase_similarity(p, q, lexicon: Lexicon | None = None) -> float:
    """Phonetic similarity between two word n-grams."""
    return phonetic_similarity(to_phonemes(p, lexicon), to_phonemes(q, lexicon), (lexicon or Lexicon.default()).inventory)
