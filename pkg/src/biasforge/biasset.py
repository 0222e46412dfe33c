"""Per-example bias-phrase sets for training schemes and test protocols.

Schemes differ in where the reference-side phrases come from (random
n-grams vs. proper-noun spans) and whether phonetically similar
alternatives from a :class:`~biasforge.inventory.FuzzyInventory` are mixed in
as hard negatives.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted, check_positive_int, check_probability
from .errors import ConfigError, DataFormatError
from .inventory import DEFAULT_TAU_PHON, FuzzyInventory

SCHEMES = ("vanilla", "nnp", "fuzzy", "nnp_fuzzy")
REFERENCE, FUZZY, DISTRACTOR = "reference", "fuzzy", "distractor"
ORIGIN_RANK = {REFERENCE: 0, FUZZY: 1, DISTRACTOR: 2}


@dataclass(frozen=True)
class BiasPhrase:
    tokens: tuple
    origin: str = DISTRACTOR

    def __post_init__(self):
        toks = tuple(self.tokens.split()) if isinstance(self.tokens, str) else tuple(self.tokens)
        if not toks:
            raise ValueError("bias phrase must have at least one token")
        if self.origin not in ORIGIN_RANK:
            raise ValueError(f"unknown origin {self.origin!r}")
        object.__setattr__(self, "tokens", toks)

    @property
    def text(self):
        return " ".join(self.tokens)


@dataclass(frozen=True)
class BiasSet:
    phrases: tuple = ()
    truth: tuple = ()

    def __post_init__(self):
        phrases = tuple(p if isinstance(p, BiasPhrase) else BiasPhrase(p) for p in self.phrases)
        if len({p.tokens for p in phrases}) != len(phrases):
            raise ValueError("duplicate phrases in bias set")
        truth = tuple(sorted(int(i) for i in self.truth))
        if any(not 0 <= i < len(phrases) for i in truth) or len(set(truth)) != len(truth):
            raise ValueError("invalid truth indices")
        object.__setattr__(self, "phrases", phrases)
        object.__setattr__(self, "truth", truth)

    def __len__(self):
        return len(self.phrases)

    @property
    def texts(self):
        return tuple(p.text for p in self.phrases)

    @property
    def truth_texts(self):
        return tuple(self.phrases[i].text for i in self.truth)

    def permuted(self, order):
        """Bias set with phrases reordered so that new position ``j`` holds old ``order[j]``."""
        order = list(order)
        inv = {old: new for new, old in enumerate(order)}
        return BiasSet(tuple(self.phrases[i] for i in order), tuple(inv[i] for i in self.truth))

    def to_record(self):
        return {"phrases": [[p.text, p.origin] for p in self.phrases], "truth": list(self.truth)}

    @classmethod
    def from_record(cls, rec):
        return cls(tuple(BiasPhrase(t, o) for t, o in rec["phrases"]), tuple(rec["truth"]))


EMPTY = BiasSet()


def contains_subsequence(tokens, phrase_tokens):
    n = len(phrase_tokens)
    return any(tuple(tokens[i : i + n]) == tuple(phrase_tokens) for i in range(len(tokens) - n + 1))


def ngrams(tokens, max_len):
    """Distinct n-grams of length 1..max_len in first-occurrence order."""
    seen = {}
    for n in range(1, max_len + 1):
        for i in range(len(tokens) - n + 1):
            seen.setdefault(" ".join(tokens[i : i + n]), None)
    return list(seen)


def derive_seed(*keys) -> int:
    """Stable 63-bit seed from arbitrary printable keys (independent of PYTHONHASHSEED)."""
    h = hashlib.blake2b("\x1f".join(map(str, keys)).encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "nnp_fuzzy"
    n_max: int = 64
    k_ref: int = 3
    k_fuzzy: int = 3
    alpha_drop: float = 0.0
    max_ngram_len: int = 3
    tau_phon: float = DEFAULT_TAU_PHON
    fuzz_distractors: bool | None = None
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        check_positive_int(self.n_max, "n_max")
        check_positive_int(self.k_ref, "k_ref", 0)
        check_positive_int(self.k_fuzzy, "k_fuzzy", 0)
        check_positive_int(self.max_ngram_len, "max_ngram_len")
        check_probability(self.alpha_drop, "alpha_drop")
        check_probability(self.tau_phon, "tau_phon")
        if self.k_ref * (1 + self.k_fuzzy) > self.n_max:
            raise ConfigError("k_ref * (1 + k_fuzzy) must not exceed n_max")

    @property
    def uses_nnp(self):
        return self.scheme in ("nnp", "nnp_fuzzy")

    @property
    def uses_fuzzy(self):
        return self.scheme in ("fuzzy", "nnp_fuzzy")

    @property
    def fuzzes_distractors(self):
        if not self.uses_fuzzy:
            return False
        if self.fuzz_distractors is None:
            return self.scheme == "fuzzy"
        return bool(self.fuzz_distractors)

    def to_lines(self):
        return [f"{k}={'' if v is None else v}\n" for k, v in asdict(self).items()]

    @classmethod
    def from_mapping(cls, values):
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown scheme config key {key!r}")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise DataFormatError("expected key=value", path, lineno)
                values[key.strip()] = value.strip()
        try:
            return cls.from_mapping(values)
        except (ConfigError, ValueError) as exc:
            raise DataFormatError(str(exc), path) from None


def _coerce(key, raw):
    if not isinstance(raw, str):
        return raw
    if key == "scheme":
        return raw
    if key in ("alpha_drop", "tau_phon"):
        return float(raw)
    if key == "fuzz_distractors":
        if raw == "":
            return None
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"fuzz_distractors must be a boolean, got {raw!r}")
    return int(raw)


class _Collector:
    """Ordered, deduplicated phrase accumulator capped at ``n_max``."""

    def __init__(self, n_max):
        self.n_max = n_max
        self.origin = {}

    def full(self):
        return len(self.origin) >= self.n_max

    def add(self, text, origin):
        prev = self.origin.get(text)
        if prev is not None:
            if ORIGIN_RANK[origin] < ORIGIN_RANK[prev]:
                self.origin[text] = origin
            return
        if not self.full():
            self.origin[text] = origin


def _finish(tokens, collected: dict, rng) -> BiasSet:
    items = list(collected.items())
    order = rng.permutation(len(items)) if items else []
    phrases = tuple(BiasPhrase(items[i][0], items[i][1]) for i in order)
    truth = tuple(j for j, p in enumerate(phrases) if contains_subsequence(tokens, p.tokens))
    return BiasSet(phrases, truth)


def _alternatives(inv, phrase, cfg, lexicon):
    if inv is None or cfg.k_fuzzy == 0:
        return []
    return inv.alternatives(phrase, cfg.k_fuzzy, cfg.tau_phon, lexicon)


def build_training_bias_set(example, pool, inv: FuzzyInventory | None, cfg: SchemeConfig, rng, lexicon=None) -> BiasSet:
    """Sample one training bias set.

    ``example`` is a ``(tokens, nnp_phrases)`` pair or any object with
    ``tokens`` and ``nnp_spans`` attributes.  ``pool`` is the run-wide list
    of distractor phrases for this scheme.
    """
    tokens, nnp = _unpack_example(example)
    if rng.random() < cfg.alpha_drop:
        return EMPTY

    if cfg.uses_nnp:
        candidates = list(dict.fromkeys(nnp))
    else:
        candidates = ngrams(tokens, cfg.max_ngram_len)
    n_ref = min(cfg.k_ref, len(candidates))
    refs = [candidates[i] for i in rng.choice(len(candidates), n_ref, replace=False)] if n_ref else []

    col = _Collector(cfg.n_max)
    for phrase in refs:
        col.add(phrase, REFERENCE)
    if cfg.uses_fuzzy:
        for phrase in refs:
            for alt in _alternatives(inv, phrase, cfg, lexicon):
                if not contains_subsequence(tokens, alt.split()):
                    col.add(alt, FUZZY)

    if pool and not col.full():
        need = cfg.n_max - len(col.origin)
        fuzz = cfg.fuzzes_distractors
        for idx in _pool_order(len(pool), need, rng):
            if col.full():
                break
            phrase = pool[idx]
            if phrase in col.origin or contains_subsequence(tokens, phrase.split()):
                continue
            col.add(phrase, DISTRACTOR)
            if fuzz:
                for alt in _alternatives(inv, phrase, cfg, lexicon):
                    if not contains_subsequence(tokens, alt.split()):
                        col.add(alt, FUZZY)
    return _finish(tokens, col.origin, rng)


def _pool_order(n, need, rng):
    budget = 4 * need + 64
    if n <= budget:
        yield from rng.permutation(n)
        return
    first = rng.choice(n, budget, replace=False)
    yield from first
    taken = set(first.tolist())
    for i in rng.permutation(n):
        if i not in taken:
            yield i


def _unpack_example(example):
    if isinstance(example, tuple) and len(example) == 2:
        tokens, tagged = example
        tokens = tuple(tokens.split()) if isinstance(tokens, str) else tuple(tokens)
        if hasattr(tagged, "phrases"):
            return tokens, list(tagged.phrases)
        return tokens, [p if isinstance(p, str) else " ".join(p) for p in tagged]
    tokens = tuple(example.tokens)
    return tokens, [" ".join(tokens[s:e]) for s, e in example.nnp_spans]


def build_test_bias_set(correct, distractors, n_distractors, rng, fixed=(), n_max=None) -> BiasSet:
    """Correct phrases + ``fixed`` negatives + a random draw of distractors, shuffled.

    ``fixed`` phrases (e.g. fuzzy alternatives) are always included with origin
    ``fuzzy``; ``n_distractors`` is clamped to the available pool and, when
    ``n_max`` is given, to the remaining capacity.
    """
    if n_distractors < 0:
        raise ValueError("n_distractors must be >= 0")
    correct = list(dict.fromkeys(correct))
    taken = set(correct)
    fixed = [p for p in dict.fromkeys(fixed) if p not in taken]
    taken.update(fixed)
    cands = [p for p in dict.fromkeys(distractors) if p not in taken]
    n = min(n_distractors, len(cands))
    if n_max is not None:
        n = max(0, min(n, n_max - len(correct) - len(fixed)))
    picked = [cands[i] for i in rng.choice(len(cands), n, replace=False)] if n else []
    items = [(p, REFERENCE) for p in correct] + [(p, FUZZY) for p in fixed] + [(p, DISTRACTOR) for p in picked]
    order = rng.permutation(len(items)) if items else []
    phrases = tuple(BiasPhrase(items[i][0], items[i][1]) for i in order)
    truth = tuple(j for j, p in enumerate(phrases) if p.origin == REFERENCE)
    return BiasSet(phrases, truth)


def harvest_pool(examples, scheme, max_ngram_len=3):
    """Sorted distinct distractor phrases: NNP spans for nnp schemes, n-grams otherwise."""
    cfg_nnp = scheme in ("nnp", "nnp_fuzzy")
    pool = set()
    for ex in examples:
        tokens, nnp = _unpack_example(ex)
        pool.update(nnp if cfg_nnp else ngrams(tokens, max_ngram_len))
    return tuple(sorted(pool))


class BiasSetBuilder(BaseEstimator, TransformerMixin):
    """Draws training bias sets under one scheme.

    ``fit`` harvests the distractor pool from the training examples;
    ``transform`` samples one bias set per example with a seed derived from
    ``(seed, epoch, utt_id)`` so examples can be processed in any order.
    """

    def __init__(self, scheme="nnp_fuzzy", n_max=64, k_ref=3, k_fuzzy=3, alpha_drop=0.0, max_ngram_len=3,
                 tau_phon=DEFAULT_TAU_PHON, fuzz_distractors=None, seed=0, inventory=None, lexicon=None):
        self.scheme = scheme
        self.n_max = n_max
        self.k_ref = k_ref
        self.k_fuzzy = k_fuzzy
        self.alpha_drop = alpha_drop
        self.max_ngram_len = max_ngram_len
        self.tau_phon = tau_phon
        self.fuzz_distractors = fuzz_distractors
        self.seed = seed
        self.inventory = inventory
        self.lexicon = lexicon

    @property
    def config(self):
        return SchemeConfig(self.scheme, self.n_max, self.k_ref, self.k_fuzzy, self.alpha_drop,
                            self.max_ngram_len, self.tau_phon, self.fuzz_distractors, self.seed)

    def fit(self, X, y=None):
        self.config_ = self.config
        if self.config_.uses_fuzzy and self.inventory is None:
            raise ConfigError(f"scheme {self.scheme!r} needs a fuzzy inventory")
        self.pool_ = harvest_pool(X, self.scheme, self.max_ngram_len)
        return self

    def sample(self, example, epoch=0, utt_id=None):
        check_is_fitted(self, "pool_")
        utt_id = getattr(example, "utt_id", None) if utt_id is None else utt_id
        rng = np.random.default_rng(derive_seed(self.config_.seed, epoch, utt_id))
        return build_training_bias_set(example, self.pool_, self.inventory, self.config_, rng, self.lexicon)

    def transform(self, X, epoch=0):
        return [self.sample(ex, epoch) for ex in X]
