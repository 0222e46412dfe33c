"""Synthetic desk-scale data: templated transcripts, pseudo-audio and N-best lists.

Audio frames are prototype vectors per phoneme plus Gaussian noise.  A
prototype is the phoneme's one-hot articulatory feature encoding projected
through a fixed random matrix, so phonemes sharing features sit close
together and phonetic confusability becomes acoustic confusability.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._validation import check_non_negative, check_positive_int, check_probability
from .biasset import BiasSet, derive_seed
from .errors import ConfigError, DataFormatError
from .phonetics import CONSONANT, VOWEL, Lexicon, PhonemeInventory, phonetic_similarity, to_phonemes
from .tagging import TaggedTranscript, tokenize

SLOT_RE = re.compile(r"<([A-Z_]+)>")
PROTOTYPE_SEED = 20190510


@dataclass(frozen=True)
class SynthConfig:
    frame_dim: int = 16
    dur_min: int = 1
    dur_max: int = 3
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.frame_dim, "frame_dim")
        check_positive_int(self.dur_min, "dur_min")
        check_positive_int(self.dur_max, "dur_max", self.dur_min)
        check_non_negative(self.noise_sigma, "noise_sigma")


def feature_encoding(inventory: PhonemeInventory):
    """symbol -> binary vector: class flag block followed by per-slot one-hot blocks."""
    blocks = []
    for kind in (CONSONANT, VOWEL):
        for slot, values in enumerate(inventory.feature_values(kind)):
            blocks.extend((kind, slot, v) for v in values)
    index = {b: i for i, b in enumerate(blocks)}
    width = 2 + len(blocks)
    out = {}
    for ph in inventory:
        vec = np.zeros(width)
        vec[0 if ph.kind == CONSONANT else 1] = 1.0
        for slot, value in enumerate(ph.features):
            vec[2 + index[ph.kind, slot, value]] = 1.0
        out[ph.symbol] = vec
    return out


@lru_cache(maxsize=16)
def _prototypes(inventory: PhonemeInventory, frame_dim: int):
    enc = feature_encoding(inventory)
    width = len(next(iter(enc.values())))
    proj = np.random.default_rng(PROTOTYPE_SEED).normal(0.0, 0.5, size=(width, frame_dim))
    return {sym: vec @ proj for sym, vec in enc.items()}


def prototypes(frame_dim=16, inventory: PhonemeInventory | None = None):
    """Deterministic symbol -> prototype frame map (read-only; do not mutate)."""
    return _prototypes(inventory or PhonemeInventory.default(), frame_dim)


def synth_audio(transcript, lexicon: Lexicon | None = None, cfg: SynthConfig | None = None, rng=None) -> np.ndarray:
    """Frame sequence of shape ``(K, frame_dim)`` for one transcript."""
    lexicon = lexicon or Lexicon.default()
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    protos = prototypes(cfg.frame_dim, lexicon.inventory)
    phones = to_phonemes(transcript, lexicon)
    durations = rng.integers(cfg.dur_min, cfg.dur_max + 1, size=len(phones))
    frames = np.repeat(np.stack([protos[p] for p in phones]), durations, axis=0)
    if cfg.noise_sigma > 0:
        frames = frames + rng.normal(0.0, cfg.noise_sigma, size=frames.shape)
    return frames


def prototype_distance(a, b, lexicon: Lexicon | None = None, frame_dim=16):
    """Mean Euclidean distance between prototype sequences along the best DTW path."""
    lexicon = lexicon or Lexicon.default()
    protos = prototypes(frame_dim, lexicon.inventory)
    x = np.stack([protos[p] for p in to_phonemes(a, lexicon)])
    y = np.stack([protos[p] for p in to_phonemes(b, lexicon)])
    dist = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=-1)
    n, m = dist.shape
    # (total cost, path length) lexicographic DP
    cost = np.full((n + 1, m + 1), np.inf)
    steps = np.zeros((n + 1, m + 1))
    cost[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            prev = min(
                (cost[i - 1, j - 1], steps[i - 1, j - 1]),
                (cost[i - 1, j], steps[i - 1, j]),
                (cost[i, j - 1], steps[i, j - 1]),
            )
            cost[i, j] = prev[0] + dist[i - 1, j - 1]
            steps[i, j] = prev[1] + 1
    return float(cost[n, m] / steps[n, m])


@lru_cache(maxsize=4096)
def _neighbours(lexicon: Lexicon, word: str, threshold: float):
    source = to_phonemes(word, lexicon)
    inv = lexicon.inventory
    out = []
    for other in lexicon.words:
        if other == word:
            continue
        target = lexicon.pronunciation(other)
        if target == source:
            continue
        if 1.0 - abs(len(source) - len(target)) / max(len(source), len(target)) < threshold:
            continue
        sim = phonetic_similarity(source, target, inv)
        if sim >= threshold:
            out.append((sim, other))
    out.sort(key=lambda sw: (-sw[0], sw[1]))
    return tuple(out)


def lexicon_neighbours(word, lexicon: Lexicon | None = None, threshold=0.6):
    """Lexicon words with similarity >= threshold to ``word``, nearest first."""
    return list(_neighbours(lexicon or Lexicon.default(), word, threshold))


def synth_hypotheses(transcript, lexicon: Lexicon | None = None, confusion_rate=0.3, rng=None,
                     max_alternates=12, threshold=0.6):
    """Stand-in N-best list: the transcript plus single-word confusions.

    Each word position is confusable with probability ``confusion_rate``.  A
    confusable word is replaced by its nearest lexicon neighbour, and by each
    further neighbour with probability equal to its phonetic similarity, one
    replacement per hypothesis.
    """
    check_probability(confusion_rate, "confusion_rate")
    lexicon = lexicon or Lexicon.default()
    rng = np.random.default_rng(0) if rng is None else rng
    tokens = tuple(transcript.split()) if isinstance(transcript, str) else tuple(transcript)
    hyps = {tokens: None}
    if confusion_rate == 0:
        return [" ".join(tokens)]
    for i, word in enumerate(tokens):
        if rng.random() >= confusion_rate:
            continue
        for rank, (sim, alt) in enumerate(_neighbours(lexicon, word, threshold)[:max_alternates]):
            if rank == 0 or rng.random() < sim:
                hyps.setdefault(tokens[:i] + (alt,) + tokens[i + 1 :], None)
    return [" ".join(h) for h in hyps]


@dataclass(eq=False)
class TrainingExample:
    utt_id: str
    tokens: tuple
    nnp_spans: tuple = ()
    frames: np.ndarray = field(default=None, repr=False)
    bias_set: BiasSet | None = None

    @property
    def transcript(self):
        return " ".join(self.tokens)

    @property
    def tagged(self):
        return TaggedTranscript(self.tokens, self.nnp_spans)

    def with_bias_set(self, bias_set):
        return TrainingExample(self.utt_id, self.tokens, self.nnp_spans, self.frames, bias_set)

    def to_record(self):
        rec = {
            "utt_id": self.utt_id,
            "transcript": self.transcript,
            "nnp_spans": [list(s) for s in self.nnp_spans],
            "frames": None if self.frames is None else self.frames.tolist(),
        }
        if self.bias_set is not None:
            rec["bias_set"] = self.bias_set.to_record()
        return rec

    @classmethod
    def from_record(cls, rec):
        frames = rec.get("frames")
        frames = None if frames is None else np.asarray(frames, dtype=np.float64)
        if frames is not None and (frames.ndim != 2 or not np.all(np.isfinite(frames))):
            raise ValueError("frames must be a finite 2-D array")
        bias = rec.get("bias_set")
        return cls(
            str(rec["utt_id"]),
            tuple(rec["transcript"].split()),
            tuple(tuple(s) for s in rec.get("nnp_spans", ())),
            frames,
            None if bias is None else BiasSet.from_record(bias),
        )


def parse_template(template):
    """Split a template into literal tokens and ``<SLOT>`` markers."""
    return tuple(tokenize(template.replace("<", " <").replace(">", "> ")))


def make_dataset(templates, entities, size, cfg: SynthConfig | None = None, lexicon: Lexicon | None = None,
                 prefix="utt", with_audio=True):
    """Instantiate ``size`` examples from templates with uniformly sampled slot fillers.

    Slot fillers are proper nouns by construction and become the examples'
    NNP spans.
    """
    cfg = cfg or SynthConfig()
    lexicon = lexicon or Lexicon.default()
    check_positive_int(size, "size", 0)
    parsed = [tuple(t.split()) if isinstance(t, str) else tuple(t) for t in (parse_template(x) for x in templates)]
    if not parsed:
        raise ConfigError("no templates given")
    fillers = {k.upper(): [tuple(f.split()) for f in v] for k, v in entities.items()}
    for tpl in parsed:
        for tok in tpl:
            m = SLOT_RE.fullmatch(tok.upper())
            if m and not fillers.get(m.group(1)):
                raise ConfigError(f"slot <{m.group(1)}> has no entities")
    rng = np.random.default_rng(derive_seed(cfg.seed, "dataset", prefix))
    width = len(str(max(size - 1, 0)))
    out = []
    for n in range(size):
        tpl = parsed[rng.integers(len(parsed))]
        tokens, spans = [], []
        for tok in tpl:
            m = SLOT_RE.fullmatch(tok.upper())
            if m:
                options = fillers[m.group(1)]
                fill = options[rng.integers(len(options))]
                spans.append((len(tokens), len(tokens) + len(fill)))
                tokens.extend(fill)
            else:
                tokens.append(tok)
        utt_id = f"{prefix}{n:0{max(width, 5)}d}"
        frames = None
        if with_audio:
            frames = synth_audio(tokens, lexicon, cfg, np.random.default_rng(derive_seed(cfg.seed, "audio", utt_id)))
        out.append(TrainingExample(utt_id, tuple(tokens), tuple(spans), frames))
    return out


def dataset_stats(examples):
    """Composition summary: utterance count, entity counts, average frames."""
    entities = Counter()
    for ex in examples:
        for s, e in ex.nnp_spans:
            entities[" ".join(ex.tokens[s:e])] += 1
    frames = [len(ex.frames) for ex in examples if ex.frames is not None]
    return {
        "utterances": len(examples),
        "distinct_entities": len(entities),
        "entity_counts": dict(sorted(entities.items())),
        "mean_frames": float(np.mean(frames)) if frames else 0.0,
    }


def write_dataset(path, examples):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_record(), separators=(",", ":")) + "\n")


def read_dataset(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(TrainingExample.from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataFormatError(f"bad dataset record: {exc}", path, lineno) from None
    return out


def read_lines(path):
    """Non-empty, non-comment lines of a text file (templates, entity lists)."""
    with open(path, encoding="utf-8") as fh:
        return [l.strip() for l in fh if l.strip() and not l.startswith("#")]


def hypothesis_corpus(examples, lexicon: Lexicon | None = None, confusion_rate=0.5, seed=0, **kwargs):
    """``(utt_id, hypotheses)`` records for a list of examples."""
    from .inventory import HypothesisCorpus

    records = []
    for ex in examples:
        rng = np.random.default_rng(derive_seed(seed, "hyp", ex.utt_id))
        records.append((ex.utt_id, synth_hypotheses(ex.tokens, lexicon, confusion_rate, rng, **kwargs)))
    return HypothesisCorpus(tuple(records))
