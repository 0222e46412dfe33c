"""Proper-noun span detection for reference transcripts.

Two backends share the :class:`ProperNounTagger` interface:

* ``"rules"``: union of greedy longest-match gazetteer hits and command-verb
  trigger rules (``call``, ``text``, ``play``, ``talk to``).
* ``"sidecar"``: spans ingested from a ``utt_id<TAB>start:end,...`` file, for
  users who run an external POS tagger.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted
from .errors import ConfigError, DataFormatError

POSSESSIVE = "'s"

DEFAULT_TRIGGERS = (("call",), ("text",), ("play",), ("talk", "to"))

# tokens that end a trigger span
STOP_WORDS = frozenset(
    """
    's a an the to on at in for with by and or of from about my me your his her their our
    please now today tomorrow tonight mobile home work cell number phone message song music
    that i im am is are was will be if so when
    """.split()
)


def tokenize(transcript) -> tuple:
    """Lowercase, split on whitespace and detach possessive ``'s`` clitics."""
    if isinstance(transcript, str):
        raw = transcript.lower().split()
    else:
        raw = [t.lower() for t in transcript]
    out = []
    for tok in raw:
        if tok.endswith(POSSESSIVE) and len(tok) > 2:
            out.extend((tok[:-2], POSSESSIVE))
        else:
            out.append(tok)
    return tuple(out)


@dataclass(frozen=True)
class TaggedTranscript:
    tokens: tuple
    nnp_spans: tuple = ()

    def __post_init__(self):
        tokens = tuple(self.tokens)
        spans = tuple((int(s), int(e)) for s, e in self.nnp_spans)
        last_end = 0
        for start, end in spans:
            if not 0 <= start < end <= len(tokens):
                raise ValueError(f"span ({start}, {end}) out of bounds for {len(tokens)} tokens")
            if start < last_end:
                raise ValueError("spans must be sorted and non-overlapping")
            last_end = end
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "nnp_spans", spans)

    @property
    def phrases(self):
        """Span token sequences joined by single spaces, in span order."""
        return tuple(" ".join(self.tokens[s:e]) for s, e in self.nnp_spans)

    @property
    def text(self):
        return " ".join(self.tokens)


def merge_spans(spans):
    """Union of half-open intervals as sorted, non-overlapping maximal spans."""
    merged = []
    for start, end in sorted(spans):
        if merged and start < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return tuple(merged)


def gazetteer_spans(tokens, gazetteer, max_len=None):
    """Greedy left-to-right longest-match over a set of token tuples."""
    if not gazetteer:
        return ()
    if max_len is None:
        max_len = max(len(p) for p in gazetteer)
    spans = []
    i = 0
    while i < len(tokens):
        for n in range(min(max_len, len(tokens) - i), 0, -1):
            if tuple(tokens[i : i + n]) in gazetteer:
                spans.append((i, i + n))
                i += n
                break
        else:
            i += 1
    return tuple(spans)


def trigger_spans(tokens, triggers=DEFAULT_TRIGGERS, stop_words=STOP_WORDS):
    spans = []
    i = 0
    while i < len(tokens):
        matched = None
        for trig in triggers:
            if tuple(tokens[i : i + len(trig)]) == trig:
                matched = trig
                break
        if matched is None:
            i += 1
            continue
        start = i + len(matched)
        end = start
        while end < len(tokens) and tokens[end] not in stop_words:
            end += 1
        if end > start:
            spans.append((start, end))
        i = max(end, i + 1)
    return tuple(spans)


def read_gazetteer(path):
    phrases = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = tuple(line.lower().split())
            if toks and not toks[0].startswith("#"):
                phrases.add(toks)
    return frozenset(phrases)


def default_gazetteer():
    with resources.files("biasforge").joinpath("data").joinpath("gazetteer.txt").open(encoding="utf-8") as fh:
        return frozenset(tuple(l.split()) for l in fh if l.strip() and not l.startswith("#"))


def parse_sidecar(lines, path=None):
    """Parse ``utt_id<TAB>start:end[,start:end...]`` records into a dict."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        utt_id, sep, field = line.partition("\t")
        if not sep or not utt_id:
            raise DataFormatError("expected 'utt_id<TAB>start:end[,start:end...]'", path, lineno)
        spans = []
        for item in filter(None, field.strip().split(",")):
            start, colon, end = item.partition(":")
            try:
                if not colon:
                    raise ValueError
                spans.append((int(start), int(end)))
            except ValueError:
                raise DataFormatError(f"malformed span {item!r}", path, lineno) from None
            if spans[-1][0] >= spans[-1][1] or spans[-1][0] < 0:
                raise DataFormatError(f"empty or negative span {item!r}", path, lineno)
        if utt_id in out:
            raise DataFormatError(f"duplicate utterance id {utt_id!r}", path, lineno)
        out[utt_id] = tuple(sorted(spans))
    return out


def read_sidecar(path):
    with open(path, encoding="utf-8") as fh:
        return parse_sidecar(fh, path)


def format_sidecar_line(utt_id, spans):
    return f"{utt_id}\t{','.join(f'{s}:{e}' for s, e in spans)}\n"


def write_sidecar(path, items):
    """Write ``(utt_id, spans)`` pairs."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for utt_id, spans in items:
            fh.write(format_sidecar_line(utt_id, spans))


class ProperNounTagger(BaseEstimator, TransformerMixin):
    """Mark proper-noun spans in tokenized transcripts.

    Parameters
    ----------
    backend : {"rules", "sidecar"}
    gazetteer : iterable of phrases, path, "default" or None
        Phrases for longest-match lookup (rules backend).  ``None`` disables it.
    triggers : tuple of token tuples
        Command prefixes after which tokens are tagged up to a stop word.
    sidecar : path or mapping, optional
        Pre-tagged spans keyed by utterance id (sidecar backend).
    """

    def __init__(self, backend="rules", gazetteer="default", triggers=DEFAULT_TRIGGERS, sidecar=None):
        self.backend = backend
        self.gazetteer = gazetteer
        self.triggers = triggers
        self.sidecar = sidecar

    def fit(self, X=None, y=None):
        if self.backend == "rules":
            if self.gazetteer is None:
                gaz = frozenset()
            elif isinstance(self.gazetteer, str) and self.gazetteer == "default":
                gaz = default_gazetteer()
            elif isinstance(self.gazetteer, (str, bytes)) or hasattr(self.gazetteer, "__fspath__"):
                gaz = read_gazetteer(self.gazetteer)
            else:
                gaz = frozenset(tuple(p.lower().split()) if isinstance(p, str) else tuple(p) for p in self.gazetteer)
            self.gazetteer_ = gaz
            self.max_phrase_len_ = max((len(p) for p in gaz), default=0)
            self.spans_ = {}
        elif self.backend == "sidecar":
            if self.sidecar is None:
                raise ConfigError("sidecar backend needs a 'sidecar' path or mapping")
            if isinstance(self.sidecar, dict):
                self.spans_ = {k: tuple(v) for k, v in self.sidecar.items()}
            else:
                self.spans_ = read_sidecar(self.sidecar)
            self.gazetteer_ = frozenset()
            self.max_phrase_len_ = 0
        else:
            raise ConfigError(f"unknown tagger backend {self.backend!r}")
        return self

    def tag(self, transcript, utt_id=None) -> TaggedTranscript:
        check_is_fitted(self, "spans_")
        tokens = tokenize(transcript)
        if self.backend == "sidecar":
            if utt_id is None:
                raise ValueError("sidecar backend needs an utterance id")
            return TaggedTranscript(tokens, self.spans_.get(utt_id, ()))
        spans = gazetteer_spans(tokens, self.gazetteer_, self.max_phrase_len_)
        spans += trigger_spans(tokens, tuple(tuple(t) for t in self.triggers))
        return TaggedTranscript(tokens, merge_spans(spans))

    def transform(self, X, utt_ids=None):
        if utt_ids is None:
            utt_ids = [None] * len(X)
        return [self.tag(x, u) for x, u in zip(X, utt_ids)]


def detect_proper_nouns(transcript, tagger: ProperNounTagger | None = None, utt_id=None) -> TaggedTranscript:
    if tagger is None:
        tagger = ProperNounTagger().fit()
    elif not hasattr(tagger, "spans_"):
        tagger.fit()
    return tagger.tag(transcript, utt_id)
