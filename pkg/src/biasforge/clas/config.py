from __future__ import annotations

from dataclasses import asdict, dataclass

from .._validation import check_positive_int
from ..errors import ConfigError, EncodingError

SOS = "<s>"
EOS = "</s>"
GRAPHEMES = tuple("abcdefghijklmnopqrstuvwxyz") + (" ", "'")
DEFAULT_VOCAB = (SOS, EOS) + GRAPHEMES


class Vocabulary:
    """Grapheme <-> index map.  Multi-character symbols are only used for start/end."""

    def __init__(self, symbols=DEFAULT_VOCAB):
        symbols = tuple(symbols)
        if SOS not in symbols or EOS not in symbols:
            raise ConfigError("vocabulary must contain start and end symbols")
        if len(set(symbols)) != len(symbols):
            raise ConfigError("vocabulary symbols must be unique")
        self.symbols = symbols
        self.index = {s: i for i, s in enumerate(symbols)}
        self.sos = self.index[SOS]
        self.eos = self.index[EOS]

    def __len__(self):
        return len(self.symbols)

    def encode(self, text):
        try:
            return [self.index[c] for c in text]
        except KeyError as exc:
            raise EncodingError(f"grapheme {exc.args[0]!r} in {text!r} is not in the vocabulary") from None

    def decode(self, ids):
        out = []
        for i in ids:
            if i == self.eos:
                break
            sym = self.symbols[i]
            if sym != SOS:
                out.append(sym)
        return "".join(out)


@dataclass(frozen=True)
class ModelConfig:
    frame_dim: int = 16
    enc_layers: int = 2
    enc_width: int = 64
    bias_enc_width: int = 64
    dec_layers: int = 1
    dec_width: int = 64
    attn_dim: int = 64
    embed_dim: int = 16
    vocab: tuple = DEFAULT_VOCAB

    def __post_init__(self):
        for name in ("frame_dim", "enc_layers", "enc_width", "bias_enc_width", "dec_layers", "dec_width",
                     "attn_dim", "embed_dim"):
            check_positive_int(getattr(self, name), name)
        object.__setattr__(self, "vocab", tuple(self.vocab))
        Vocabulary(self.vocab)

    @property
    def vocabulary(self):
        return Vocabulary(self.vocab)

    def to_dict(self):
        d = asdict(self)
        d["vocab"] = list(self.vocab)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "vocab" in d:
            d["vocab"] = tuple(d["vocab"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown model config keys {sorted(unknown)}")
        return cls(**d)
