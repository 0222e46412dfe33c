from __future__ import annotations

import hashlib

import numpy as np
import torch
from sklearn.base import BaseEstimator

from .._validation import check_is_fitted, check_positive_int
from ..biasset import BiasSet
from ..errors import ConfigError
from .checkpoint import load_checkpoint, save_checkpoint
from .config import DEFAULT_VOCAB, ModelConfig
from .decoding import beam_search, greedy_decode, teacher_forced_trace
from .model import CLASModel
from .training import train

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


class CLASRecognizer(BaseEstimator):
    """Contextual recognizer with the scikit-learn estimator interface.

    ``fit`` takes a list of :class:`~biasforge.corpus.TrainingExample` and a
    bias-set builder (passed as the ``bias_builder`` parameter, fitted on the
    same examples if needed).  ``predict`` decodes examples with the bias sets
    attached to them or given explicitly.
    """

    def __init__(self, frame_dim=16, enc_layers=2, enc_width=64, bias_enc_width=64, dec_layers=1, dec_width=64,
                 attn_dim=64, embed_dim=16, bias_builder=None, epochs=20, batch_size=32, learning_rate=3e-3,
                 optimizer="adam", clip_norm=5.0, frame_noise=0.0, beam_width=1, dtype="float64", seed=0):
        self.frame_dim = frame_dim
        self.enc_layers = enc_layers
        self.enc_width = enc_width
        self.bias_enc_width = bias_enc_width
        self.dec_layers = dec_layers
        self.dec_width = dec_width
        self.attn_dim = attn_dim
        self.embed_dim = embed_dim
        self.bias_builder = bias_builder
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.clip_norm = clip_norm
        self.frame_noise = frame_noise
        self.beam_width = beam_width
        self.dtype = dtype
        self.seed = seed

    def model_config(self):
        return ModelConfig(self.frame_dim, self.enc_layers, self.enc_width, self.bias_enc_width, self.dec_layers,
                           self.dec_width, self.attn_dim, self.embed_dim, DEFAULT_VOCAB)

    def fit(self, X, y=None, callback=None):
        if self.dtype not in _DTYPES:
            raise ConfigError(f"dtype must be one of {sorted(_DTYPES)}")
        check_positive_int(self.epochs, "epochs", 0)
        check_positive_int(self.batch_size, "batch_size")
        X = list(X)
        if y is not None:
            X = [_with_transcript(ex, t) for ex, t in zip(X, y)]
        builder = self.bias_builder
        if builder is not None and not hasattr(builder, "pool_"):
            builder.fit(X)
        self.model_ = CLASModel(self.model_config(), seed=self.seed, dtype=_DTYPES[self.dtype])
        self.training_log_ = train(self.model_, X, builder, self.epochs, self.batch_size, self.learning_rate,
                                   self.optimizer, self.clip_norm, self.seed, callback, self.frame_noise)
        return self

    def _phrase_lists(self, X, bias_sets):
        if bias_sets is None:
            bias_sets = [getattr(ex, "bias_set", None) for ex in X]
        return [[] if b is None else list(b.texts if isinstance(b, BiasSet) else b) for b in bias_sets]

    def predict(self, X, bias_sets=None, batch_size=64):
        check_is_fitted(self, "model_")
        X = list(X)
        lists = self._phrase_lists(X, bias_sets)
        out = []
        for start in range(0, len(X), batch_size):
            chunk = X[start : start + batch_size]
            if self.beam_width == 1:
                out.extend(greedy_decode(self.model_, [ex.frames for ex in chunk], lists[start : start + batch_size]))
            else:
                for ex, phrases in zip(chunk, lists[start : start + batch_size]):
                    out.append(beam_search(self.model_, ex.frames, phrases, self.beam_width)[0])
        return out

    def decode(self, frames, bias_set=None, beam_width=None):
        """Best transcript and its :class:`AttentionTrace` for one utterance."""
        check_is_fitted(self, "model_")
        phrases = self._phrase_lists([None], [bias_set])[0]
        text, trace, _ = beam_search(self.model_, frames, phrases, beam_width or self.beam_width)
        if isinstance(bias_set, BiasSet):
            trace.truth = bias_set.truth
        return text, trace

    def trace(self, example, bias_set=None):
        """Teacher-forced attention trace on the example's reference transcript."""
        check_is_fitted(self, "model_")
        bias_set = example.bias_set if bias_set is None else bias_set
        phrases = [] if bias_set is None else list(bias_set.texts)
        truth = () if bias_set is None else bias_set.truth
        return teacher_forced_trace(self.model_, example.frames, phrases, example.transcript, truth)

    def score(self, X, y=None, bias_sets=None):
        """Negative corpus WER (higher is better)."""
        from ..harness.metrics import corpus_wer

        X = list(X)
        refs = [ex.transcript for ex in X] if y is None else list(y)
        return -corpus_wer(refs, self.predict(X, bias_sets))["wer"]

    def params_digest(self):
        """SHA-256 over all parameter bytes; used to check evaluation is read-only."""
        check_is_fitted(self, "model_")
        h = hashlib.sha256()
        for name, p in self.model_.state_dict().items():
            h.update(name.encode())
            h.update(p.detach().numpy().tobytes())
        return h.hexdigest()

    def save(self, path, extra=None):
        check_is_fitted(self, "model_")
        save_checkpoint(path, self.model_, extra)

    @classmethod
    def load(cls, path):
        model, extra = load_checkpoint(path)
        cfg = model.config
        est = cls(cfg.frame_dim, cfg.enc_layers, cfg.enc_width, cfg.bias_enc_width, cfg.dec_layers, cfg.dec_width,
                  cfg.attn_dim, cfg.embed_dim, dtype=str(model.dtype).replace("torch.", ""))
        est.model_ = model
        est.training_log_ = None
        est.checkpoint_extra_ = extra
        return est


def _with_transcript(example, text):
    from ..corpus import TrainingExample

    return TrainingExample(example.utt_id, tuple(text.split()), example.nnp_spans, example.frames, example.bias_set)
