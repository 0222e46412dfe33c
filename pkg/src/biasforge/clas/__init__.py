"""Desk-scale contextual listen-attend-spell model.

The functions below are single-utterance views of :class:`CLASModel`; the
estimator :class:`CLASRecognizer` wraps training and batched decoding.
"""

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .config import DEFAULT_VOCAB, EOS, SOS, ModelConfig, Vocabulary
from .decoding import AttentionTrace, beam_search, greedy_decode, teacher_forced_trace
from .estimator import CLASRecognizer
from .model import NO_BIAS_LABEL, Batch, CLASModel, DecoderState, Memory, make_batch
from .training import loss_and_gradients, train, write_log


def _as_tensor(frames, model):
    return torch.as_tensor(np.asarray(frames, dtype=np.float64)).to(model.dtype)[None]


@torch.no_grad()
def encode_audio(frames, model: CLASModel):
    """Audio-encoder states, one row per frame."""
    states, _ = model.encode_audio(_as_tensor(frames, model))
    return states[0].numpy().astype(np.float64)


@torch.no_grad()
def encode_bias(bias_set, model: CLASModel):
    """Bias embeddings ``(N+1, W)``; row 0 is the learned no-bias embedding."""
    phrases = [] if bias_set is None else list(getattr(bias_set, "texts", bias_set))
    emb, _ = model.encode_bias([phrases])
    return emb[0].numpy().astype(np.float64)


def encode(frames, phrases, model: CLASModel) -> Memory:
    """Encoder memory for a single utterance, ready for :func:`decode_step`."""
    batch = make_batch(model, [frames], [list(phrases)])
    return model.memory(batch.frames, batch.frame_lengths, batch.phrases)


def decode_step(state, memory: Memory, y_prev, model: CLASModel):
    """One step for a single utterance.

    Returns ``(distribution, next_state, bias_weights, audio_weights)`` with
    numpy vectors; pass ``state=None`` and ``y_prev=None`` for the first step.
    """
    with torch.no_grad():
        if state is None:
            state = model.initial_state(1)
        y = torch.tensor([model.vocab.sos if y_prev is None else int(y_prev)], dtype=torch.long)
        logp, state, bw, aw = model.step(state, memory, y)
    return (np.exp(logp[0].numpy().astype(np.float64)), state,
            bw[0].numpy().astype(np.float64), aw[0].numpy().astype(np.float64))


def decode(frames, bias_set, model: CLASModel, beam_width=1):
    """Best grapheme string and its attention trace."""
    phrases = [] if bias_set is None else list(getattr(bias_set, "texts", bias_set))
    text, trace, _ = beam_search(model, frames, phrases, beam_width)
    return text, trace


__all__ = [
    "AttentionTrace", "Batch", "CLASModel", "CLASRecognizer", "DEFAULT_VOCAB", "DecoderState", "EOS", "Memory",
    "ModelConfig", "NO_BIAS_LABEL", "SOS", "Vocabulary", "beam_search", "decode", "decode_step", "encode",
    "encode_audio", "encode_bias", "greedy_decode", "load_checkpoint", "loss_and_gradients", "make_batch",
    "save_checkpoint", "teacher_forced_trace", "train", "write_log",
]
