"""Dual-attention encoder-decoder with a bias encoder and a learned no-bias option.

Tensors are float64 throughout so gradients can be checked against finite
differences.  Batches are padded; masks keep padded frames, padded bias
slots and padded target steps out of every reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..errors import ConfigError, TrainingFault
from .config import ModelConfig

DTYPE = torch.float64
NO_BIAS_LABEL = "<n/a>"


@dataclass
class Memory:
    """Encoder outputs for one padded batch."""

    audio: torch.Tensor  # (B, K, enc_width)
    audio_keys: torch.Tensor  # (B, K, attn_dim)
    audio_mask: torch.Tensor  # (B, K) bool
    bias: torch.Tensor  # (B, N+1, bias_enc_width); slot 0 is the no-bias embedding
    bias_keys: torch.Tensor
    bias_mask: torch.Tensor  # (B, N+1) bool

    def select(self, index):
        """Memory rows for ``index`` (used to expand beams)."""
        return Memory(*(t[index] for t in (self.audio, self.audio_keys, self.audio_mask,
                                           self.bias, self.bias_keys, self.bias_mask)))


@dataclass
class DecoderState:
    hidden: list  # per layer (B, dec_width)
    audio_context: torch.Tensor
    bias_context: torch.Tensor

    def select(self, index):
        return DecoderState([h[index] for h in self.hidden], self.audio_context[index], self.bias_context[index])


class CLASModel(nn.Module):
    def __init__(self, config: ModelConfig | None = None, seed=0, dtype=DTYPE):
        super().__init__()
        self.dtype = dtype
        cfg = config or ModelConfig()
        self.config = cfg
        self.vocab = cfg.vocabulary
        V = len(self.vocab)
        self.audio_rnn = nn.GRU(cfg.frame_dim, cfg.enc_width, cfg.enc_layers, batch_first=True, dtype=dtype)
        self.bias_embed = nn.Embedding(V, cfg.embed_dim, dtype=dtype)
        self.bias_rnn = nn.GRU(cfg.embed_dim, cfg.bias_enc_width, 1, batch_first=True, dtype=dtype)
        self.no_bias = nn.Parameter(torch.zeros(cfg.bias_enc_width, dtype=dtype))
        self.dec_embed = nn.Embedding(V, cfg.embed_dim, dtype=dtype)
        in_width = cfg.embed_dim + cfg.enc_width + cfg.bias_enc_width
        self.cells = nn.ModuleList(
            nn.GRUCell(in_width if i == 0 else cfg.dec_width, cfg.dec_width, dtype=dtype) for i in range(cfg.dec_layers)
        )
        self.audio_query = nn.Linear(cfg.dec_width, cfg.attn_dim, bias=False, dtype=dtype)
        self.audio_key = nn.Linear(cfg.enc_width, cfg.attn_dim, dtype=dtype)
        self.audio_score = nn.Linear(cfg.attn_dim, 1, bias=False, dtype=dtype)
        self.bias_query = nn.Linear(cfg.dec_width, cfg.attn_dim, bias=False, dtype=dtype)
        self.bias_key = nn.Linear(cfg.bias_enc_width, cfg.attn_dim, dtype=dtype)
        self.bias_score = nn.Linear(cfg.attn_dim, 1, bias=False, dtype=dtype)
        self.output = nn.Linear(cfg.dec_width + cfg.enc_width + cfg.bias_enc_width, V, dtype=dtype)
        self.reset_parameters(seed)

    def reset_parameters(self, seed=0):
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) from a numpy generator, independent of torch's RNG."""
        rng = np.random.default_rng(seed)
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name == "no_bias" or "embed" in name:
                    vals = rng.normal(0.0, 0.5, size=tuple(p.shape))
                else:
                    fan_in = p.shape[-1] if p.dim() > 1 else p.shape[0]
                    if "rnn" in name or "cells" in name:
                        fan_in = p.shape[0] // 3
                    bound = 1.0 / np.sqrt(fan_in)
                    vals = rng.uniform(-bound, bound, size=tuple(p.shape))
                p.copy_(torch.from_numpy(vals).to(p.dtype))

    def zero_parameters(self):
        with torch.no_grad():
            for p in self.parameters():
                p.zero_()
        return self

    def n_parameters(self):
        return sum(p.numel() for p in self.parameters())

    # ----- encoders -------------------------------------------------------------

    def encode_audio(self, frames, lengths=None):
        """``frames`` (B, K, D) -> states (B, K, enc_width) and validity mask."""
        if frames.dim() != 3 or frames.shape[-1] != self.config.frame_dim:
            raise ConfigError(f"expected frames of shape (B, K, {self.config.frame_dim}), got {tuple(frames.shape)}")
        if frames.shape[1] < 1:
            raise ConfigError("need at least one frame")
        states, _ = self.audio_rnn(frames)
        B, K = frames.shape[:2]
        if lengths is None:
            mask = torch.ones(B, K, dtype=torch.bool)
        else:
            mask = torch.arange(K)[None, :] < torch.as_tensor(lengths)[:, None]
        return states, mask

    def encode_phrases(self, phrases):
        """Final bias-encoder state for each phrase text, shape (len(phrases), bias_enc_width)."""
        if not phrases:
            return torch.zeros(0, self.config.bias_enc_width, dtype=self.dtype)
        ids = [self.vocab.encode(p) for p in phrases]
        lengths = torch.tensor([len(i) for i in ids])
        width = int(lengths.max())
        padded = torch.tensor([seq + [0] * (width - len(seq)) for seq in ids], dtype=torch.long)
        out, _ = self.bias_rnn(self.bias_embed(padded))
        return out[torch.arange(len(ids)), lengths - 1]

    def encode_bias(self, phrase_lists):
        """Per-example phrase lists -> (B, N+1, W) embeddings with slot 0 = no-bias, and mask."""
        unique = sorted({p for phrases in phrase_lists for p in phrases})
        where = {p: i for i, p in enumerate(unique)}
        table = torch.cat([self.no_bias[None, :], self.encode_phrases(unique)], 0)
        n = max((len(p) for p in phrase_lists), default=0) + 1
        rows = [[0] + [where[p] + 1 for p in phrases] + [0] * (n - 1 - len(phrases)) for phrases in phrase_lists]
        index = torch.tensor(rows, dtype=torch.long).reshape(len(phrase_lists), n)
        mask = torch.arange(n)[None, :] <= torch.tensor([len(p) for p in phrase_lists])[:, None]
        return table[index], mask

    def memory(self, frames, lengths, phrase_lists):
        audio, audio_mask = self.encode_audio(frames, lengths)
        bias, bias_mask = self.encode_bias(phrase_lists)
        return Memory(audio, self.audio_key(audio), audio_mask, bias, self.bias_key(bias), bias_mask)

    # ----- decoder --------------------------------------------------------------

    def initial_state(self, batch):
        cfg = self.config
        return DecoderState(
            [torch.zeros(batch, cfg.dec_width, dtype=self.dtype) for _ in range(cfg.dec_layers)],
            torch.zeros(batch, cfg.enc_width, dtype=self.dtype),
            torch.zeros(batch, cfg.bias_enc_width, dtype=self.dtype),
        )

    @staticmethod
    def _attend(query, keys, values, mask, score):
        energy = score(torch.tanh(keys + query[:, None, :])).squeeze(-1)
        energy = energy.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(energy, dim=-1)
        return weights, torch.bmm(weights[:, None, :], values)[:, 0]

    def step_features(self, state: DecoderState, memory: Memory, y_prev):
        """Advance the recurrent state and attend; returns (features, new state, bias weights, audio weights)."""
        x = torch.cat([self.dec_embed(y_prev), state.audio_context, state.bias_context], -1)
        hidden = []
        for cell, h in zip(self.cells, state.hidden):
            x = cell(x, h)
            hidden.append(x)
        audio_w, audio_ctx = self._attend(self.audio_query(x), memory.audio_keys, memory.audio, memory.audio_mask,
                                          self.audio_score)
        bias_w, bias_ctx = self._attend(self.bias_query(x), memory.bias_keys, memory.bias, memory.bias_mask,
                                        self.bias_score)
        feats = torch.cat([x, audio_ctx, bias_ctx], -1)
        return feats, DecoderState(hidden, audio_ctx, bias_ctx), bias_w, audio_w

    def step(self, state: DecoderState, memory: Memory, y_prev, step_id=None):
        """One decoding step: log-distribution over graphemes, next state, attention rows."""
        feats, new_state, bias_w, audio_w = self.step_features(state, memory, y_prev)
        logp = torch.log_softmax(self.output(feats), -1)
        if not torch.isfinite(logp).all():
            raise TrainingFault("non-finite output distribution", step_id)
        return logp, new_state, bias_w, audio_w

    def teacher_forced(self, memory: Memory, targets, return_attention=False):
        """Log-probabilities (B, T, V) for padded ``targets`` (B, T) fed with their own history."""
        B, T = targets.shape
        y_prev = torch.full((B,), self.vocab.sos, dtype=torch.long)
        state = self.initial_state(B)
        feats, bias_rows, audio_rows = [], [], []
        for t in range(T):
            f, state, bw, aw = self.step_features(state, memory, y_prev)
            feats.append(f)
            if return_attention:
                bias_rows.append(bw)
                audio_rows.append(aw)
            y_prev = targets[:, t]
        logp = torch.log_softmax(self.output(torch.stack(feats, 1)), -1)
        if return_attention:
            return logp, torch.stack(bias_rows, 1), torch.stack(audio_rows, 1)
        return logp

    def nll(self, batch):
        """Summed teacher-forced negative log-likelihood of a :class:`Batch`."""
        memory = self.memory(batch.frames, batch.frame_lengths, batch.phrases)
        logp = self.teacher_forced(memory, batch.targets)
        picked = logp.gather(-1, batch.targets[..., None]).squeeze(-1)
        loss = -(picked * batch.target_mask).sum()
        if not torch.isfinite(loss):
            raise TrainingFault("non-finite loss")
        return loss


@dataclass
class Batch:
    frames: torch.Tensor
    frame_lengths: torch.Tensor
    phrases: list
    targets: torch.Tensor
    target_mask: torch.Tensor


def make_batch(model: CLASModel, frames_list, phrase_lists, texts=None):
    """Pad frames and (optionally) grapheme targets terminated by the end symbol."""
    B = len(frames_list)
    lengths = torch.tensor([len(f) for f in frames_list])
    if B == 0 or int(lengths.min()) < 1:
        raise ConfigError("every utterance needs at least one frame")
    D = model.config.frame_dim
    frames = torch.zeros(B, int(lengths.max()), D, dtype=model.dtype)
    for i, f in enumerate(frames_list):
        f = np.asarray(f, dtype=np.float64)
        if f.ndim != 2 or f.shape[1] != D:
            raise ConfigError(f"frame dimension mismatch: expected {D}, got shape {f.shape}")
        frames[i, : len(f)] = torch.from_numpy(f).to(model.dtype)
    if texts is None:
        targets = torch.zeros(B, 0, dtype=torch.long)
        mask = torch.zeros(B, 0, dtype=model.dtype)
    else:
        ids = [model.vocab.encode(t) + [model.vocab.eos] for t in texts]
        T = max(len(i) for i in ids)
        targets = torch.full((B, T), model.vocab.eos, dtype=torch.long)
        mask = torch.zeros(B, T, dtype=model.dtype)
        for i, seq in enumerate(ids):
            targets[i, : len(seq)] = torch.tensor(seq)
            mask[i, : len(seq)] = 1.0
    return Batch(frames, lengths, [list(p) for p in phrase_lists], targets, mask)
