"""Teacher-forced training with per-epoch bias-set resampling."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
import torch

from ..biasset import derive_seed
from ..errors import ConfigError, TrainingFault
from .model import CLASModel, make_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogRow:
    epoch: int
    step: int
    loss: float
    grad_norm: float


def phrases_of(example):
    bias = getattr(example, "bias_set", None)
    return [] if bias is None else list(bias.texts)


def loss_and_gradients(example, model: CLASModel, phrases=None):
    """Teacher-forced NLL of one example and the gradient of every named parameter."""
    phrases = phrases_of(example) if phrases is None else list(phrases)
    model.zero_grad(set_to_none=True)
    batch = make_batch(model, [example.frames], [phrases], [example.transcript])
    loss = model.nll(batch)
    loss.backward()
    grads = {}
    for name, p in model.named_parameters():
        g = p.grad
        grads[name] = np.zeros(tuple(p.shape)) if g is None else g.detach().numpy().astype(np.float64).copy()
    model.zero_grad(set_to_none=True)
    return float(loss.detach()), grads


def _batches(examples, batch_size, rng):
    """Shuffled batches; neighbouring chunks are length-sorted to cut padding."""
    order = rng.permutation(len(examples))
    chunk = batch_size * 8
    batches = []
    for start in range(0, len(order), chunk):
        part = sorted(order[start : start + chunk].tolist(), key=lambda i: (len(examples[i].frames), i))
        batches.extend(part[i : i + batch_size] for i in range(0, len(part), batch_size))
    return [batches[i] for i in rng.permutation(len(batches))]


def train(model: CLASModel, examples, bias_builder=None, epochs=20, batch_size=32, learning_rate=3e-3,
          optimizer="adam", clip_norm=5.0, seed=0, callback=None, frame_noise=0.0):
    """Mini-batch training; returns the list of :class:`LogRow` (one per update).

    ``frame_noise`` > 0 adds fresh Gaussian noise of that standard deviation to
    the input frames at every update, so the model cannot memorise a fixed
    noise sample.

    ``bias_builder`` must be a fitted :class:`~biasforge.biasset.BiasSetBuilder`
    (or ``None`` for no bias phrases); bias sets are drawn afresh every epoch.
    """
    if not examples:
        raise ConfigError("cannot train on an empty dataset")
    if frame_noise < 0:
        raise ConfigError("frame_noise must be >= 0")
    if optimizer == "adam":
        opt = torch.optim.Adam(model.parameters(), lr=learning_rate)
    elif optimizer == "sgd":
        opt = torch.optim.SGD(model.parameters(), lr=learning_rate)
    else:
        raise ConfigError(f"unknown optimizer {optimizer!r}")
    log = []
    step = 0
    model.train()
    for epoch in range(epochs):
        rng = np.random.default_rng(derive_seed(seed, "shuffle", epoch))
        if bias_builder is not None:
            phrase_lists = [list(b.texts) for b in bias_builder.transform(examples, epoch=epoch)]
        else:
            phrase_lists = [[] for _ in examples]
        for idx in _batches(examples, batch_size, rng):
            batch = make_batch(model, [examples[i].frames for i in idx], [phrase_lists[i] for i in idx],
                               [examples[i].transcript for i in idx])
            if frame_noise > 0:
                gen = torch.Generator().manual_seed(derive_seed(seed, "frame-noise", step))
                noise = torch.randn(batch.frames.shape, generator=gen, dtype=torch.float64)
                batch.frames = batch.frames + (frame_noise * noise).to(batch.frames.dtype)
            opt.zero_grad(set_to_none=True)
            try:
                loss = model.nll(batch) / len(idx)
            except TrainingFault as exc:
                raise TrainingFault(f"training diverged: {exc}", step) from exc
            loss.backward()
            norm = torch.nn.utils.clip_grad_norm_(model.parameters(), clip_norm)
            if not torch.isfinite(norm):
                raise TrainingFault("non-finite gradient norm", step)
            opt.step()
            row = LogRow(epoch, step, float(loss.detach()), float(norm))
            log.append(row)
            step += 1
        if callback is not None:
            callback(epoch, log)
        logger.info("epoch %d loss %.4f", epoch, np.mean([r.loss for r in log if r.epoch == epoch]))
    return log


def write_log(path, log):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "step", "loss", "grad_norm"])
        for r in log:
            w.writerow([r.epoch, r.step, repr(r.loss), repr(r.grad_norm)])
