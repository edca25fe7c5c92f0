"""MSE loss, Adam optimization, the epoch/batch loop, and the gradient-check oracle."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .lstm_core import (
    NetworkConfig,
    NetworkParams,
    ShapeMismatchError,
    network_backward,
    network_forward,
    param_blocks,
)
from .preprocess import WindowedDataset
from .rng import make_rng


class EmptySetError(ValueError):
    """Loss and metrics need at least one (actual, predicted) pair."""


class EmptyDatasetError(ValueError):
    """Training needs at least one sample."""


@dataclass(frozen=True)
class PredictionSet:
    """Aligned actual/predicted value pairs."""

    y: np.ndarray
    y_hat: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        y_hat = np.asarray(self.y_hat, dtype=np.float64).reshape(-1)
        if y.shape != y_hat.shape:
            raise ValueError(f"length mismatch: {y.shape[0]} actuals, {y_hat.shape[0]} predictions")
        if y.size == 0:
            raise EmptySetError("need at least one (actual, predicted) pair")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "y_hat", y_hat)

    @property
    def n(self) -> int:
        return int(self.y.size)


def mse_loss(p: PredictionSet) -> float:
    """Mean of squared errors: (1/n) * sum((y - y_hat)^2)."""
    diff = p.y - p.y_hat
    return float(np.mean(diff * diff))


def mse_grad(p: PredictionSet) -> np.ndarray:
    """Gradient of mse_loss w.r.t. the predictions: (2/n) * (y_hat - y)."""
    return (2.0 / p.n) * (p.y_hat - p.y)


@dataclass
class AdamState:
    """First/second moment accumulators, shaped like param_blocks(params)."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(
    params: NetworkParams,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    blocks = [arr for _, arr in param_blocks(params)]
    return AdamState(
        m=[np.zeros_like(a) for a in blocks],
        v=[np.zeros_like(a) for a in blocks],
        t=0,
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(
    state: AdamState, params: NetworkParams, grads: NetworkParams
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update, in place on the parameter blocks."""
    p_blocks = param_blocks(params)
    g_blocks = param_blocks(grads)
    if len(state.m) != len(p_blocks):
        raise ShapeMismatchError(
            f"optimizer tracks {len(state.m)} blocks, params have {len(p_blocks)}"
        )
    for (name, p), (_, g), m, v in zip(p_blocks, g_blocks, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatchError(f"block {name}: param {p.shape}, grad {g.shape}, state {m.shape}")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for (_, p), (_, g), m, v in zip(p_blocks, g_blocks, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    shuffle_seed: int = 0
    clip_norm: float | None = None  # optional global-norm clip, off by default

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    loss: float  # sample-weighted mean training MSE over the epoch
    seconds: float


def _clip_global_norm(grads: NetworkParams, max_norm: float) -> None:
    total = 0.0
    blocks = [arr for _, arr in param_blocks(grads)]
    for g in blocks:
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in blocks:
            g *= scale


def train(
    params: NetworkParams,
    config: NetworkConfig,
    dataset: WindowedDataset,
    tc: TrainConfig,
    progress=None,
) -> tuple[NetworkParams, list[EpochLog]]:
    """Shuffled mini-batch training: forward, BPTT, Adam, once per batch.

    One seeded generator drives both the epoch shuffles and the dropout
    masks, so a (seed, config, data) triple reproduces the parameter
    trajectory bitwise. The final short batch is trained on, not dropped.
    """
    n = dataset.n_samples
    if n == 0:
        raise EmptyDatasetError("training dataset has no samples")
    rng = make_rng(tc.shuffle_seed)
    state = init_adam(params, lr=tc.learning_rate)
    logs: list[EpochLog] = []
    for epoch in range(1, tc.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(n)
        squared_sum = 0.0
        for lo in range(0, n, tc.batch_size):
            idx = order[lo : lo + tc.batch_size]
            batch = dataset.inputs[idx]
            pred, cache = network_forward(params, config, batch, mode="train", rng=rng)
            pset = PredictionSet(y=dataset.targets[idx], y_hat=pred[:, 0])
            squared_sum += mse_loss(pset) * len(idx)
            grads = network_backward(params, config, cache, mse_grad(pset))
            if tc.clip_norm is not None:
                _clip_global_norm(grads, tc.clip_norm)
            params, state = adam_step(state, params, grads)
        log = EpochLog(
            epoch=epoch, loss=squared_sum / n, seconds=time.perf_counter() - started
        )
        logs.append(log)
        if progress is not None:
            progress(log)
    return params, logs


def finite_diff_gradcheck(
    params: NetworkParams,
    config: NetworkConfig,
    inputs,
    targets,
    probe_count: int = 50,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Compare analytic BPTT gradients against central finite differences.

    Dropout rates are forced to zero (random masks would break the
    comparison). For each probed scalar the relative error is
    |a - fd| / max(|a|, |fd|, 1e-8); returns the max over the probes.
    """
    if probe_count <= 0:
        return 0.0
    cfg = replace(config, dropout_rates=(0.0,) * len(config.layer_units))
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)

    def batch_loss() -> float:
        pred, _ = network_forward(params, cfg, x, mode="inference")
        return mse_loss(PredictionSet(y=y, y_hat=pred[:, 0]))

    pred, cache = network_forward(params, cfg, x, mode="train")
    pset = PredictionSet(y=y, y_hat=pred[:, 0])
    analytic = network_backward(params, cfg, cache, mse_grad(pset))

    p_blocks = [arr for _, arr in param_blocks(params)]
    a_blocks = [arr for _, arr in param_blocks(analytic)]
    sizes = np.array([a.size for a in p_blocks])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = make_rng(seed)
    picks = rng.integers(0, int(offsets[-1]), size=probe_count)

    worst = 0.0
    for flat in picks:
        block = int(np.searchsorted(offsets, flat, side="right") - 1)
        off = int(flat - offsets[block])
        target = p_blocks[block]
        saved = float(target.flat[off])
        target.flat[off] = saved + step
        loss_plus = batch_loss()
        target.flat[off] = saved - step
        loss_minus = batch_loss()
        target.flat[off] = saved
        fd = (loss_plus - loss_minus) / (2.0 * step)
        a = float(a_blocks[block].flat[off])
        worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), 1e-8))
    return worst
