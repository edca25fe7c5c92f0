"""Stacked LSTM with inverted dropout and a one-unit dense head.

Gate math over the concatenation z_t = [h_prev | x_t]:

    f_t = sigmoid(W_f z_t + b_f)        forget gate
    i_t = sigmoid(W_i z_t + b_i)        input gate
    c~_t = tanh(W_c z_t + b_c)          candidate cell state
    c_t = f_t * c_prev + i_t * c~_t
    o_t = sigmoid(W_o z_t + b_o)        output gate
    h_t = o_t * tanh(c_t)

The backward pass is exact backpropagation through time over these
equations; training.finite_diff_gradcheck validates it against central
finite differences. All arithmetic is float64.

Layer stacking: every layer but the last feeds its full hidden sequence
to the next layer; the last layer emits only its final hidden state,
which the dense head maps to one scalar. Dropout (inverted: survivors
scaled by 1/(1-rate) at train time, identity at inference) is applied
to each layer's output, including the last hidden state before the head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng


class InvalidConfigError(ValueError):
    """Network configuration violates its invariants."""


class ShapeMismatchError(ValueError):
    """Array shapes inconsistent with the parameters or config."""


class EmptySequenceError(ValueError):
    """Forward pass needs at least one timestep."""


class BadRateError(ValueError):
    """Dropout rate outside [0, 1)."""


class StaleCacheError(ValueError):
    """Backward pass got a cache that does not match the forward call."""


DEFAULT_LAYER_UNITS = (50, 60, 80, 120)
DEFAULT_DROPOUT_RATES = (0.2, 0.3, 0.4, 0.5)

# sigmoid saturates to 0/1 long before +-500; the clamp only keeps exp finite
_SIGMOID_CLAMP = 500.0


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -_SIGMOID_CLAMP, _SIGMOID_CLAMP)))


@dataclass(frozen=True)
class NetworkConfig:
    """Stack description: one (units, dropout rate) pair per layer."""

    layer_units: tuple[int, ...] = DEFAULT_LAYER_UNITS
    dropout_rates: tuple[float, ...] = DEFAULT_DROPOUT_RATES
    input_features: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer_units", tuple(int(u) for u in self.layer_units))
        object.__setattr__(self, "dropout_rates", tuple(float(r) for r in self.dropout_rates))
        if not self.layer_units:
            raise InvalidConfigError("need at least one LSTM layer")
        if len(self.layer_units) != len(self.dropout_rates):
            raise InvalidConfigError(
                f"{len(self.layer_units)} layers but {len(self.dropout_rates)} dropout rates"
            )
        if any(u < 1 for u in self.layer_units):
            raise InvalidConfigError(f"layer units must be >= 1, got {self.layer_units}")
        if any(not 0.0 <= r < 1.0 for r in self.dropout_rates):
            raise InvalidConfigError(f"dropout rates must be in [0, 1), got {self.dropout_rates}")
        if self.input_features < 1:
            raise InvalidConfigError(f"input_features must be >= 1, got {self.input_features}")


@dataclass
class LstmLayerParams:
    """Per-gate weight blocks [hidden, hidden + input] with columns [h_prev | x_t]."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.w_f.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_f.shape[1] - self.w_f.shape[0]


@dataclass
class DenseParams:
    w: np.ndarray  # [hidden_last]
    b: np.ndarray  # [1]


@dataclass
class NetworkParams:
    """All trainable blocks. Gradient containers share this exact layout."""

    layers: list[LstmLayerParams]
    dense: DenseParams


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class GateRecord:
    f: np.ndarray
    i: np.ndarray
    o: np.ndarray
    candidate: np.ndarray


@dataclass
class LayerCache:
    """Time-major forward intermediates one layer needs for BPTT."""

    z: np.ndarray  # [T, B, hidden + input]
    f: np.ndarray  # [T, B, hidden]
    i: np.ndarray
    o: np.ndarray
    candidate: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    h: np.ndarray


@dataclass
class NetworkCache:
    """Per-layer caches plus dropout masks; retained only for training."""

    batch_size: int
    seq_len: int
    layer_caches: list[LayerCache]
    dropout_masks: list[np.ndarray | None]  # mask on each layer's output, None = identity
    final_hidden: np.ndarray  # [B, hidden_last] after dropout; input to the dense head
    mode: str = "train"


def param_blocks(params: NetworkParams) -> list[tuple[str, np.ndarray]]:
    """All parameter arrays in the declared order.

    This order is the contract shared by the optimizer state, the gradient
    probes, and the checkpoint layout: per layer w_f, w_i, w_c, w_o,
    b_f, b_i, b_c, b_o, then dense w and b.
    """
    blocks: list[tuple[str, np.ndarray]] = []
    for idx, layer in enumerate(params.layers):
        for name in ("w_f", "w_i", "w_c", "w_o", "b_f", "b_i", "b_c", "b_o"):
            blocks.append((f"layer{idx}.{name}", getattr(layer, name)))
    blocks.append(("dense.w", params.dense.w))
    blocks.append(("dense.b", params.dense.b))
    return blocks


def param_count(params: NetworkParams) -> int:
    return sum(arr.size for _, arr in param_blocks(params))


def count_params(config: NetworkConfig) -> int:
    """Trainable scalar count: 4*(in+hid+1)*hid per layer plus hid+1 for the head."""
    total = 0
    in_size = config.input_features
    for units in config.layer_units:
        total += 4 * (in_size + units + 1) * units
        in_size = units
    return total + in_size + 1


def zeros_like_params(params: NetworkParams) -> NetworkParams:
    layers = [
        LstmLayerParams(
            w_f=np.zeros_like(l.w_f),
            w_i=np.zeros_like(l.w_i),
            w_c=np.zeros_like(l.w_c),
            w_o=np.zeros_like(l.w_o),
            b_f=np.zeros_like(l.b_f),
            b_i=np.zeros_like(l.b_i),
            b_c=np.zeros_like(l.b_c),
            b_o=np.zeros_like(l.b_o),
        )
        for l in params.layers
    ]
    dense = DenseParams(w=np.zeros_like(params.dense.w), b=np.zeros_like(params.dense.b))
    return NetworkParams(layers=layers, dense=dense)


def init_params(config: NetworkConfig) -> NetworkParams:
    """Glorot-uniform weights, zero biases except forget bias 1.0, seeded PCG64.

    Draw order is fixed (per layer: w_f, w_i, w_c, w_o; dense last) so a seed
    pins every parameter bitwise.
    """
    rng = make_rng(config.seed)
    layers = []
    in_size = config.input_features
    for units in config.layer_units:
        cols = units + in_size
        limit = math.sqrt(6.0 / (cols + units))  # fan_in = cols, fan_out = units
        w_f, w_i, w_c, w_o = (
            rng.uniform(-limit, limit, size=(units, cols)) for _ in range(4)
        )
        layers.append(
            LstmLayerParams(
                w_f=w_f,
                w_i=w_i,
                w_c=w_c,
                w_o=w_o,
                # forget bias 1.0 keeps early cell-state gradients alive
                b_f=np.ones(units, dtype=np.float64),
                b_i=np.zeros(units, dtype=np.float64),
                b_c=np.zeros(units, dtype=np.float64),
                b_o=np.zeros(units, dtype=np.float64),
            )
        )
        in_size = units
    limit = math.sqrt(6.0 / (in_size + 1))
    dense = DenseParams(
        w=rng.uniform(-limit, limit, size=in_size), b=np.zeros(1, dtype=np.float64)
    )
    return NetworkParams(layers=layers, dense=dense)


def lstm_cell_forward(
    params: LstmLayerParams, x_t, prev: LstmState | None = None
) -> tuple[LstmState, GateRecord]:
    """One timestep of the gate equations. Accepts a vector or a [B, in] batch."""
    x = np.asarray(x_t, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[np.newaxis, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != params.input_size:
        raise ShapeMismatchError(
            f"expected input width {params.input_size}, got shape {x.shape}"
        )
    hid = params.hidden_size
    if prev is None:
        h_prev = np.zeros((x2.shape[0], hid), dtype=np.float64)
        c_prev = np.zeros((x2.shape[0], hid), dtype=np.float64)
    else:
        h_prev = np.atleast_2d(np.asarray(prev.h, dtype=np.float64))
        c_prev = np.atleast_2d(np.asarray(prev.c, dtype=np.float64))
        if h_prev.shape != (x2.shape[0], hid) or c_prev.shape != (x2.shape[0], hid):
            raise ShapeMismatchError(
                f"state shape {h_prev.shape}/{c_prev.shape} does not match batch {x2.shape[0]} x {hid}"
            )

    z = np.concatenate([h_prev, x2], axis=1)
    f = sigmoid(z @ params.w_f.T + params.b_f)
    i = sigmoid(z @ params.w_i.T + params.b_i)
    candidate = np.tanh(z @ params.w_c.T + params.b_c)
    o = sigmoid(z @ params.w_o.T + params.b_o)
    c = f * c_prev + i * candidate
    h = o * np.tanh(c)

    if single:
        h, c, f, i, o, candidate = (a[0] for a in (h, c, f, i, o, candidate))
    return LstmState(h=h, c=c), GateRecord(f=f, i=i, o=o, candidate=candidate)


def _packed_weights(params: LstmLayerParams) -> tuple[np.ndarray, np.ndarray]:
    # gate order f, i, c, o; packing turns four gemms per step into one
    w = np.concatenate([params.w_f, params.w_i, params.w_c, params.w_o], axis=0)
    b = np.concatenate([params.b_f, params.b_i, params.b_c, params.b_o])
    return w, b


def _layer_forward(params: LstmLayerParams, seq_tm: np.ndarray) -> LayerCache:
    """Run the recurrence over a time-major [T, B, in] sequence from zero state."""
    T, B, _ = seq_tm.shape
    hid = params.hidden_size
    w_z, b_z = _packed_weights(params)
    w_zt = w_z.T  # [hidden + input, 4*hidden]

    z = np.empty((T, B, hid + params.input_size), dtype=np.float64)
    f = np.empty((T, B, hid), dtype=np.float64)
    i = np.empty((T, B, hid), dtype=np.float64)
    o = np.empty((T, B, hid), dtype=np.float64)
    candidate = np.empty((T, B, hid), dtype=np.float64)
    c = np.empty((T, B, hid), dtype=np.float64)
    tanh_c = np.empty((T, B, hid), dtype=np.float64)
    h = np.empty((T, B, hid), dtype=np.float64)

    h_prev = np.zeros((B, hid), dtype=np.float64)
    c_prev = np.zeros((B, hid), dtype=np.float64)
    for t in range(T):
        zt = z[t]
        zt[:, :hid] = h_prev
        zt[:, hid:] = seq_tm[t]
        a = zt @ w_zt + b_z
        f[t] = sigmoid(a[:, :hid])
        i[t] = sigmoid(a[:, hid : 2 * hid])
        candidate[t] = np.tanh(a[:, 2 * hid : 3 * hid])
        o[t] = sigmoid(a[:, 3 * hid :])
        c[t] = f[t] * c_prev + i[t] * candidate[t]
        tanh_c[t] = np.tanh(c[t])
        h[t] = o[t] * tanh_c[t]
        h_prev = h[t]
        c_prev = c[t]

    return LayerCache(z=z, f=f, i=i, o=o, candidate=candidate, c=c, tanh_c=tanh_c, h=h)


def lstm_layer_forward(
    params: LstmLayerParams, sequence, return_sequences: bool = True
) -> tuple[np.ndarray, LayerCache]:
    """Unroll one layer left to right from zero initial state.

    sequence is [T, in] or [B, T, in]; output is all hidden states when
    return_sequences is set, else the final hidden state only.
    """
    arr = np.asarray(sequence, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[np.newaxis]
    if arr.ndim != 3 or arr.shape[2] != params.input_size:
        raise ShapeMismatchError(
            f"expected [B, T, {params.input_size}] sequence, got shape {arr.shape}"
        )
    if arr.shape[1] == 0:
        raise EmptySequenceError("sequence has zero timesteps")

    cache = _layer_forward(params, np.ascontiguousarray(arr.transpose(1, 0, 2)))
    if return_sequences:
        out = cache.h.transpose(1, 0, 2)
        return (out[0] if single else out), cache
    out = cache.h[-1]
    return (out[0] if single else out), cache


def dropout_apply(
    values, rate: float, mode: str = "train", rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout: train mode zeroes with probability `rate` and scales
    survivors by 1/(1-rate); inference is the identity. Returns (output, mask)."""
    if not 0.0 <= rate < 1.0:
        raise BadRateError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "inference"):
        raise ValueError(f"mode must be 'train' or 'inference', got {mode!r}")
    arr = np.asarray(values, dtype=np.float64)
    if mode == "inference" or rate == 0.0:
        return arr, np.ones_like(arr)
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = (rng.random(arr.shape) >= rate) / (1.0 - rate)
    return arr * mask, mask


def network_forward(
    params: NetworkParams,
    config: NetworkConfig,
    batch,
    mode: str = "inference",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, NetworkCache | None]:
    """Full stack on a [B, T, features] batch: one scalar prediction per sample.

    Train mode draws one dropout mask per layer (in layer order) from `rng`
    and returns the cache BPTT needs; inference returns (predictions, None)
    and is deterministic.
    """
    if mode not in ("train", "inference"):
        raise ValueError(f"mode must be 'train' or 'inference', got {mode!r}")
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != config.input_features:
        raise ShapeMismatchError(
            f"expected [B, T, {config.input_features}] batch, got shape {arr.shape}"
        )
    if arr.shape[1] == 0:
        raise EmptySequenceError("batch has zero timesteps")
    if len(params.layers) != len(config.layer_units):
        raise ShapeMismatchError(
            f"params have {len(params.layers)} layers, config names {len(config.layer_units)}"
        )
    train = mode == "train"
    if train and rng is None and any(r > 0.0 for r in config.dropout_rates):
        raise ValueError("train-mode forward with nonzero dropout needs an rng")

    B, T, _ = arr.shape
    x = np.ascontiguousarray(arr.transpose(1, 0, 2))  # time-major
    last = len(params.layers) - 1
    layer_caches: list[LayerCache] = []
    masks: list[np.ndarray | None] = []
    for idx, (layer, rate) in enumerate(zip(params.layers, config.dropout_rates)):
        cache = _layer_forward(layer, x)
        out = cache.h[-1] if idx == last else cache.h
        if train and rate > 0.0:
            out, mask = dropout_apply(out, rate, "train", rng)
        else:
            mask = None
        if train:
            layer_caches.append(cache)
        masks.append(mask)
        x = out

    final_hidden = x  # [B, hidden_last]
    predictions = (final_hidden @ params.dense.w + params.dense.b[0])[:, np.newaxis]
    if not train:
        return predictions, None
    net_cache = NetworkCache(
        batch_size=B,
        seq_len=T,
        layer_caches=layer_caches,
        dropout_masks=masks,
        final_hidden=final_hidden,
        mode="train",
    )
    return predictions, net_cache


def _layer_backward(
    params: LstmLayerParams, cache: LayerCache, d_hidden: np.ndarray
) -> tuple[np.ndarray, LstmLayerParams]:
    """BPTT through one layer.

    d_hidden is [T, B, hidden]: the loss gradient flowing into each hidden
    output (zeros except the final step for a last-state-only consumer).
    Returns the gradient w.r.t. the layer's input sequence plus its own
    parameter gradients.
    """
    T, B, hid = cache.h.shape
    in_size = params.input_size
    w_z, _ = _packed_weights(params)  # [4*hidden, hidden + input]

    g_w = np.zeros_like(w_z)
    g_b = np.zeros(4 * hid, dtype=np.float64)
    d_inputs = np.empty((T, B, in_size), dtype=np.float64)
    dh_next = np.zeros((B, hid), dtype=np.float64)
    dc_next = np.zeros((B, hid), dtype=np.float64)
    da = np.empty((B, 4 * hid), dtype=np.float64)

    for t in reversed(range(T)):
        f, i, o = cache.f[t], cache.i[t], cache.o[t]
        candidate, tanh_c = cache.candidate[t], cache.tanh_c[t]
        c_prev = cache.c[t - 1] if t > 0 else np.zeros((B, hid), dtype=np.float64)

        dh = d_hidden[t] + dh_next
        dc = dh * o * (1.0 - tanh_c * tanh_c) + dc_next
        da[:, :hid] = dc * c_prev * f * (1.0 - f)
        da[:, hid : 2 * hid] = dc * candidate * i * (1.0 - i)
        da[:, 2 * hid : 3 * hid] = dc * i * (1.0 - candidate * candidate)
        da[:, 3 * hid :] = dh * tanh_c * o * (1.0 - o)

        g_w += da.T @ cache.z[t]
        g_b += da.sum(axis=0)
        dz = da @ w_z
        dh_next = dz[:, :hid]
        d_inputs[t] = dz[:, hid:]
        dc_next = dc * f

    grads = LstmLayerParams(
        w_f=g_w[:hid],
        w_i=g_w[hid : 2 * hid],
        w_c=g_w[2 * hid : 3 * hid],
        w_o=g_w[3 * hid :],
        b_f=g_b[:hid],
        b_i=g_b[hid : 2 * hid],
        b_c=g_b[2 * hid : 3 * hid],
        b_o=g_b[3 * hid :],
    )
    return d_inputs, grads


def network_backward(
    params: NetworkParams,
    config: NetworkConfig,
    cache: NetworkCache | None,
    d_predictions,
) -> NetworkParams:
    """Exact gradients of the batch loss w.r.t. every parameter.

    d_predictions is the loss gradient at the network output ([B, 1] or [B]),
    e.g. training.mse_grad; the cache must come from a train-mode forward on
    the same batch so the dropout masks are reused exactly.
    """
    if cache is None or cache.mode != "train":
        raise StaleCacheError("backward needs the cache from a train-mode forward")
    if len(cache.layer_caches) != len(params.layers):
        raise StaleCacheError(
            f"cache has {len(cache.layer_caches)} layers, params have {len(params.layers)}"
        )
    d_pred = np.asarray(d_predictions, dtype=np.float64).reshape(-1)
    if d_pred.shape[0] != cache.batch_size:
        raise StaleCacheError(
            f"gradient batch {d_pred.shape[0]} does not match cache batch {cache.batch_size}"
        )

    g_dense = DenseParams(
        w=cache.final_hidden.T @ d_pred, b=np.array([d_pred.sum()], dtype=np.float64)
    )
    d_out = np.outer(d_pred, params.dense.w)  # [B, hidden_last]
    if cache.dropout_masks[-1] is not None:
        d_out = d_out * cache.dropout_masks[-1]

    n_layers = len(params.layers)
    layer_grads: list[LstmLayerParams] = [None] * n_layers  # type: ignore[list-item]
    d_seq: np.ndarray | None = None
    for idx in reversed(range(n_layers)):
        lc = cache.layer_caches[idx]
        if idx == n_layers - 1:
            d_hidden = np.zeros_like(lc.h)
            d_hidden[-1] = d_out
        else:
            d_hidden = d_seq
        d_inputs, grads = _layer_backward(params.layers[idx], lc, d_hidden)
        layer_grads[idx] = grads
        if idx > 0:
            mask = cache.dropout_masks[idx - 1]
            d_seq = d_inputs if mask is None else d_inputs * mask

    return NetworkParams(layers=layer_grads, dense=g_dense)
