"""Versioned JSON model checkpoints.

Layout (version 1): format marker, network config, scaler params, seed,
window, symbol, and every parameter block in the order param_blocks
declares (per layer w_f, w_i, w_c, w_o, b_f, b_i, b_c, b_o, then the dense
head). Floats are serialized with repr, so save -> load -> save is
byte-identical and values survive exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lstm_core import (
    DenseParams,
    LstmLayerParams,
    NetworkConfig,
    NetworkParams,
)
from .preprocess import ScalerParams

FORMAT_NAME = "seqcast-checkpoint"
FORMAT_VERSION = 1

_GATE_FIELDS = ("w_f", "w_i", "w_c", "w_o", "b_f", "b_i", "b_c", "b_o")


@dataclass(frozen=True)
class Checkpoint:
    params: NetworkParams
    config: NetworkConfig
    scaler: ScalerParams
    seed: int
    window: int
    symbol: str


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "symbol": ckpt.symbol,
        "seed": ckpt.seed,
        "window": ckpt.window,
        "scaler": {
            "min_value": ckpt.scaler.min_value,
            "max_value": ckpt.scaler.max_value,
        },
        "config": {
            "layer_units": list(ckpt.config.layer_units),
            "dropout_rates": list(ckpt.config.dropout_rates),
            "input_features": ckpt.config.input_features,
            "seed": ckpt.config.seed,
        },
        "params": {
            "layers": [
                {name: getattr(layer, name).tolist() for name in _GATE_FIELDS}
                for layer in ckpt.params.layers
            ],
            "dense": {"w": ckpt.params.dense.w.tolist(), "b": ckpt.params.dense.b.tolist()},
        },
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(checkpoint_bytes(ckpt))


def load_checkpoint(path: str | Path) -> Checkpoint:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} file: {path}")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")

    layers = [
        LstmLayerParams(
            **{name: np.array(block[name], dtype=np.float64) for name in _GATE_FIELDS}
        )
        for block in doc["params"]["layers"]
    ]
    dense = DenseParams(
        w=np.array(doc["params"]["dense"]["w"], dtype=np.float64),
        b=np.array(doc["params"]["dense"]["b"], dtype=np.float64),
    )
    config = NetworkConfig(
        layer_units=tuple(doc["config"]["layer_units"]),
        dropout_rates=tuple(doc["config"]["dropout_rates"]),
        input_features=doc["config"]["input_features"],
        seed=doc["config"]["seed"],
    )
    scaler = ScalerParams(
        min_value=doc["scaler"]["min_value"], max_value=doc["scaler"]["max_value"]
    )
    return Checkpoint(
        params=NetworkParams(layers=layers, dense=dense),
        config=config,
        scaler=scaler,
        seed=doc["seed"],
        window=doc["window"],
        symbol=doc["symbol"],
    )
