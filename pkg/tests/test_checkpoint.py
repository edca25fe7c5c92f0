from __future__ import annotations

import json

import numpy as np
import pytest

from seqcast.checkpoint import Checkpoint, checkpoint_bytes, load_checkpoint, save_checkpoint
from seqcast.lstm_core import NetworkConfig, init_params, param_blocks
from seqcast.preprocess import ScalerParams


def make_checkpoint(seed=5):
    cfg = NetworkConfig(layer_units=(4, 3), dropout_rates=(0.2, 0.3), seed=seed)
    return Checkpoint(
        params=init_params(cfg),
        config=cfg,
        scaler=ScalerParams(min_value=12.5, max_value=99.875),
        seed=seed,
        window=10,
        symbol="VNQ",
    )


def test_roundtrip_exact(tmp_path):
    ckpt = make_checkpoint()
    path = tmp_path / "model.ckpt.json"
    save_checkpoint(path, ckpt)
    loaded = load_checkpoint(path)
    assert loaded.config == ckpt.config
    assert loaded.scaler == ckpt.scaler
    assert loaded.seed == ckpt.seed
    assert loaded.window == ckpt.window
    assert loaded.symbol == ckpt.symbol
    for (name_a, a), (_, b) in zip(param_blocks(ckpt.params), param_blocks(loaded.params)):
        np.testing.assert_array_equal(a, b), name_a
        assert b.dtype == np.float64


def test_serialization_deterministic(tmp_path):
    a = checkpoint_bytes(make_checkpoint())
    b = checkpoint_bytes(make_checkpoint())
    assert a == b
    # save -> load -> save is byte-identical too
    path = tmp_path / "model.ckpt.json"
    path.write_bytes(a)
    assert checkpoint_bytes(load_checkpoint(path)) == a


def test_rejects_wrong_format_or_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format": "something-else", "version": 1}))
    with pytest.raises(ValueError):
        load_checkpoint(path)
    doc = json.loads(checkpoint_bytes(make_checkpoint()).decode())
    doc["version"] = 999
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_checkpoint(path)
