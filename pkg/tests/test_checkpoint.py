import json
import struct

import numpy as np
import pytest

from lodsdf.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from lodsdf.network import NetworkConfig, init_params


def make_model(seed=0, conditioning="hidden"):
    cfg = NetworkConfig(n_layers=4, hidden_dim=6, latent_dim=3, total_bandwidth=16.0,
                        dtype="float32", conditioning=conditioning)
    params = init_params(cfg, rng_seed=seed)
    codebook = np.random.default_rng(seed).normal(0, 0.01, (5, 3)).astype(np.float32)
    return params, codebook


@pytest.mark.parametrize("conditioning", ["hidden", "input", "output"])
def test_round_trip_bit_exact(tmp_path, conditioning):
    params, codebook = make_model(conditioning=conditioning)
    path = tmp_path / "m.ckpt"
    save_checkpoint(params, codebook, path, shape_names=[f"s{i}" for i in range(5)])
    loaded, cb, meta = load_checkpoint(path)
    np.testing.assert_array_equal(cb, codebook)
    for (na, ta), (nb, tb) in zip(params.tensors(), loaded.tensors()):
        assert na == nb
        np.testing.assert_array_equal(ta, tb)
    assert meta.shape_names == [f"s{i}" for i in range(5)]
    assert meta.config.conditioning == params.config.conditioning
    np.testing.assert_allclose(meta.config.bound_schedule, params.config.bound_schedule)


def test_bad_magic(tmp_path):
    path = tmp_path / "x.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_truncated_payload(tmp_path):
    params, codebook = make_model()
    path = tmp_path / "m.ckpt"
    save_checkpoint(params, codebook, path)
    blob = path.read_bytes()
    (tmp_path / "t.ckpt").write_bytes(blob[:-10])
    with pytest.raises(CheckpointError, match="payload length mismatch"):
        load_checkpoint(tmp_path / "t.ckpt")


def _retamper(blob, **edits):
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header = json.loads(blob[8 : 8 + header_len])
    header.update(edits)
    new_header = json.dumps(header, sort_keys=True).encode()
    return blob[:4] + struct.pack("<I", len(new_header)) + new_header + blob[8 + header_len:]


def test_tampered_layer_count_names_field(tmp_path):
    params, codebook = make_model()
    path = tmp_path / "m.ckpt"
    save_checkpoint(params, codebook, path)
    blob = path.read_bytes()
    # inconsistent schedule length is caught while rebuilding the config
    (tmp_path / "t1.ckpt").write_bytes(_retamper(blob, n_layers=9))
    with pytest.raises(CheckpointError, match="9 layers"):
        load_checkpoint(tmp_path / "t1.ckpt")
    # a self-consistent lie about n_layers fails the payload audit, naming it
    (tmp_path / "t2.ckpt").write_bytes(
        _retamper(blob, n_layers=5, bound_schedule=[1.0, 2.0, 3.0, 4.0, 6.0])
    )
    with pytest.raises(CheckpointError, match="n_layers=5"):
        load_checkpoint(tmp_path / "t2.ckpt")


def test_version_mismatch(tmp_path):
    params, codebook = make_model()
    path = tmp_path / "m.ckpt"
    save_checkpoint(params, codebook, path)
    blob = path.read_bytes()
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header = json.loads(blob[8 : 8 + header_len])
    header["format_version"] = 99
    new_header = json.dumps(header, sort_keys=True).encode()
    tampered = blob[:4] + struct.pack("<I", len(new_header)) + new_header + blob[8 + header_len:]
    (tmp_path / "v.ckpt").write_bytes(tampered)
    with pytest.raises(CheckpointError, match="format_version"):
        load_checkpoint(tmp_path / "v.ckpt")


def test_missing_header_field(tmp_path):
    params, codebook = make_model()
    path = tmp_path / "m.ckpt"
    save_checkpoint(params, codebook, path)
    blob = path.read_bytes()
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header = json.loads(blob[8 : 8 + header_len])
    del header["bound_schedule"]
    new_header = json.dumps(header, sort_keys=True).encode()
    tampered = blob[:4] + struct.pack("<I", len(new_header)) + new_header + blob[8 + header_len:]
    (tmp_path / "m2.ckpt").write_bytes(tampered)
    with pytest.raises(CheckpointError, match="bound_schedule"):
        load_checkpoint(tmp_path / "m2.ckpt")


def test_shape_names_length_mismatch(tmp_path):
    params, codebook = make_model()
    with pytest.raises(CheckpointError, match="one shape name"):
        save_checkpoint(params, codebook, tmp_path / "m.ckpt", shape_names=["only_one"])


def test_loaded_model_evaluates(tmp_path):
    from lodsdf.network import forward_batch

    params, codebook = make_model(seed=3)
    path = tmp_path / "m.ckpt"
    save_checkpoint(params, codebook, path)
    loaded, cb, _ = load_checkpoint(path)
    xs = np.random.default_rng(0).uniform(-0.5, 0.5, (20, 3)).astype(np.float32)
    np.testing.assert_array_equal(
        forward_batch(params, xs, codebook[0], 2),
        forward_batch(loaded, xs, cb[0], 2),
    )
