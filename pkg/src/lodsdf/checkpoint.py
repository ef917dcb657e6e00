"""Binary checkpoint format: "LODS" magic, JSON header, f32 tensor payload.

Layout: magic (4 bytes), u32 header length, UTF-8 JSON header, then every
parameter tensor as little-endian float32 in declared order (frequency
layers, hidden layers, output heads, codebook).  Tensors are float32 in
memory as well, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .network import (
    Conditioning,
    FrequencyLayer,
    HiddenLayer,
    NetworkConfig,
    NetworkParams,
    OutputHead,
)

MAGIC = b"LODS"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class CheckpointMeta:
    shape_names: list[str]
    config: NetworkConfig


def _tensor_shapes(config: NetworkConfig, n_shapes: int):
    """Declared (name, shape) manifest implied by the header fields."""
    shapes = []
    for i in range(config.n_layers):
        shapes.append((f"freq{i}.omega_raw", (config.hidden_dim, config.embed_in_dim)))
        shapes.append((f"freq{i}.phi", (config.hidden_dim,)))
    w = config.hidden_width
    for i in range(1, config.n_layers):
        shapes.append((f"hidden{i}.weight", (w, w)))
        shapes.append((f"hidden{i}.bias", (w,)))
    hw = config.head_width
    for i in range(1, config.n_layers):
        shapes.append((f"head{i}.weight", (hw,)))
        shapes.append((f"head{i}.bias", (1,)))
    shapes.append(("codebook", (n_shapes, config.latent_dim)))
    return shapes


def save_checkpoint(params: NetworkParams, codebook: np.ndarray, path,
                    shape_names: list[str] | None = None) -> None:
    codebook = np.asarray(codebook)
    names = shape_names or [f"shape_{i}" for i in range(len(codebook))]
    if len(names) != len(codebook):
        raise CheckpointError("one shape name per codebook row required")
    cfg = params.config
    header = {
        "format_version": FORMAT_VERSION,
        "n_layers": cfg.n_layers,
        "hidden_dim": cfg.hidden_dim,
        "latent_dim": cfg.latent_dim,
        "bound_schedule": [float(b) for b in cfg.bound_schedule],
        "conditioning": cfg.conditioning.value,
        "shape_names": names,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = bytearray()
    for _, tensor in params.tensors():
        payload += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    payload += np.ascontiguousarray(codebook, dtype="<f4").tobytes()

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".ckpt.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            fh.write(bytes(payload))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> tuple[NetworkParams, np.ndarray, CheckpointMeta]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if len(blob) < 8:
        raise CheckpointError("truncated checkpoint header")
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header_end = 8 + header_len
    if len(blob) < header_end:
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(blob[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {version!r} "
            f"(this build reads {FORMAT_VERSION})"
        )
    for key in ("n_layers", "hidden_dim", "latent_dim", "bound_schedule",
                "conditioning", "shape_names"):
        if key not in header:
            raise CheckpointError(f"checkpoint header missing field {key!r}")

    try:
        config = NetworkConfig(
            n_layers=int(header["n_layers"]),
            hidden_dim=int(header["hidden_dim"]),
            latent_dim=int(header["latent_dim"]),
            total_bandwidth=float(np.sum(header["bound_schedule"])),
            bound_schedule=np.asarray(header["bound_schedule"], dtype=np.float64),
            conditioning=Conditioning(header["conditioning"]),
            dtype="float32",
        )
    except ValueError as exc:
        raise CheckpointError(f"inconsistent checkpoint header: {exc}") from None
    names = [str(s) for s in header["shape_names"]]
    manifest = _tensor_shapes(config, len(names))
    expected = sum(int(np.prod(s)) for _, s in manifest) * 4
    actual = len(blob) - header_end
    if actual != expected:
        raise CheckpointError(
            f"payload length mismatch: header fields (n_layers={config.n_layers}, "
            f"hidden_dim={config.hidden_dim}, latent_dim={config.latent_dim}, "
            f"{len(names)} shapes) imply {expected} bytes, found {actual}"
        )

    arrays = {}
    offset = header_end
    for name, shape in manifest:
        count = int(np.prod(shape))
        arrays[name] = (
            np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            .reshape(shape)
            .copy()
        )
        offset += count * 4

    freq_layers = [
        FrequencyLayer(
            arrays[f"freq{i}.omega_raw"], arrays[f"freq{i}.phi"],
            float(config.bound_schedule[i]),
        )
        for i in range(config.n_layers)
    ]
    hidden = [
        HiddenLayer(arrays[f"hidden{i}.weight"], arrays[f"hidden{i}.bias"])
        for i in range(1, config.n_layers)
    ]
    heads = [
        OutputHead(arrays[f"head{i}.weight"], arrays[f"head{i}.bias"])
        for i in range(1, config.n_layers)
    ]
    params = NetworkParams(config=config, freq_layers=freq_layers, hidden=hidden, heads=heads)
    return params, arrays["codebook"], CheckpointMeta(shape_names=names, config=config)
