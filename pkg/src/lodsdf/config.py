"""Declarative run configuration (JSON), rejecting unknown keys.

A run config covers the network, training, meshing, and dataset sections
plus top-level seeds; every section is validated fail-closed so a typo in a
key is an error rather than a silently ignored setting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .meshing import MeshingConfig
from .network import NetworkConfig
from .samples import SdfSampleSet, sample_training_set
from .shapes import shape_from_dict, standard_training_shapes
from .train import TrainConfig


class ConfigFileError(ValueError):
    pass


_NET_KEYS = {
    "n_layers", "hidden_dim", "latent_dim", "total_bandwidth",
    "bound_schedule", "conditioning", "dtype",
}
_TRAIN_KEYS = {
    "steps", "batch_shapes", "samples_per_shape", "lambda_c", "lambda_reg",
    "lr_start", "lr_end", "seed",
}
_MESH_KEYS = {
    "base_resolution", "target_resolution", "kappa", "reuse_threshold",
    "iso", "lower", "upper",
}
_DATASET_KEYS = {"shapes", "obj_paths", "n_samples", "fine_fraction", "seed"}
_TOP_KEYS = {"net", "train", "meshing", "dataset", "metrics"}
_METRIC_KEYS = {"n_cd_points", "n_emd_points", "noise_band", "rng_seed"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigFileError(f"unknown key(s) in {where}: {sorted(unknown)}")


@dataclass
class DatasetSpec:
    shapes: list[dict] = field(default_factory=list)
    obj_paths: list[str] = field(default_factory=list)
    n_samples: int = 10000
    fine_fraction: float = 0.05
    seed: int = 0

    def build_sample_sets(self) -> tuple[list[SdfSampleSet], list[str]]:
        """Per-shape sample sets and display names."""
        sets: list[SdfSampleSet] = []
        oracles, names = self.build_oracles()
        for i, oracle in enumerate(oracles):
            sets.append(
                sample_training_set(
                    oracle, self.n_samples, self.fine_fraction,
                    rng_seed=self.seed + i, shape_id=i,
                )
            )
        return sets, names

    def build_oracles(self):
        """SDF callables plus names, from analytic shapes and/or OBJ files."""
        from .mesh import MeshSdf, load_obj

        oracles = []
        names = []
        if self.shapes:
            built = [shape_from_dict(s) for s in self.shapes]
        elif not self.obj_paths:
            built = standard_training_shapes()
        else:
            built = []
        for i, shape in enumerate(built):
            oracles.append(shape.sdf)
            names.append(f"{shape.kind}_{i}")
        for path in self.obj_paths:
            oracles.append(MeshSdf(load_obj(path)).sdf)
            names.append(str(path))
        return oracles, names


@dataclass
class RunConfig:
    net: NetworkConfig
    train: TrainConfig
    meshing: MeshingConfig
    dataset: DatasetSpec
    metrics: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        _check_keys(raw, _TOP_KEYS, "run config")
        net_raw = dict(raw.get("net", {}))
        _check_keys(net_raw, _NET_KEYS, "net")
        train_raw = dict(raw.get("train", {}))
        _check_keys(train_raw, _TRAIN_KEYS, "train")
        mesh_raw = dict(raw.get("meshing", {}))
        _check_keys(mesh_raw, _MESH_KEYS, "meshing")
        data_raw = dict(raw.get("dataset", {}))
        _check_keys(data_raw, _DATASET_KEYS, "dataset")
        metrics_raw = dict(raw.get("metrics", {}))
        _check_keys(metrics_raw, _METRIC_KEYS, "metrics")
        if "bound_schedule" in net_raw and net_raw["bound_schedule"] is not None:
            net_raw["bound_schedule"] = np.asarray(net_raw["bound_schedule"], dtype=np.float64)
        try:
            return cls(
                net=NetworkConfig(**net_raw),
                train=TrainConfig(**train_raw),
                meshing=MeshingConfig(**mesh_raw),
                dataset=DatasetSpec(**data_raw),
                metrics=metrics_raw,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigFileError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigFileError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigFileError(f"{path}: top level must be an object")
        return cls.from_dict(raw)


def desk_config() -> RunConfig:
    """The desk-scale defaults: 7 layers (6 heads), width 64+32, B=64,
    20k steps on the 8 analytic training shapes."""
    return RunConfig.from_dict(
        {
            "net": {"n_layers": 7, "hidden_dim": 64, "latent_dim": 32,
                    "total_bandwidth": 64.0, "dtype": "float32"},
            "train": {"steps": 20000, "batch_shapes": 4, "samples_per_shape": 512,
                      "seed": 0},
            "meshing": {"base_resolution": 32, "target_resolution": 128},
            "dataset": {"n_samples": 10000, "fine_fraction": 0.05, "seed": 0},
            "metrics": {"n_cd_points": 10000, "n_emd_points": 512},
        }
    )
