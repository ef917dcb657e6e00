import json

import numpy as np
import pytest

from lodsdf.config import ConfigFileError, RunConfig, desk_config


def test_defaults_build():
    cfg = RunConfig.from_dict({})
    assert cfg.net.n_layers == 7
    assert cfg.train.batch_shapes == 4
    assert cfg.meshing.base_resolution == 32


def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigFileError, match="unknown key"):
        RunConfig.from_dict({"trian": {}})


def test_unknown_nested_key_rejected():
    with pytest.raises(ConfigFileError, match="unknown key"):
        RunConfig.from_dict({"net": {"n_layer": 5}})
    with pytest.raises(ConfigFileError, match="unknown key"):
        RunConfig.from_dict({"train": {"learning_rate": 0.1}})
    with pytest.raises(ConfigFileError, match="unknown key"):
        RunConfig.from_dict({"dataset": {"shape": []}})


def test_bad_value_wrapped():
    with pytest.raises(ConfigFileError):
        RunConfig.from_dict({"train": {"lambda_c": 2.0}})


def test_load_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "net": {"n_layers": 3, "hidden_dim": 8, "latent_dim": 4, "total_bandwidth": 16.0},
        "train": {"steps": 10, "samples_per_shape": 64},
        "dataset": {"shapes": [{"kind": "sphere", "radius": 0.3}], "n_samples": 100},
    }))
    cfg = RunConfig.load(path)
    assert cfg.net.n_layers == 3
    sets, names = cfg.dataset.build_sample_sets()
    assert len(sets) == 1
    assert names == ["sphere_0"]
    assert sets[0].n_total == 100


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigFileError, match="invalid JSON"):
        RunConfig.load(path)


def test_desk_config_consistent():
    cfg = desk_config()
    assert cfg.net.total_bandwidth == 64.0
    assert cfg.train.steps == 20000
    oracles, names = cfg.dataset.build_oracles()
    assert len(oracles) == 8


def test_obj_dataset(tmp_path):
    from lodsdf.mesh import icosphere, save_obj

    path = tmp_path / "ico.obj"
    save_obj(icosphere(1, radius=0.4), path)
    cfg = RunConfig.from_dict({"dataset": {"obj_paths": [str(path)], "n_samples": 50}})
    oracles, names = cfg.dataset.build_oracles()
    assert len(oracles) == 1
    assert names == [str(path)]
    inside = oracles[0](np.zeros((1, 3)))
    assert inside[0] < 0
