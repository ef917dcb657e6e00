import numpy as np
import pytest

from desk import desk_dataset, held_out_shape, train_or_load


@pytest.fixture(scope="session")
def desk_model():
    """Trained desk-scale model (hidden-concat conditioning), cached on disk."""
    params, codebook = train_or_load("hidden")
    return params, codebook


@pytest.fixture(scope="session")
def desk_model_input():
    params, codebook = train_or_load("input")
    return params, codebook


@pytest.fixture(scope="session")
def desk_model_output():
    params, codebook = train_or_load("output")
    return params, codebook


@pytest.fixture(scope="session")
def desk_data():
    """(shapes, sample sets) used to train the desk models."""
    return desk_dataset()


@pytest.fixture(scope="session")
def unseen_shape():
    return held_out_shape()
