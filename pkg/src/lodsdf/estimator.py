"""Scikit-learn style facade over the auto-decoder shape model.

``BandLimitedSdf`` is a BaseEstimator: hyperparameters live in __init__
(so ``get_params``/``set_params``/cloning work), ``fit`` trains the network
and codebook on a list of sample sets, ``predict`` evaluates signed
distances, and ``encode`` fits a latent code for unseen samples.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .meshing import MeshingConfig, extract_mesh
from .network import NetworkConfig, batch_evaluator, forward_batch
from .samples import SdfSampleSet
from .train import TrainConfig, fit_latent, fit_latent_masked, train
from .validation import check_latent, check_level, check_points


class BandLimitedSdf(BaseEstimator):
    """Latent-conditioned band-limited SDF model with one head per level.

    Parameters mirror the network and training configs; see ``fit``.
    """

    def __init__(
        self,
        n_layers: int = 7,
        hidden_dim: int = 64,
        latent_dim: int = 32,
        total_bandwidth: float = 64.0,
        conditioning: str = "hidden",
        steps: int = 20000,
        batch_shapes: int = 4,
        samples_per_shape: int = 512,
        lambda_c: float = 1e-2,
        lambda_reg: float = 1e-4,
        lr_start: float = 1e-2,
        lr_end: float = 1e-4,
        dtype: str = "float32",
        seed: int = 0,
    ):
        self.n_layers = n_layers
        self.hidden_dim = hidden_dim
        self.latent_dim = latent_dim
        self.total_bandwidth = total_bandwidth
        self.conditioning = conditioning
        self.steps = steps
        self.batch_shapes = batch_shapes
        self.samples_per_shape = samples_per_shape
        self.lambda_c = lambda_c
        self.lambda_reg = lambda_reg
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.dtype = dtype
        self.seed = seed

    def _net_config(self) -> NetworkConfig:
        return NetworkConfig(
            n_layers=self.n_layers,
            hidden_dim=self.hidden_dim,
            latent_dim=self.latent_dim,
            total_bandwidth=self.total_bandwidth,
            conditioning=self.conditioning,
            dtype=self.dtype,
        )

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            steps=self.steps,
            batch_shapes=self.batch_shapes,
            samples_per_shape=self.samples_per_shape,
            lambda_c=self.lambda_c,
            lambda_reg=self.lambda_reg,
            lr_start=self.lr_start,
            lr_end=self.lr_end,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        """Train on a list of ``SdfSampleSet`` (one per shape).

        Returns self; fitted state lands in ``params_``, ``codebook_`` and
        ``history_``.
        """
        if not isinstance(X, (list, tuple)) or not X:
            raise ValueError("X must be a non-empty list of SdfSampleSet")
        for s in X:
            if not isinstance(s, SdfSampleSet):
                raise ValueError(f"expected SdfSampleSet entries, got {type(s).__name__}")
        result = train(list(X), self._train_config(), self._net_config())
        self.params_ = result.params
        self.codebook_ = result.codebook
        self.history_ = result.history
        return self

    def _require_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit (or load a checkpoint) first")

    def predict(self, X, shape_id: int = 0, level: int | None = None,
                latent=None) -> np.ndarray:
        """Signed distances at query points for one shape and level.

        ``latent`` overrides ``shape_id``; ``level`` defaults to the deepest
        head.
        """
        self._require_fitted()
        pts = check_points(X)
        cfg = self.params_.config
        lvl = check_level(level if level is not None else cfg.n_layers - 1, cfg.n_layers)
        if latent is None:
            if not 0 <= shape_id < len(self.codebook_):
                raise ValueError(f"shape_id {shape_id} out of range")
            latent = self.codebook_[shape_id]
        lat = check_latent(latent, cfg.latent_dim)
        return forward_batch(self.params_, pts, lat, lvl).astype(np.float64)

    def encode(self, samples: SdfSampleSet, steps: int = 1000, mask=None,
               rng_seed: int = 0) -> np.ndarray:
        """Fit a latent code for unseen samples with frozen weights."""
        self._require_fitted()
        if mask is not None:
            return fit_latent_masked(
                self.params_, samples, mask,
                steps=steps, lambda_c=self.lambda_c, lambda_reg=self.lambda_reg,
                rng_seed=rng_seed,
            )
        return fit_latent(
            self.params_, samples,
            steps=steps, lambda_c=self.lambda_c, lambda_reg=self.lambda_reg,
            rng_seed=rng_seed,
        )

    def extract(self, shape_id: int = 0, level: int | None = None, latent=None,
                meshing_config: MeshingConfig | None = None):
        """Octree-extract the shape's mesh at a level; returns (mesh, stats)."""
        self._require_fitted()
        cfg = self.params_.config
        lvl = check_level(level if level is not None else cfg.n_layers - 1, cfg.n_layers)
        if latent is None:
            if not 0 <= shape_id < len(self.codebook_):
                raise ValueError(f"shape_id {shape_id} out of range")
            latent = self.codebook_[shape_id]
        lat = check_latent(latent, cfg.latent_dim)
        return extract_mesh(
            batch_evaluator(self.params_, lat, lvl),
            meshing_config or MeshingConfig(target_resolution=128),
        )
