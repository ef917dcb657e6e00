"""Input validation helpers shared by the estimator, service, and CLI."""

from __future__ import annotations

import numpy as np


def check_points(x, name: str = "X") -> np.ndarray:
    """Coerce to a finite (n, 3) float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (3,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_level(level: int, n_layers: int) -> int:
    level = int(level)
    if not 1 <= level < n_layers:
        raise ValueError(f"level must be in [1, {n_layers - 1}], got {level}")
    return level


def check_latent(latent, latent_dim: int) -> np.ndarray:
    arr = np.asarray(latent, dtype=np.float64).reshape(-1)
    if arr.shape != (latent_dim,):
        raise ValueError(f"latent must have {latent_dim} entries, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("latent contains non-finite values")
    return arr
