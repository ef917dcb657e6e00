"""Auto-decoder training and inference-time latent fitting.

Network weights and a per-shape latent codebook are optimized jointly; at
inference the weights are frozen and a fresh code is fitted from zero by
gradient descent, optionally with spatially masked supervision for shape
completion.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .loss import GradientSet, NonFiniteForwardError, sdf_loss
from .network import NetworkConfig, NetworkParams, init_params
from .optim import AdamState, adam_step, adam_step_rows
from .samples import SdfSampleSet


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"training diverged (non-finite loss) at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    steps: int = 20000
    batch_shapes: int = 4
    samples_per_shape: int = 10000
    lambda_c: float = 1e-2
    lambda_reg: float = 1e-4
    lr_start: float = 1e-2
    lr_end: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.lambda_c < 1.0:
            raise ValueError("lambda_c must be in (0, 1)")
        if not self.lr_start >= self.lr_end > 0:
            raise ValueError("need lr_start >= lr_end > 0")
        if self.steps < 1 or self.batch_shapes < 1 or self.samples_per_shape < 1:
            raise ValueError("steps, batch_shapes and samples_per_shape must be positive")

    def learning_rate(self, step: int) -> float:
        """Logarithmic interpolation from lr_start to lr_end."""
        if self.steps == 1:
            return self.lr_start
        frac = step / (self.steps - 1)
        return self.lr_start * (self.lr_end / self.lr_start) ** frac


@dataclass
class HistoryRow:
    step: int
    lr: float
    fine_mse: np.ndarray   # per head
    coarse_mse: float      # mean over heads
    reg: float

    @property
    def total_proxy(self) -> float:
        return float(self.fine_mse.sum()) + self.coarse_mse + self.reg


@dataclass
class TrainResult:
    params: NetworkParams
    codebook: np.ndarray
    history: list[HistoryRow] = field(default_factory=list)


def _subsample(samples: SdfSampleSet, budget: int, rng) -> SdfSampleSet:
    total = samples.n_total
    if budget >= total:
        return samples
    n_f = len(samples.fine_sdf)
    k_f = min(n_f, int(round(budget * n_f / total)))
    k_c = budget - k_f
    idx_f = rng.choice(n_f, size=k_f, replace=False) if k_f else np.empty(0, dtype=int)
    idx_c = rng.choice(len(samples.coarse_sdf), size=k_c, replace=False)
    return SdfSampleSet(
        samples.fine_points[idx_f],
        samples.fine_sdf[idx_f],
        samples.coarse_points[idx_c],
        samples.coarse_sdf[idx_c],
        shape_id=samples.shape_id,
    )


def train(
    dataset: list[SdfSampleSet],
    config: TrainConfig,
    net_config: NetworkConfig,
) -> TrainResult:
    """Jointly optimize network parameters and the latent codebook.

    The codebook starts at N(0, 0.01^2), one row per shape; each step draws
    a batch of shapes and a per-shape sample subset, supervises every head,
    and applies Adam with the log-interpolated learning rate.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    dt = net_config.np_dtype
    params = init_params(net_config, rng_seed=config.seed)
    codebook_rng = np.random.default_rng([config.seed, 1])
    codebook = codebook_rng.normal(0.0, 0.01, size=(len(dataset), net_config.latent_dim))
    codebook = codebook.astype(dt)
    loop_rng = np.random.default_rng([config.seed, 2])

    state = AdamState.for_tensors(params.tensors(), codebook)
    n_heads = net_config.n_layers - 1
    history: list[HistoryRow] = []
    batch_size = min(config.batch_shapes, len(dataset))

    for step in range(config.steps):
        lr = config.learning_rate(step)
        batch = loop_rng.choice(len(dataset), size=batch_size, replace=False)
        net_grads = GradientSet.zeros_like(params)
        row_grads: dict[int, np.ndarray] = {}
        fine_acc = np.zeros(n_heads)
        coarse_acc = 0.0
        reg_acc = 0.0
        total_acc = 0.0
        for j in batch:
            shape_samples = _subsample(dataset[j], config.samples_per_shape, loop_rng)
            try:
                value, grads, breakdown = sdf_loss(
                    params, codebook[j], shape_samples,
                    lambda_c=config.lambda_c, lambda_reg=config.lambda_reg,
                )
            except NonFiniteForwardError as exc:
                raise TrainingDivergedError(step) from exc
            total_acc += value
            net_grads.add_scaled(grads, 1.0 / batch_size)
            row_grads[int(j)] = grads.latent / batch_size
            fine_acc += breakdown.fine_mse / batch_size
            coarse_acc += float(breakdown.coarse_mse.mean()) / batch_size
            reg_acc += breakdown.reg / batch_size
        if not math.isfinite(total_acc):
            raise TrainingDivergedError(step)
        adam_step(params.tensors(), net_grads.tensors(), state, lr)
        adam_step_rows(codebook, row_grads, state, lr)
        history.append(
            HistoryRow(step=step, lr=lr, fine_mse=fine_acc, coarse_mse=coarse_acc, reg=reg_acc)
        )
    return TrainResult(params=params, codebook=codebook, history=history)


def write_history_csv(history: list[HistoryRow], path) -> None:
    """CSV: step, lr, one fine-MSE column per head, coarse_mse, reg."""
    if not history:
        raise ValueError("empty history")
    n_heads = len(history[0].fine_mse)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["step", "lr"]
                + [f"fine_mse_h{i}" for i in range(1, n_heads + 1)]
                + ["coarse_mse", "reg"]
            )
            for row in history:
                writer.writerow(
                    [row.step, f"{row.lr:.8g}"]
                    + [f"{v:.8g}" for v in row.fine_mse]
                    + [f"{row.coarse_mse:.8g}", f"{row.reg:.8g}"]
                )
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fit_learning_rate(step: int, steps: int, lr_start: float, lr_end: float) -> float:
    knee = int(math.floor(0.9 * steps))
    if step < knee or steps == knee:
        return lr_start
    return lr_start + (step - knee) / (steps - knee) * (lr_end - lr_start)


def fit_latent(
    params: NetworkParams,
    samples: SdfSampleSet,
    steps: int = 1000,
    lambda_c: float = 1e-2,
    lambda_reg: float = 1e-4,
    lr_start: float = 1e-3,
    lr_end: float = 1e-5,
    samples_per_step: int | None = None,
    rng_seed: int = 0,
) -> np.ndarray:
    """Optimize a latent code for frozen network parameters.

    Starts from zero, Adam on the code only; the learning rate holds at
    ``lr_start`` for the first 90% of steps then decreases linearly to
    ``lr_end``.
    """
    cfg = params.config
    latent = np.zeros(cfg.latent_dim, dtype=cfg.np_dtype)
    if steps == 0:
        return latent
    rng = np.random.default_rng(rng_seed)
    m = np.zeros_like(latent)
    v = np.zeros_like(latent)
    from .optim import BETA1, BETA2, EPS

    for step in range(steps):
        lr = _fit_learning_rate(step, steps, lr_start, lr_end)
        step_samples = (
            _subsample(samples, samples_per_step, rng) if samples_per_step else samples
        )
        value, grads, _ = sdf_loss(
            params, latent, step_samples, lambda_c=lambda_c, lambda_reg=lambda_reg
        )
        if not math.isfinite(value):
            raise TrainingDivergedError(step)
        g = grads.latent
        m = BETA1 * m + (1 - BETA1) * g
        v = BETA2 * v + (1 - BETA2) * g * g
        m_hat = m / (1 - BETA1 ** (step + 1))
        v_hat = v / (1 - BETA2 ** (step + 1))
        latent = latent - (lr * m_hat / (np.sqrt(v_hat) + EPS)).astype(latent.dtype)
    return latent


def fit_latent_masked(
    params: NetworkParams,
    samples: SdfSampleSet,
    mask,
    min_kept_fraction: float = 0.1,
    **fit_kwargs,
) -> np.ndarray:
    """Latent fitting with supervision restricted to ``mask(points) == True``.

    Used for shape completion from partial SDF observations (e.g. a
    half-space): the prior fills in the unobserved region.
    """
    masked = samples.masked(mask)
    if masked.n_total == 0:
        raise ValueError("mask rejected every sample")
    if masked.n_total < min_kept_fraction * samples.n_total:
        raise ValueError(
            f"mask keeps only {masked.n_total}/{samples.n_total} samples "
            f"(< {min_kept_fraction:.0%})"
        )
    return fit_latent(params, masked, **fit_kwargs)


def halfspace_mask(axis: int = 0, threshold: float = 0.0, keep_below: bool = True):
    """Predicate for axis-aligned half-space supervision masks."""
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")

    def mask(points):
        coords = np.asarray(points)[:, axis]
        return coords < threshold if keep_below else coords > threshold

    return mask
