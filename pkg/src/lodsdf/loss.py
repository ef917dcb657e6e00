"""SDF loss with hand-derived reverse-mode gradients.

The loss supervises every head with the same ground truth: per level, the
mean squared error over fine (near-surface) samples plus ``lambda_c`` times
the mean squared error over coarse samples, summed over levels, plus an L2
latent regularizer added once.  Gradients cover every network tensor and the
latent code; ``grad_check`` verifies them against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Conditioning, NetworkParams
from .samples import SdfSampleSet


class NonFiniteForwardError(RuntimeError):
    """Forward pass produced a non-finite activation; names the layer."""

    def __init__(self, layer: int):
        super().__init__(f"non-finite activation at layer {layer}")
        self.layer = layer


@dataclass
class GradientSet:
    """Gradients mirroring every entry of the parameter set, plus the latent."""

    freq_omega_raw: list[np.ndarray]
    freq_phi: list[np.ndarray]
    hidden_weight: list[np.ndarray]
    hidden_bias: list[np.ndarray]
    head_weight: list[np.ndarray]
    head_bias: list[np.ndarray]
    latent: np.ndarray

    @classmethod
    def zeros_like(cls, params: NetworkParams) -> "GradientSet":
        return cls(
            freq_omega_raw=[np.zeros_like(f.omega_raw) for f in params.freq_layers],
            freq_phi=[np.zeros_like(f.phi) for f in params.freq_layers],
            hidden_weight=[np.zeros_like(h.weight) for h in params.hidden],
            hidden_bias=[np.zeros_like(h.bias) for h in params.hidden],
            head_weight=[np.zeros_like(h.weight) for h in params.heads],
            head_bias=[np.zeros_like(h.bias) for h in params.heads],
            latent=np.zeros(params.config.latent_dim, dtype=params.config.np_dtype),
        )

    def tensors(self):
        """(name, array) pairs matching ``NetworkParams.tensors`` naming."""
        for i, (o, p) in enumerate(zip(self.freq_omega_raw, self.freq_phi)):
            yield f"freq{i}.omega_raw", o
            yield f"freq{i}.phi", p
        for i, (w, b) in enumerate(zip(self.hidden_weight, self.hidden_bias), start=1):
            yield f"hidden{i}.weight", w
            yield f"hidden{i}.bias", b
        for i, (w, b) in enumerate(zip(self.head_weight, self.head_bias), start=1):
            yield f"head{i}.weight", w
            yield f"head{i}.bias", b

    def add_scaled(self, other: "GradientSet", scale: float) -> None:
        for (_, mine), (_, theirs) in zip(self.tensors(), other.tensors()):
            mine += scale * theirs
        self.latent += scale * other.latent

    def max_abs(self) -> float:
        return max(
            max((float(np.abs(a).max()) for _, a in self.tensors() if a.size), default=0.0),
            float(np.abs(self.latent).max()) if self.latent.size else 0.0,
        )


@dataclass
class LossBreakdown:
    total: float
    fine_mse: np.ndarray    # per supervised level, unweighted
    coarse_mse: np.ndarray  # per supervised level, unweighted
    reg: float
    levels: list[int]


def sdf_loss(
    params: NetworkParams,
    latent,
    samples: SdfSampleSet,
    lambda_c: float = 1e-2,
    lambda_reg: float = 1e-4,
    levels: list[int] | None = None,
) -> tuple[float, GradientSet, LossBreakdown]:
    """Loss and gradients for one shape's sample set at its latent code."""
    if samples.n_total == 0:
        raise ValueError("sample set is empty")
    cfg = params.config
    if levels is None:
        levels = list(cfg.levels)
    if not levels or min(levels) < 1 or max(levels) >= cfg.n_layers:
        raise ValueError(f"levels must be within [1, {cfg.n_layers - 1}]")
    dt = cfg.np_dtype
    lat = np.asarray(latent, dtype=dt).reshape(cfg.latent_dim)

    n_f, n_c = len(samples.fine_sdf), len(samples.coarse_sdf)
    xs = np.asarray(samples.all_points(), dtype=dt)
    targets = np.asarray(samples.all_sdf(), dtype=dt)
    weights = np.empty(n_f + n_c, dtype=dt)
    if n_f:
        weights[:n_f] = 1.0 / n_f
    if n_c:
        weights[n_f:] = lambda_c / n_c

    cond = cfg.conditioning
    n = len(xs)
    d_h, d_l = cfg.hidden_dim, cfg.latent_dim
    max_level = max(levels)
    supervised = set(levels)

    if cond is Conditioning.INPUT_CONCAT:
        emb_in = np.concatenate([xs, np.broadcast_to(lat, (n, d_l))], axis=1)
    else:
        emb_in = xs
    lat_block = np.broadcast_to(lat, (n, d_l))

    # ---- forward with caches ----
    omegas, tanh_raw, cos_theta, g_list = [], [], [], []
    for i in range(max_level + 1):
        fl = params.freq_layers[i]
        th = np.tanh(fl.omega_raw)
        omega = th * dt.type(fl.bound)
        theta = emb_in @ omega.T + fl.phi
        omegas.append(omega)
        tanh_raw.append(th)
        cos_theta.append(np.cos(theta))
        g_list.append(np.sin(theta))

    def extend(g):
        if cond is Conditioning.HIDDEN_CONCAT:
            return np.concatenate([g, lat_block], axis=1)
        return g

    e_list = [extend(g) for g in g_list]
    z_list = [e_list[0]]
    u_list = [None]
    s_levels: dict[int, np.ndarray] = {}
    for i in range(1, max_level + 1):
        hid = params.hidden[i - 1]
        u = z_list[i - 1] @ hid.weight.T + hid.bias
        z = e_list[i] * u
        if not np.all(np.isfinite(z)):
            raise NonFiniteForwardError(i)
        u_list.append(u)
        z_list.append(z)
        if i in supervised:
            head = params.heads[i - 1]
            if cond is Conditioning.OUTPUT_CONCAT:
                s = z @ head.weight[:d_h] + lat @ head.weight[d_h:] + head.bias[0]
            else:
                s = z @ head.weight + head.bias[0]
            s_levels[i] = s

    # ---- loss ----
    grads = GradientSet.zeros_like(params)
    total = 0.0
    fine_mse = np.zeros(len(levels))
    coarse_mse = np.zeros(len(levels))
    ds_levels: dict[int, np.ndarray] = {}
    for k, lvl in enumerate(sorted(supervised)):
        err = s_levels[lvl] - targets
        total += float(weights @ (err * err))
        if n_f:
            fine_mse[k] = float(np.mean(err[:n_f] ** 2))
        if n_c:
            coarse_mse[k] = float(np.mean(err[n_f:] ** 2))
        ds_levels[lvl] = 2.0 * weights * err
    reg = float(lambda_reg * (lat @ lat))
    total += reg

    # ---- backward ----
    def head_pull(lvl, ds):
        """Gradient contributions of head ``lvl`` and the dL/dz it injects."""
        head = params.heads[lvl - 1]
        z = z_list[lvl]
        if cond is Conditioning.OUTPUT_CONCAT:
            grads.head_weight[lvl - 1][:d_h] += z.T @ ds
            grads.head_weight[lvl - 1][d_h:] += float(ds.sum()) * lat
            grads.latent += float(ds.sum()) * head.weight[d_h:]
            w_z = head.weight[:d_h]
        else:
            grads.head_weight[lvl - 1] += z.T @ ds
            w_z = head.weight
        grads.head_bias[lvl - 1][0] += ds.sum()
        return np.outer(ds, w_z)

    G = head_pull(max_level, ds_levels[max_level])
    for i in range(max_level, 0, -1):
        hid = params.hidden[i - 1]
        du = G * e_list[i]
        de = G * u_list[i]
        grads.hidden_weight[i - 1] += du.T @ z_list[i - 1]
        grads.hidden_bias[i - 1] += du.sum(axis=0)
        if cond is Conditioning.HIDDEN_CONCAT:
            dg = de[:, :d_h]
            grads.latent += de[:, d_h:].sum(axis=0)
        else:
            dg = de
        _embedding_backward(params, grads, i, dg, cos_theta[i], tanh_raw[i], emb_in, cond, d_l)
        G = du @ hid.weight
        if i - 1 in supervised:
            G = G + head_pull(i - 1, ds_levels[i - 1])
    # z_0 is the bare extended embedding
    if cond is Conditioning.HIDDEN_CONCAT:
        dg0 = G[:, :d_h]
        grads.latent += G[:, d_h:].sum(axis=0)
    else:
        dg0 = G
    _embedding_backward(params, grads, 0, dg0, cos_theta[0], tanh_raw[0], emb_in, cond, d_l)

    grads.latent += dt.type(2.0 * lambda_reg) * lat
    breakdown = LossBreakdown(
        total=total, fine_mse=fine_mse, coarse_mse=coarse_mse, reg=reg,
        levels=sorted(supervised),
    )
    return total, grads, breakdown


def _embedding_backward(params, grads, i, dg, cos_i, tanh_i, emb_in, cond, d_l):
    """Chain dL/dg_i through sin, the tanh frequency reparameterization, and
    (for input concatenation) into the latent."""
    fl = params.freq_layers[i]
    dtheta = dg * cos_i
    grads.freq_phi[i] += dtheta.sum(axis=0)
    d_omega = dtheta.T @ emb_in
    grads.freq_omega_raw[i] += d_omega * (fl.omega_raw.dtype.type(fl.bound) * (1.0 - tanh_i**2))
    if cond is Conditioning.INPUT_CONCAT and d_l:
        omega = tanh_i * fl.omega_raw.dtype.type(fl.bound)
        grads.latent += (dtheta @ omega)[:, 3:].sum(axis=0)


def grad_check(
    params: NetworkParams,
    latent,
    samples: SdfSampleSet,
    lambda_c: float = 1e-2,
    lambda_reg: float = 1e-4,
    h: float = 1e-4,
    levels: list[int] | None = None,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Perturbs every entry of every parameter tensor and the latent code.
    Requires float64 parameters for the stated tolerances to be meaningful.
    """
    lat = np.array(latent, dtype=params.config.np_dtype).reshape(-1)
    _, grads, _ = sdf_loss(params, lat, samples, lambda_c, lambda_reg, levels)

    def loss_at(l_vec):
        value, _, _ = sdf_loss(params, l_vec, samples, lambda_c, lambda_reg, levels)
        return value

    worst = 0.0
    param_arrays = dict(params.tensors())
    grad_arrays = dict(grads.tensors())
    for name, arr in param_arrays.items():
        g = grad_arrays[name]
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss_at(lat)
            flat[j] = orig - h
            down = loss_at(lat)
            flat[j] = orig
            numeric = (up - down) / (2 * h)
            worst = max(worst, _rel_err(gflat[j], numeric))
    for j in range(lat.size):
        orig = lat[j]
        lat[j] = orig + h
        up = loss_at(lat)
        lat[j] = orig - h
        down = loss_at(lat)
        lat[j] = orig
        numeric = (up - down) / (2 * h)
        worst = max(worst, _rel_err(grads.latent[j], numeric))
    return worst


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a) + abs(b), 1e-8)
    return abs(a - b) / scale
