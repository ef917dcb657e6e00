"""Conditional band-limited coordinate network.

A network with N sine embedding layers combines them through Hadamard
products, so the SDF head at depth i has spatial Fourier support bounded by
the running sum of the per-layer frequency bounds.  Three latent
conditioning designs are supported; concatenating the latent code to every
hidden activation (the default) preserves the band limit, which
``collapse_latent`` makes explicit by rewriting the conditioned network as a
plain unconditional one for a fixed code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Forward evaluation runs in fixed-size zero-padded blocks: BLAS kernels are
# not bitwise stable across batch sizes, and meshing relies on a grid corner
# getting the same value no matter which batch it lands in.
FORWARD_BLOCK = 16384

# The reference 13-layer bandwidth split; other layer counts resample its
# cumulative profile.
_REFERENCE_FRACTIONS = np.array([1 / 48] + [1 / 24] * 4 + [1 / 16] * 3 + [1 / 8] * 5)


class Conditioning(enum.Enum):
    """Where the latent code enters the network."""

    INPUT_CONCAT = "input"    # code concatenated to the coordinates (design 1)
    OUTPUT_CONCAT = "output"  # code concatenated at every output head (design 2)
    HIDDEN_CONCAT = "hidden"  # code concatenated to every hidden activation (design 3)


class ConfigError(ValueError):
    pass


def default_bound_schedule(n_layers: int, total_bandwidth: float) -> np.ndarray:
    """Per-layer bandwidth bounds summing exactly to ``total_bandwidth``.

    For 13 layers this reproduces the reference split (B/48, 4x B/24,
    3x B/16, 5x B/8); otherwise the cumulative profile is linearly resampled
    at ``n_layers`` + 1 evenly spaced points, keeping entries positive and
    the total exact.
    """
    if n_layers < 2:
        raise ConfigError("need at least 2 layers")
    cum = np.concatenate([[0.0], np.cumsum(_REFERENCE_FRACTIONS)])
    xs_ref = np.linspace(0.0, 1.0, len(cum))
    xs_new = np.linspace(0.0, 1.0, n_layers + 1)
    resampled = np.interp(xs_new, xs_ref, cum)
    return np.diff(resampled) * total_bandwidth


@dataclass
class NetworkConfig:
    n_layers: int = 7
    hidden_dim: int = 64
    latent_dim: int = 32
    total_bandwidth: float = 64.0
    bound_schedule: np.ndarray | None = None
    conditioning: Conditioning = Conditioning.HIDDEN_CONCAT
    dtype: str = "float32"

    def __post_init__(self):
        if isinstance(self.conditioning, str):
            self.conditioning = Conditioning(self.conditioning)
        if self.n_layers < 2:
            raise ConfigError("n_layers must be >= 2")
        if self.hidden_dim < 1 or self.latent_dim < 0:
            raise ConfigError("hidden_dim must be >= 1 and latent_dim >= 0")
        if self.bound_schedule is None:
            self.bound_schedule = default_bound_schedule(self.n_layers, self.total_bandwidth)
        self.bound_schedule = np.asarray(self.bound_schedule, dtype=np.float64)
        if len(self.bound_schedule) != self.n_layers:
            raise ConfigError(
                f"bound schedule has {len(self.bound_schedule)} entries for "
                f"{self.n_layers} layers"
            )
        if np.any(self.bound_schedule <= 0):
            raise ConfigError("bound schedule entries must be positive")
        if not np.isclose(self.bound_schedule.sum(), self.total_bandwidth, rtol=1e-9):
            raise ConfigError(
                f"bound schedule sums to {self.bound_schedule.sum()}, "
                f"expected {self.total_bandwidth}"
            )

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    @property
    def levels(self) -> range:
        """Valid level-of-detail indices (one per output head)."""
        return range(1, self.n_layers)

    @property
    def hidden_width(self) -> int:
        if self.conditioning is Conditioning.HIDDEN_CONCAT:
            return self.hidden_dim + self.latent_dim
        return self.hidden_dim

    @property
    def head_width(self) -> int:
        if self.conditioning is Conditioning.INPUT_CONCAT:
            return self.hidden_dim
        return self.hidden_dim + self.latent_dim

    @property
    def embed_in_dim(self) -> int:
        if self.conditioning is Conditioning.INPUT_CONCAT:
            return 3 + self.latent_dim
        return 3

    def cumulative_bound(self, level: int) -> float:
        """Spatial band limit of the head at ``level``: sum of bounds 0..level."""
        return float(self.bound_schedule[: level + 1].sum())


@dataclass
class FrequencyLayer:
    omega_raw: np.ndarray  # (d_h, embed_in_dim), unbounded parameters
    phi: np.ndarray        # (d_h,)
    bound: float

    def effective_omega(self) -> np.ndarray:
        """tanh-reparameterized frequencies, strictly inside (-bound, bound)."""
        return np.tanh(self.omega_raw) * self.omega_raw.dtype.type(self.bound)


@dataclass
class HiddenLayer:
    weight: np.ndarray  # (w, w)
    bias: np.ndarray    # (w,)


@dataclass
class OutputHead:
    weight: np.ndarray  # (head_width,)
    bias: np.ndarray    # (1,)


@dataclass
class NetworkParams:
    config: NetworkConfig
    freq_layers: list[FrequencyLayer]
    hidden: list[HiddenLayer]   # hidden[i-1] belongs to level i
    heads: list[OutputHead]     # heads[i-1] belongs to level i

    def tensors(self):
        """(name, array) pairs in the declared checkpoint order."""
        for i, fl in enumerate(self.freq_layers):
            yield f"freq{i}.omega_raw", fl.omega_raw
            yield f"freq{i}.phi", fl.phi
        for i, hl in enumerate(self.hidden, start=1):
            yield f"hidden{i}.weight", hl.weight
            yield f"hidden{i}.bias", hl.bias
        for i, head in enumerate(self.heads, start=1):
            yield f"head{i}.weight", head.weight
            yield f"head{i}.bias", head.bias

    def astype(self, dtype) -> "NetworkParams":
        cfg = NetworkConfig(
            n_layers=self.config.n_layers,
            hidden_dim=self.config.hidden_dim,
            latent_dim=self.config.latent_dim,
            total_bandwidth=self.config.total_bandwidth,
            bound_schedule=self.config.bound_schedule.copy(),
            conditioning=self.config.conditioning,
            dtype=np.dtype(dtype).name,
        )
        return NetworkParams(
            config=cfg,
            freq_layers=[
                FrequencyLayer(f.omega_raw.astype(dtype), f.phi.astype(dtype), f.bound)
                for f in self.freq_layers
            ],
            hidden=[
                HiddenLayer(h.weight.astype(dtype), h.bias.astype(dtype)) for h in self.hidden
            ],
            heads=[OutputHead(h.weight.astype(dtype), h.bias.astype(dtype)) for h in self.heads],
        )


def init_params(config: NetworkConfig, rng_seed: int = 0) -> NetworkParams:
    """Initialize parameters.

    Effective frequencies are uniform in [-B_i, B_i] (drawn uniformly, then
    pulled back through atanh with a 1 - 1e-6 clamp), phases uniform in
    [-pi, pi], and linear layers uniform within +-1/sqrt(fan_in).
    """
    rng = np.random.default_rng(rng_seed)
    dt = config.np_dtype
    freq_layers = []
    for i in range(config.n_layers):
        bound = float(config.bound_schedule[i])
        u = rng.uniform(-bound, bound, size=(config.hidden_dim, config.embed_in_dim))
        omega_raw = np.arctanh(np.clip(u / bound, -(1 - 1e-6), 1 - 1e-6))
        phi = rng.uniform(-np.pi, np.pi, size=config.hidden_dim)
        freq_layers.append(FrequencyLayer(omega_raw.astype(dt), phi.astype(dt), bound))

    w = config.hidden_width
    limit = 1.0 / np.sqrt(w)
    hidden = []
    for _ in range(config.n_layers - 1):
        weight = rng.uniform(-limit, limit, size=(w, w))
        bias = rng.uniform(-limit, limit, size=w)
        hidden.append(HiddenLayer(weight.astype(dt), bias.astype(dt)))

    hw = config.head_width
    h_limit = 1.0 / np.sqrt(hw)
    heads = []
    for _ in range(config.n_layers - 1):
        weight = rng.uniform(-h_limit, h_limit, size=hw)
        bias = rng.uniform(-h_limit, h_limit, size=1)
        heads.append(OutputHead(weight.astype(dt), bias.astype(dt)))
    return NetworkParams(config=config, freq_layers=freq_layers, hidden=hidden, heads=heads)


def zero_latent(config: NetworkConfig) -> np.ndarray:
    return np.zeros(config.latent_dim, dtype=config.np_dtype)


def embed(layer: FrequencyLayer, x) -> np.ndarray:
    """Sine embedding sin(omega x + phi) for a single point or a batch."""
    pts = np.asarray(x)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = np.sin(pts @ layer.effective_omega().T + layer.phi)
    return out[0] if single else out


def _check_level(config: NetworkConfig, level: int) -> None:
    if not 1 <= level < config.n_layers:
        raise ValueError(
            f"level must be in [1, {config.n_layers - 1}], got {level}"
        )


def _forward_span(params: NetworkParams, xs: np.ndarray, latent: np.ndarray, max_level: int):
    """Head outputs for levels 1..max_level on an already-typed batch.

    Returns (heads (n, max_level), activations list z_0..z_max_level).
    Layers beyond ``max_level`` are never touched.
    """
    cfg = params.config
    cond = cfg.conditioning
    n = len(xs)
    if cond is Conditioning.INPUT_CONCAT:
        emb_in = np.concatenate([xs, np.broadcast_to(latent, (n, cfg.latent_dim))], axis=1)
    else:
        emb_in = xs

    lat_row = latent[None, :]

    def embedded(i):
        g = np.sin(emb_in @ params.freq_layers[i].effective_omega().T + params.freq_layers[i].phi)
        if cond is Conditioning.HIDDEN_CONCAT:
            return np.concatenate([g, np.broadcast_to(lat_row, (n, cfg.latent_dim))], axis=1)
        return g

    outs = np.empty((n, max_level), dtype=xs.dtype)
    z = embedded(0)
    activations = [z]
    for level in range(1, max_level + 1):
        u = z @ params.hidden[level - 1].weight.T + params.hidden[level - 1].bias
        z = embedded(level) * u
        activations.append(z)
        head = params.heads[level - 1]
        if cond is Conditioning.OUTPUT_CONCAT:
            z_head = np.concatenate([z, np.broadcast_to(lat_row, (n, cfg.latent_dim))], axis=1)
        else:
            z_head = z
        outs[:, level - 1] = z_head @ head.weight + head.bias[0]
    return outs, activations


def forward_all(params: NetworkParams, x, latent):
    """Evaluate every head at a single point.

    Returns (values for levels 1..N-1, cached activations z_0..z_{N-1}).
    """
    dt = params.config.np_dtype
    xs = np.asarray(x, dtype=dt).reshape(1, 3)
    lat = np.asarray(latent, dtype=dt).reshape(params.config.latent_dim)
    outs, acts = _forward_span(params, xs, lat, params.config.n_layers - 1)
    return outs[0], [a[0] for a in acts]


def forward_batch(params: NetworkParams, xs, latent, level: int) -> np.ndarray:
    """SDF values at one level for a batch of points.

    Evaluation is truncated after ``level`` and runs in fixed-size padded
    blocks so the result for a point does not depend on its batch.
    """
    cfg = params.config
    _check_level(cfg, level)
    dt = cfg.np_dtype
    pts = np.asarray(xs, dtype=dt).reshape(-1, 3)
    lat = np.asarray(latent, dtype=dt).reshape(cfg.latent_dim)
    out = np.empty(len(pts), dtype=dt)
    block = np.zeros((FORWARD_BLOCK, 3), dtype=dt)
    for start in range(0, len(pts), FORWARD_BLOCK):
        chunk = pts[start : start + FORWARD_BLOCK]
        block[: len(chunk)] = chunk
        block[len(chunk) :] = 0.0
        vals, _ = _forward_span(params, block, lat, level)
        out[start : start + len(chunk)] = vals[: len(chunk), level - 1]
    return out


def batch_evaluator(params: NetworkParams, latent, level: int):
    """Callable (n, 3) -> (n,) float64 for the meshing/metrics layers."""
    lat = np.asarray(latent)

    def evaluate(points):
        return forward_batch(params, points, lat, level).astype(np.float64)

    return evaluate


@dataclass
class UnconditionalParams:
    """Plain band-limited network (no latent input) of width ``width``."""

    width: int
    n_layers: int
    freq_omega: list[np.ndarray]  # effective frequencies, (width, 3)
    freq_phi: list[np.ndarray]    # (width,)
    hidden: list[HiddenLayer]
    heads: list[OutputHead]


def collapse_latent(params: NetworkParams, latent) -> UnconditionalParams:
    """Rewrite a hidden-concat network with a fixed code as an unconditional one.

    With alpha = max|l| and lbar = arcsin(l / alpha), the code becomes a
    constant sine component: frequencies gain d_l zero rows, phases gain
    lbar, and the last d_l columns of every linear and output matrix are
    scaled by alpha.  Head outputs match the conditional network at every
    level.
    """
    cfg = params.config
    if cfg.conditioning is not Conditioning.HIDDEN_CONCAT:
        raise ValueError("collapse requires hidden-concat conditioning")
    dt = cfg.np_dtype
    lat = np.asarray(latent, dtype=dt).reshape(cfg.latent_dim)
    alpha = float(np.max(np.abs(lat))) if cfg.latent_dim else 0.0
    if alpha > 0:
        lbar = np.arcsin(lat / dt.type(alpha))
    else:
        lbar = np.zeros(cfg.latent_dim, dtype=dt)

    col_scale = np.concatenate(
        [np.ones(cfg.hidden_dim, dtype=dt), np.full(cfg.latent_dim, alpha, dtype=dt)]
    )
    zeros_rows = np.zeros((cfg.latent_dim, 3), dtype=dt)
    freq_omega = [
        np.concatenate([fl.effective_omega(), zeros_rows], axis=0) for fl in params.freq_layers
    ]
    freq_phi = [np.concatenate([fl.phi, lbar]) for fl in params.freq_layers]
    hidden = [HiddenLayer(h.weight * col_scale, h.bias.copy()) for h in params.hidden]
    heads = [OutputHead(h.weight * col_scale, h.bias.copy()) for h in params.heads]
    return UnconditionalParams(
        width=cfg.hidden_dim + cfg.latent_dim,
        n_layers=cfg.n_layers,
        freq_omega=freq_omega,
        freq_phi=freq_phi,
        hidden=hidden,
        heads=heads,
    )


def forward_unconditional(uparams: UnconditionalParams, x, level: int):
    """Plain band-limited forward: z_i = g_i(x) o (W_i z_{i-1} + b_i)."""
    if not 1 <= level < uparams.n_layers:
        raise ValueError(f"level must be in [1, {uparams.n_layers - 1}], got {level}")
    pts = np.asarray(x)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    z = np.sin(pts @ uparams.freq_omega[0].T + uparams.freq_phi[0])
    for i in range(1, level + 1):
        u = z @ uparams.hidden[i - 1].weight.T + uparams.hidden[i - 1].bias
        z = np.sin(pts @ uparams.freq_omega[i].T + uparams.freq_phi[i]) * u
    head = uparams.heads[level - 1]
    out = z @ head.weight + head.bias[0]
    return float(out[0]) if single else out
