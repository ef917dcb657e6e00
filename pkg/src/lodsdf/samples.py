"""Ground-truth SDF sample generation and the on-disk sample-set format."""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .shapes import SAMPLE_HALF

MAGIC = b"SDFS"
FORMAT_VERSION = 1

# Near-surface Gaussian noise levels, as fractions of the sampling-domain
# width; the rest of the budget is uniform fill of the padded box.
_DOMAIN_WIDTH = 2 * SAMPLE_HALF
_NOISE_FRACTIONS = (0.0025, 0.025)
_SURFACE_SHARE = 0.475


@dataclass
class SdfSampleSet:
    """Ground-truth (position, signed distance) pairs, split fine/coarse.

    The fine subset holds the samples closest to the surface; the partition
    invariant is ``max |s_fine| <= min |s_coarse|``.
    """

    fine_points: np.ndarray
    fine_sdf: np.ndarray
    coarse_points: np.ndarray
    coarse_sdf: np.ndarray
    shape_id: int = 0

    def __post_init__(self):
        self.fine_points = np.asarray(self.fine_points, dtype=np.float64).reshape(-1, 3)
        self.coarse_points = np.asarray(self.coarse_points, dtype=np.float64).reshape(-1, 3)
        self.fine_sdf = np.asarray(self.fine_sdf, dtype=np.float64).reshape(-1)
        self.coarse_sdf = np.asarray(self.coarse_sdf, dtype=np.float64).reshape(-1)
        if len(self.fine_points) != len(self.fine_sdf):
            raise ValueError("fine points/sdf length mismatch")
        if len(self.coarse_points) != len(self.coarse_sdf):
            raise ValueError("coarse points/sdf length mismatch")

    @property
    def n_total(self) -> int:
        return len(self.fine_sdf) + len(self.coarse_sdf)

    def all_points(self) -> np.ndarray:
        return np.concatenate([self.fine_points, self.coarse_points], axis=0)

    def all_sdf(self) -> np.ndarray:
        return np.concatenate([self.fine_sdf, self.coarse_sdf], axis=0)

    def masked(self, predicate) -> "SdfSampleSet":
        """Restrict the set to samples whose position satisfies ``predicate``."""
        keep_f = np.asarray(predicate(self.fine_points), dtype=bool)
        keep_c = np.asarray(predicate(self.coarse_points), dtype=bool)
        return SdfSampleSet(
            self.fine_points[keep_f],
            self.fine_sdf[keep_f],
            self.coarse_points[keep_c],
            self.coarse_sdf[keep_c],
            shape_id=self.shape_id,
        )


def _numeric_gradient(oracle, pts, h=1e-5):
    g = np.empty_like(pts)
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        g[:, axis] = (oracle(pts + e) - oracle(pts - e)) / (2 * h)
    return g


def project_to_surface(oracle, pts, iterations: int = 12):
    """Newton-project points onto the oracle's zero level set."""
    pts = np.array(pts, dtype=np.float64)
    for _ in range(iterations):
        s = oracle(pts)
        g = _numeric_gradient(oracle, pts)
        norm_sq = np.maximum((g * g).sum(axis=1), 1e-12)
        pts -= (s / norm_sq)[:, None] * g
    return pts


def sample_training_set(
    oracle,
    n_total: int,
    fine_fraction: float = 0.05,
    rng_seed: int = 0,
    shape_id: int = 0,
) -> SdfSampleSet:
    """Draw labeled SDF samples with near-surface emphasis.

    Mixture: two Gaussian-perturbed surface populations plus a uniform fill
    of the padded [-0.55, 0.55]^3 box.  All positions are labeled with the
    exact oracle value, ranked by |s|, and split at the fine_fraction
    quantile (fine count = round(fine_fraction * n_total)).
    """
    if n_total < 20:
        raise ValueError("n_total must be at least 20")
    if not 0.0 < fine_fraction < 1.0:
        raise ValueError("fine_fraction must be in (0, 1)")

    rng = np.random.default_rng(rng_seed)
    n_surf1 = int(round(_SURFACE_SHARE * n_total))
    n_surf2 = int(round(_SURFACE_SHARE * n_total))
    n_uniform = n_total - n_surf1 - n_surf2

    seeds = rng.uniform(-SAMPLE_HALF, SAMPLE_HALF, size=(n_surf1 + n_surf2, 3))
    surface = project_to_surface(oracle, seeds)
    noise = rng.standard_normal((n_surf1 + n_surf2, 3))
    sigma = np.concatenate(
        [
            np.full(n_surf1, _NOISE_FRACTIONS[0] * _DOMAIN_WIDTH),
            np.full(n_surf2, _NOISE_FRACTIONS[1] * _DOMAIN_WIDTH),
        ]
    )
    near = np.clip(surface + sigma[:, None] * noise, -SAMPLE_HALF, SAMPLE_HALF)
    uniform = rng.uniform(-SAMPLE_HALF, SAMPLE_HALF, size=(n_uniform, 3))

    points = np.concatenate([near, uniform], axis=0)
    sdf = np.asarray(oracle(points), dtype=np.float64)

    order = np.argsort(np.abs(sdf), kind="stable")
    n_fine = int(round(fine_fraction * n_total))
    fine_idx = order[:n_fine]
    coarse_idx = order[n_fine:]
    return SdfSampleSet(
        points[fine_idx], sdf[fine_idx], points[coarse_idx], sdf[coarse_idx], shape_id=shape_id
    )


def save_sample_set(samples: SdfSampleSet, path) -> None:
    """Little-endian binary: header {magic, version u32, n_fine u64, n_coarse u64}
    then (f32 x, y, z, s) records, fine first."""
    header = MAGIC + struct.pack(
        "<IQQ", FORMAT_VERSION, len(samples.fine_sdf), len(samples.coarse_sdf)
    )
    fine = np.hstack(
        [samples.fine_points, samples.fine_sdf[:, None]]
    ).astype("<f4")
    coarse = np.hstack(
        [samples.coarse_points, samples.coarse_sdf[:, None]]
    ).astype("<f4")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".sdfs.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(fine.tobytes())
            fh.write(coarse.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_sample_set(path, shape_id: int = 0) -> SdfSampleSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError("not a sample-set file (bad magic)")
    version, n_fine, n_coarse = struct.unpack_from("<IQQ", blob, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported sample-set version {version}")
    expected = 4 + 20 + 16 * (n_fine + n_coarse)
    if len(blob) != expected:
        raise ValueError(f"truncated sample-set file: {len(blob)} bytes, expected {expected}")
    records = np.frombuffer(blob, dtype="<f4", offset=24).reshape(-1, 4)
    fine, coarse = records[:n_fine], records[n_fine:]
    return SdfSampleSet(
        fine[:, :3].astype(np.float64),
        fine[:, 3].astype(np.float64),
        coarse[:, :3].astype(np.float64),
        coarse[:, 3].astype(np.float64),
        shape_id=shape_id,
    )
