"""lodsdf: latent-conditioned band-limited SDF models with levels of detail.

A single network maps (point, latent code, level) to a signed distance whose
spatial bandwidth grows with the level, plus the machinery around it:
ground-truth SDF oracles and sampling, auto-decoder training with
hand-derived gradients, octree isosurface extraction, reconstruction
metrics, a spectral band-limit verifier, checkpointing, a CLI, and an HTTP
exploration service.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .estimator import BandLimitedSdf
from .loss import GradientSet, grad_check, sdf_loss
from .mesh import TriangleMesh, MeshSdf, load_obj, mesh_sdf, sample_surface_points, save_obj
from .meshing import (
    EvalStats,
    MeshingConfig,
    extract_mesh,
    extract_mesh_dense,
    marching_cubes,
    refine_mesh,
)
from .metrics import (
    band_energy_fractions,
    chamfer,
    depth_sweep_report,
    emd,
    spectrum_above_cutoff,
    surface_regularity,
)
from .network import (
    Conditioning,
    NetworkConfig,
    NetworkParams,
    batch_evaluator,
    collapse_latent,
    default_bound_schedule,
    embed,
    forward_all,
    forward_batch,
    forward_unconditional,
    init_params,
)
from .samples import SdfSampleSet, load_sample_set, sample_training_set, save_sample_set
from .shapes import (
    AnalyticShape,
    Box,
    Capsule,
    SmoothUnion,
    Sphere,
    Torus,
    shape_from_dict,
    standard_training_shapes,
)
from .train import (
    TrainConfig,
    TrainResult,
    fit_latent,
    fit_latent_masked,
    halfspace_mask,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticShape", "BandLimitedSdf", "Box", "Capsule", "Conditioning",
    "EvalStats", "GradientSet", "MeshSdf", "MeshingConfig", "NetworkConfig",
    "NetworkParams", "SdfSampleSet", "SmoothUnion", "Sphere", "Torus",
    "TrainConfig", "TrainResult", "TriangleMesh", "band_energy_fractions",
    "batch_evaluator", "chamfer", "collapse_latent", "default_bound_schedule",
    "depth_sweep_report", "emd", "embed", "extract_mesh", "extract_mesh_dense",
    "fit_latent", "fit_latent_masked", "forward_all", "forward_batch",
    "forward_unconditional", "grad_check", "halfspace_mask", "init_params",
    "load_checkpoint", "load_obj", "load_sample_set", "marching_cubes",
    "mesh_sdf", "refine_mesh", "sample_surface_points", "sample_training_set",
    "save_checkpoint", "save_obj", "save_sample_set", "sdf_loss",
    "shape_from_dict", "spectrum_above_cutoff", "standard_training_shapes",
    "surface_regularity", "train",
]
