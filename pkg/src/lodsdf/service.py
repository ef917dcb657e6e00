"""Read-only HTTP service for interactive latent-space exploration.

Endpoints: model metadata, the codebook index, mesh extraction at any
(latent, level) with optional coarse-level reuse, and planar SDF slices for
inspection.  Meshes travel as a compact little-endian binary payload
(u32 counts, f32 vertices, u32 indices) with the evaluation count in the
``evals`` response header; identical requests produce identical bytes.
"""

from __future__ import annotations

import struct

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .meshing import MeshingConfig, extract_mesh, refine_mesh, _dense_values
from .network import NetworkParams, batch_evaluator
from .validation import check_latent, check_level

DEFAULT_MAX_RESOLUTION = 256


class ResolutionLimitError(ValueError):
    pass


class Interpolation(BaseModel):
    a: int
    b: int
    t: float


class MeshSource(BaseModel):
    shape_id: int | None = None
    latent: list[float] | None = None
    interpolate: Interpolation | None = None


class MeshRequest(BaseModel):
    source: MeshSource
    level: int
    resolution: int = 128
    refine_from: int | None = None
    tau: float | None = None
    base_resolution: int = Field(default=32, ge=2)


class SliceRequest(BaseModel):
    source: MeshSource
    level: int
    axis: int = Field(ge=0, le=2)
    offset: float = 0.0
    res: int = 128


def encode_mesh_payload(mesh) -> bytes:
    verts = np.ascontiguousarray(mesh.vertices, dtype="<f4")
    tris = np.ascontiguousarray(mesh.triangles, dtype="<u4")
    return struct.pack("<II", len(verts), len(tris)) + verts.tobytes() + tris.tobytes()


def decode_mesh_payload(blob: bytes):
    n_verts, n_tris = struct.unpack_from("<II", blob, 0)
    verts = np.frombuffer(blob, dtype="<f4", count=3 * n_verts, offset=8).reshape(-1, 3)
    tris = np.frombuffer(
        blob, dtype="<u4", count=3 * n_tris, offset=8 + 12 * n_verts
    ).reshape(-1, 3)
    return verts, tris


def create_app(
    params: NetworkParams,
    codebook: np.ndarray,
    shape_names: list[str] | None = None,
    max_resolution: int = DEFAULT_MAX_RESOLUTION,
) -> FastAPI:
    cfg = params.config
    names = shape_names or [f"shape_{i}" for i in range(len(codebook))]
    app = FastAPI(title="lodsdf explorer service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
        expose_headers=["evals", "triangles", "vertices"],
    )

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.exception_handler(ResolutionLimitError)
    async def too_big(request: Request, exc: ResolutionLimitError):
        return JSONResponse(status_code=413, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def bad_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def internal(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": "internal server error"})

    def resolve_latent(source: MeshSource) -> np.ndarray:
        given = [
            source.shape_id is not None,
            source.latent is not None,
            source.interpolate is not None,
        ]
        if sum(given) != 1:
            raise ValueError("source needs exactly one of shape_id, latent, interpolate")
        if source.shape_id is not None:
            if not 0 <= source.shape_id < len(codebook):
                raise ValueError(f"shape_id {source.shape_id} out of range")
            return np.asarray(codebook[source.shape_id])
        if source.latent is not None:
            return check_latent(source.latent, cfg.latent_dim).astype(cfg.np_dtype)
        interp = source.interpolate
        for idx in (interp.a, interp.b):
            if not 0 <= idx < len(codebook):
                raise ValueError(f"shape_id {idx} out of range")
        t = cfg.np_dtype.type(interp.t)
        one = cfg.np_dtype.type(1.0)
        return (one - t) * codebook[interp.a] + t * codebook[interp.b]

    @app.get("/model/info")
    def model_info():
        return {
            "n_layers": cfg.n_layers,
            "hidden_dim": cfg.hidden_dim,
            "latent_dim": cfg.latent_dim,
            "bound_schedule": [float(b) for b in cfg.bound_schedule],
            "conditioning": cfg.conditioning.value,
            "levels": [int(l) for l in cfg.levels],
            "max_resolution": max_resolution,
            "shape_names": names,
        }

    @app.get("/shapes")
    def shapes():
        return {"shapes": [{"id": i, "name": n} for i, n in enumerate(names)]}

    @app.post("/mesh")
    def mesh_endpoint(req: MeshRequest):
        if req.resolution > max_resolution:
            raise ResolutionLimitError(
                f"resolution {req.resolution} exceeds limit {max_resolution}"
            )
        level = check_level(req.level, cfg.n_layers)
        latent = resolve_latent(req.source)
        mcfg = MeshingConfig(
            base_resolution=min(req.base_resolution, req.resolution),
            target_resolution=req.resolution,
            reuse_threshold=req.tau,
        )
        if req.refine_from is not None:
            coarse = check_level(req.refine_from, cfg.n_layers)
            if coarse >= level:
                raise ValueError("refine_from must be below the target level")
            cached = _dense_values(
                batch_evaluator(params, latent, coarse), req.resolution, mcfg
            )
            mesh, stats = refine_mesh(
                cached, batch_evaluator(params, latent, level), mcfg
            )
        else:
            mesh, stats = extract_mesh(batch_evaluator(params, latent, level), mcfg)
        payload = encode_mesh_payload(mesh)
        return Response(
            content=payload,
            media_type="application/octet-stream",
            headers={
                "evals": str(stats.network_evaluations),
                "vertices": str(mesh.n_vertices),
                "triangles": str(mesh.n_triangles),
            },
        )

    @app.post("/slice")
    def slice_endpoint(req: SliceRequest):
        if req.res > max_resolution:
            raise ResolutionLimitError(f"res {req.res} exceeds limit {max_resolution}")
        if req.res < 2:
            raise ValueError("res must be >= 2")
        level = check_level(req.level, cfg.n_layers)
        latent = resolve_latent(req.source)
        box = MeshingConfig()
        if not box.lower <= req.offset <= box.upper:
            raise ValueError(f"offset {req.offset} outside [{box.lower}, {box.upper}]")
        axes = [a for a in range(3) if a != req.axis]
        coords = np.linspace(box.lower, box.upper, req.res)
        uu, vv = np.meshgrid(coords, coords, indexing="ij")
        pts = np.empty((req.res * req.res, 3))
        pts[:, req.axis] = req.offset
        pts[:, axes[0]] = uu.ravel()
        pts[:, axes[1]] = vv.ravel()
        values = batch_evaluator(params, latent, level)(pts).astype("<f4")
        return Response(
            content=values.tobytes(),
            media_type="application/octet-stream",
            headers={"res": str(req.res), "axis": str(req.axis), "offset": str(req.offset)},
        )

    return app


def create_app_from_checkpoint(path, max_resolution: int = DEFAULT_MAX_RESOLUTION) -> FastAPI:
    from .checkpoint import load_checkpoint

    params, codebook, meta = load_checkpoint(path)
    return create_app(params, codebook, meta.shape_names, max_resolution=max_resolution)
