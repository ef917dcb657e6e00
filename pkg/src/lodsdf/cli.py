"""Command-line entry points: train, fit, mesh, metrics, spectrum, serve."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .mesh import save_obj
from .meshing import MeshingConfig, _dense_values, extract_mesh, extract_mesh_dense, refine_mesh
from .metrics import band_energy_fractions, depth_sweep_report
from .network import batch_evaluator
from .samples import load_sample_set
from .train import fit_latent, fit_latent_masked, halfspace_mask, train, write_history_csv
from .validation import check_level

_MASK_RE = re.compile(r"^halfspace:([xyz])(<|>)(-?\d+(?:\.\d+)?)$")


def _parse_mask(spec: str):
    m = _MASK_RE.match(spec)
    if not m:
        raise ValueError(
            f"bad mask {spec!r}; expected e.g. halfspace:x<0 or halfspace:y>0.1"
        )
    axis = "xyz".index(m.group(1))
    return halfspace_mask(axis=axis, threshold=float(m.group(3)),
                          keep_below=m.group(2) == "<")


def _write_json(payload: dict, path) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".json.tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cmd_train(args) -> int:
    config = RunConfig.load(args.config)
    dataset, names = config.dataset.build_sample_sets()
    result = train(dataset, config.train, config.net)
    save_checkpoint(result.params, result.codebook, args.output, shape_names=names)
    if args.history:
        write_history_csv(result.history, args.history)
    final = result.history[-1]
    print(f"trained {config.train.steps} steps on {len(dataset)} shapes; "
          f"final fine MSE per head: {np.array2string(final.fine_mse, precision=3)}")
    return 0


def _cmd_fit(args) -> int:
    params, _, _ = load_checkpoint(args.checkpoint)
    samples = load_sample_set(args.samples)
    kwargs = dict(steps=args.steps, rng_seed=args.seed,
                  samples_per_step=args.samples_per_step)
    if args.mask:
        latent = fit_latent_masked(params, samples, _parse_mask(args.mask), **kwargs)
    else:
        latent = fit_latent(params, samples, **kwargs)
    _write_json({"latent": [float(v) for v in latent]}, args.output)
    print(f"fitted latent written to {args.output}")
    return 0


def _load_latent(params, codebook, args):
    if (args.shape_id is None) == (args.latent_file is None):
        raise ValueError("provide exactly one of --shape-id / --latent-file")
    if args.shape_id is not None:
        if not 0 <= args.shape_id < len(codebook):
            raise ValueError(f"--shape-id {args.shape_id} out of range")
        return codebook[args.shape_id]
    with open(args.latent_file) as fh:
        payload = json.load(fh)
    latent = np.asarray(payload["latent"], dtype=params.config.np_dtype)
    if latent.shape != (params.config.latent_dim,):
        raise ValueError(
            f"latent file has {latent.shape[0]} entries, model wants "
            f"{params.config.latent_dim}"
        )
    return latent


def _cmd_mesh(args) -> int:
    params, codebook, _ = load_checkpoint(args.checkpoint)
    latent = _load_latent(params, codebook, args)
    level = check_level(args.level, params.config.n_layers)
    mcfg = MeshingConfig(
        base_resolution=min(args.base, args.res),
        target_resolution=args.res,
        kappa=args.kappa,
        reuse_threshold=args.tau,
    )
    extra = {}
    if args.refine_from is not None:
        coarse = check_level(args.refine_from, params.config.n_layers)
        if coarse >= level:
            raise ValueError("--refine-from must be below --level")
        cached = _dense_values(batch_evaluator(params, latent, coarse), args.res, mcfg)
        mesh, stats = refine_mesh(cached, batch_evaluator(params, latent, level), mcfg)
        extra["cache_evals"] = (args.res + 1) ** 3
    elif args.dense:
        mesh, stats = extract_mesh_dense(batch_evaluator(params, latent, level), args.res, mcfg)
    else:
        mesh, stats = extract_mesh(batch_evaluator(params, latent, level), mcfg)
    save_obj(mesh, args.output)
    stats_payload = json.loads(stats.to_json())
    stats_payload.update(extra)
    if args.stats:
        _write_json(stats_payload, args.stats)
    print(f"wrote {mesh.n_vertices} vertices / {mesh.n_triangles} triangles to "
          f"{args.output} ({stats_payload['evals']} evaluations)")
    return 0


def _cmd_metrics(args) -> int:
    params, codebook, meta = load_checkpoint(args.checkpoint)
    config = RunConfig.load(args.config)
    oracles, _ = config.dataset.build_oracles()
    if len(oracles) != len(codebook):
        raise ValueError(
            f"config dataset has {len(oracles)} shapes but checkpoint codebook "
            f"has {len(codebook)} rows"
        )
    mcfg = config.meshing
    references = [
        extract_mesh_dense(oracle, mcfg.target_resolution, mcfg)[0] for oracle in oracles
    ]
    metric_opts = dict(config.metrics)
    report = depth_sweep_report(
        params, codebook, references, meshing_config=mcfg,
        n_cd_points=int(metric_opts.get("n_cd_points", 10000)),
        n_emd_points=int(metric_opts.get("n_emd_points", 5000)),
        rng_seed=int(metric_opts.get("rng_seed", 0)),
        noise_band=float(metric_opts.get("noise_band", 0.05)),
    )
    report.write_csv(args.output)
    if args.trends:
        report.write_trend_json(args.trends)
    summary = report.trend_summary()
    print(f"wrote {len(report.rows)} level rows to {args.output}; "
          f"ED non-increasing: {summary['ed_non_increasing']}, "
          f"SR non-decreasing: {summary['sr_non_decreasing']}")
    return 0


def _cmd_spectrum(args) -> int:
    params, codebook, _ = load_checkpoint(args.checkpoint)
    level = check_level(args.level, params.config.n_layers)
    if len(codebook):
        latent = codebook[args.shape_id]
    else:
        latent = np.zeros(params.config.latent_dim, dtype=params.config.np_dtype)
    fractions = band_energy_fractions(
        params, latent, level,
        n_lines=args.lines, n_samples=args.samples, margin=args.margin,
        rng_seed=args.seed,
    )
    payload = {
        "level": level,
        "cutoff": args.margin * params.config.cumulative_bound(level),
        "fractions": [float(f) for f in fractions],
        "max_fraction": float(fractions.max()),
    }
    if args.output:
        _write_json(payload, args.output)
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app_from_checkpoint

    app = create_app_from_checkpoint(args.checkpoint, max_resolution=args.max_res)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lodsdf",
        description="Band-limited multi-level SDF shape models: training, "
                    "meshing, metrics, and serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.add_argument("--history", help="write per-step loss history CSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("fit", help="fit a latent code to a sample set")
    p.add_argument("checkpoint")
    p.add_argument("samples", help="binary .sdfs sample set")
    p.add_argument("--mask", help="supervision mask, e.g. halfspace:x<0")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--samples-per-step", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="latent JSON path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("mesh", help="extract a mesh at a level of detail")
    p.add_argument("checkpoint")
    p.add_argument("--shape-id", type=int)
    p.add_argument("--latent-file")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--refine-from", type=int, help="reuse SDF values from this level")
    p.add_argument("--tau", type=float, help="reuse threshold (default 2x cell diagonal)")
    p.add_argument("--res", type=int, default=128, help="target grid resolution")
    p.add_argument("--base", type=int, default=32, help="octree base resolution")
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--dense", action="store_true", help="dense grid instead of octree")
    p.add_argument("-o", "--output", required=True, help="OBJ path")
    p.add_argument("--stats", help="write EvalStats JSON here")
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser("metrics", help="per-level CD/ED/SR depth sweep")
    p.add_argument("checkpoint")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="CSV report path")
    p.add_argument("--trends", help="write trend-flag JSON here")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("spectrum", help="verify the band limit of one head")
    p.add_argument("checkpoint")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--shape-id", type=int, default=0)
    p.add_argument("--lines", type=int, default=20)
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--margin", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("serve", help="run the exploration HTTP service")
    p.add_argument("checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-res", type=int, default=256)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
