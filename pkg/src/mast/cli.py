"""Command-line entry point.

Subcommands:
  run        one or more attention-control steps on synthetic or user masks
  sweep      achieved style mass across a grid of target ratios
  calibrate  synthesize (gap, temperature) pairs and fit the polynomial model
  diagnose   Laplacian boundary maps, entropy profiles, paired composites

Exit codes: 0 success, 2 user-input/validation error, 1 internal error.
``MAST_THREADS`` caps worker threads for calibration (0 or unset = auto).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import effective_pi_star
from .config import (PipelineConfig, config_to_dict, load_config, replace)
from .diagnostics import (attention_entropy_profile, laplacian_map,
                          paired_composite_experiment, write_csv, write_pgm)
from .errors import ConfigError, MastError, USER_INPUT_ERRORS
from .masks import MaskSet, load_mask, resample_to_tokens, smooth_mask, \
    validate_feasibility
from .pipeline import generate_fixture, run_step, sweep_pi_star
from .temperature import (fit_temperature_model, load_temperature_model,
                          r_squared, save_temperature_model,
                          synthesize_calibration, CalibrationDataset)
from .tensorio import read_tensor, write_tensor

PI_STAR_GRID = "0.3,0.45,0.6,0.75,0.9,1.0"
_DEFAULT_RUN_TENSORS = ("anchored_queries", "attention_output", "ddi_output", "masks")


def _thread_cap() -> int:
    raw = os.environ.get("MAST_THREADS", "0")
    try:
        v = int(raw)
    except ValueError:
        print(f"warning: ignoring malformed MAST_THREADS={raw!r}", file=sys.stderr)
        v = 0
    return v if v > 0 else (os.cpu_count() or 1)


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _load_cfg_with_overrides(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "pi_star", None) is not None:
        overrides["pi_star"] = args.pi_star
    if getattr(args, "tau_mode", None) is not None:
        overrides["tau_mode"] = args.tau_mode
    if getattr(args, "mask_sigma", None) is not None:
        overrides["mask_sigma"] = args.mask_sigma
    return replace(cfg, **overrides) if overrides else cfg


def _user_mask_set(args, cfg: PipelineConfig) -> MaskSet | None:
    if not args.mask:
        return None
    loaded = [load_mask(p) for p in args.mask]
    source = loaded[0].shape
    resampled = [resample_to_tokens(m, *cfg.token_grid) for m in loaded]
    smoothed = [smooth_mask(m, cfg.mask_sigma) for m in resampled]
    ms = MaskSet(tuple(smoothed), source_resolution=source)
    return validate_feasibility(ms, effective_pi_star(cfg.pi_star, warn=False),
                                renormalize=args.renormalize)


def cmd_run(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg_with_overrides(args)
    inputs = {}
    if args.config:
        inputs[str(args.config)] = _sha256_file(args.config)

    tau_model = None
    if cfg.tau_mode_kind == "fit":
        if not args.tau_model:
            raise ConfigError("tau_mode 'fit' requires --tau-model <coefficients.json>")
        tau_model, _ = load_temperature_model(args.tau_model)
        inputs[str(args.tau_model)] = _sha256_file(args.tau_model)

    user_masks = _user_mask_set(args, cfg)
    if user_masks is not None:
        cfg = replace(cfg, n_styles=user_masks.n_styles)
        for p in args.mask:
            inputs[str(p)] = _sha256_file(p)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for step in range(args.steps):
        step_cfg = replace(cfg, seed=(cfg.seed + step) % 2 ** 64)
        scene = generate_fixture(step_cfg)
        if user_masks is not None:
            scene = dataclasses.replace(scene, masks=user_masks)
        report = run_step(scene, step_cfg, tau_model=tau_model)
        step_dir = out_dir if args.steps == 1 else out_dir / f"step_{step:03d}"
        step_dir.mkdir(parents=True, exist_ok=True)
        names = sorted(report.tensors) if args.dump_intermediates \
            else [n for n in _DEFAULT_RUN_TENSORS if n in report.tensors]
        for name in names:
            path = step_dir / f"{name}.mstt"
            write_tensor(path, report.tensors[name])
            written.append(path)
        if args.dump_intermediates:
            for name, arr in sorted(scene.buffers().items()):
                path = step_dir / f"scene_{name}.mstt"
                write_tensor(path, arr)
                written.append(path)
        report_path = step_dir / "report.json"
        _write_json(report_path, report.to_json_dict())
        written.append(report_path)

    manifest = {
        "command": "run",
        "config": config_to_dict(cfg),
        "steps": args.steps,
        "inputs": inputs,
        "outputs": [{"path": str(p.relative_to(out_dir)), "sha256": _sha256_file(p)}
                    for p in written],
        "versions": {"mast": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "wall_clock_s": time.perf_counter() - t0,
    }
    _write_json(out_dir / "manifest.json", manifest)
    print(f"wrote {len(written)} files to {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_cfg_with_overrides(args)
    try:
        values = [float(v) for v in args.pi_star_sweep.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --pi-star-sweep list: {exc}") from exc
    scene = generate_fixture(cfg)
    rows = sweep_pi_star(scene, cfg, values)
    header = ["pi_star", "effective", "mean_style_mass"] + \
        [f"style_{i}_mean" for i in range(cfg.n_styles)] + ["mean_entropy"]
    table = [[r.requested, r.effective, r.mean_style_mass, *r.per_style_mean,
              r.mean_entropy] for r in rows]
    print("  ".join(f"{h:>16s}" for h in header))
    for row in table:
        print("  ".join(f"{v:16.8f}" for v in row))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_csv(args.out, table, header=header)
        print(f"wrote {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    if args.samples < args.degree + 1:
        raise ConfigError(
            f"need at least degree+1={args.degree + 1} samples, got {args.samples}")
    data = synthesize_calibration(args.samples, args.seed,
                                  max_workers=_thread_cap())
    hold = np.arange(len(data)) % 10 == 9
    train = CalibrationDataset(data.deltas[~hold], data.tau_stars[~hold],
                               data.provenance)
    model, r2_train = fit_temperature_model(train, args.degree)
    if hold.any():
        r2_hold = r_squared(model, data.deltas[hold], data.tau_stars[hold])
    else:
        r2_hold = r2_train
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_temperature_model(args.out, model, r2_hold, extra={
        "r_squared_train": r2_train,
        "samples": args.samples,
        "seed": args.seed,
        "holdout_fraction": float(hold.mean()),
        "provenance": data.provenance,
    })
    print(f"degree {args.degree}: coefficients {list(model.coefficients)}, "
          f"R^2 train {r2_train:.4f}, holdout {r2_hold:.4f} -> {args.out}")
    return 0


def cmd_diagnose(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    did_anything = False

    if args.paired_composite:
        rows = []
        for k in range(args.pairs):
            res = paired_composite_experiment(args.seed + k, sigma=args.sigma,
                                              band_px=args.band_px)
            rows.append([k, res.hard.boundary_band_mean, res.hard.interior_mean,
                         res.smooth.boundary_band_mean, res.smooth.interior_mean])
            if k == 0:
                write_pgm(out_dir / "hard_composite.pgm", res.hard_image)
                write_pgm(out_dir / "smooth_composite.pgm", res.smooth_image)
                write_pgm(out_dir / "hard_laplacian.pgm", res.hard.laplacian)
                write_pgm(out_dir / "smooth_laplacian.pgm", res.smooth.laplacian)
        write_csv(out_dir / "paired_composite.csv", rows,
                  header=["pair", "hard_band_mean", "hard_interior_mean",
                          "smooth_band_mean", "smooth_interior_mean"])
        lowered = sum(1 for r in rows if r[3] < r[1])
        print(f"paired composites: smooth band mean below hard in "
              f"{lowered}/{len(rows)} pairs")
        did_anything = True

    if args.weights:
        arr = read_tensor(args.weights)
        if arr.ndim > 2:
            arr = arr.reshape(-1, arr.shape[-1])
        profile = attention_entropy_profile(arr)
        write_csv(out_dir / "entropy_profile.csv",
                  [["mean_entropy", profile.mean_entropy],
                   ["mean_log_p_max", profile.mean_log_p_max],
                   ["entropy_q10", profile.quantiles[0]],
                   ["entropy_q50", profile.quantiles[1]],
                   ["entropy_q90", profile.quantiles[2]]],
                  header=["statistic", "value"])
        print(f"entropy profile: mean {profile.mean_entropy:.6f} nats")
        did_anything = True

    if args.image:
        img = load_mask(args.image) if str(args.image).endswith(".pgm") \
            else read_tensor(args.image)
        if img.ndim != 2:
            raise ConfigError(f"--image expects a 2-D map, got shape {img.shape}")
        lap = laplacian_map(img)
        write_pgm(out_dir / "laplacian.pgm", lap)
        write_csv(out_dir / "laplacian_stats.csv",
                  [["mean_abs_laplacian", float(lap.mean())],
                   ["max_abs_laplacian", float(lap.max())]],
                  header=["statistic", "value"])
        did_anything = True

    if not did_anything:
        raise ConfigError(
            "diagnose needs at least one of --paired-composite, --weights, --image")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mast",
        description="Attention-mass allocation, temperature calibration and "
                    "detail-injection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run attention-control steps")
    run.add_argument("--config", type=Path, help="JSON config file")
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--pi-star", type=float, dest="pi_star")
    run.add_argument("--tau-mode", dest="tau_mode",
                     help="paper-poly | fit | fixed:<v> | oracle")
    run.add_argument("--tau-model", type=Path, dest="tau_model",
                     help="coefficient JSON for tau_mode=fit")
    run.add_argument("--mask", action="append", type=Path, default=[],
                     help="mask file (PGM or tensor); repeat per style, "
                          "order defines the style index")
    run.add_argument("--mask-sigma", type=float, dest="mask_sigma")
    run.add_argument("--renormalize", action="store_true",
                     help="divide overlapping masks by their sum instead of failing")
    run.add_argument("--steps", type=int, default=1,
                     help="re-run with fresh fixtures per step")
    run.add_argument("--dump-intermediates", action="store_true",
                     help="also write logits, weights and scene tensors")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="style-mass table across target ratios")
    sweep.add_argument("--config", type=Path)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--pi-star-sweep", dest="pi_star_sweep", default=PI_STAR_GRID,
                       help=f"comma-separated ratios (default {PI_STAR_GRID})")
    sweep.add_argument("--out", type=Path, help="CSV output path")
    sweep.set_defaults(func=cmd_sweep)

    cal = sub.add_parser("calibrate", help="fit the gap->temperature polynomial")
    cal.add_argument("--samples", type=int, default=2000)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--degree", type=int, default=2)
    cal.add_argument("--out", type=Path, required=True, help="coefficient JSON path")
    cal.set_defaults(func=cmd_calibrate)

    diag = sub.add_parser("diagnose", help="emit analysis artifacts")
    diag.add_argument("--out", type=Path, required=True)
    diag.add_argument("--paired-composite", action="store_true",
                      dest="paired_composite")
    diag.add_argument("--pairs", type=int, default=1)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--sigma", type=float, default=2.5)
    diag.add_argument("--band-px", type=int, default=3, dest="band_px")
    diag.add_argument("--weights", type=Path, help="attention-weights tensor file")
    diag.add_argument("--image", type=Path, help="2-D map (PGM or tensor file)")
    diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USER_INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MastError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - exhaustively mapped exit codes
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
