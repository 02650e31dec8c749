"""Batch command-line frontend.

Subcommands: diagram | distance | loss | metrics | interp-analysis.

Exit codes: 0 success, 2 I/O or file-format error, 3 semantic/shape error.
Floating-point output is pinned to 12 significant digits so identical
invocations produce byte-identical JSON/CSV. File batches run on a worker
pool bounded by the TOPOCUBE_THREADS environment variable; outputs keep the
input order regardless of completion order.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .diagram_distance import bottleneck, matching_to_dict, wasserstein
from .errors import TopocubeError
from .loss import LossConfig, topological_loss
from .persistence import (
    diagram_from_dict,
    diagram_to_dict,
    diagrams_of,
)
from .shape_metrics import evaluate_pair
from .volume import BinaryVolume, Volume, downsample_trilinear, load_volume, save_volume

_IO_EXIT = 2
_SEMANTIC_EXIT = 3


def _fail(code: int, message: str):
    print(f"topocube: error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _pin(obj):
    """Round every float to 12 significant digits for stable serialisation."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _pin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pin(v) for v in obj]
    return obj


def _emit_json(obj, out_path: str | None) -> None:
    text = json.dumps(_pin(obj), indent=2) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def _emit_csv(header: list[str], rows: list[list], out_path: str | None) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in row)
        )
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def _load_volume_checked(path: str, raw_dims=None) -> Volume:
    try:
        if raw_dims is not None:
            return load_volume(path, format="raw", dims=raw_dims)
        return load_volume(path)
    except (TopocubeError, OSError) as exc:
        _fail(_IO_EXIT, str(exc))


def _pool_size(n_jobs: int) -> int:
    limit = os.environ.get("TOPOCUBE_THREADS")
    if limit is not None:
        try:
            bound = max(1, int(limit))
        except ValueError:
            _fail(_SEMANTIC_EXIT, f"TOPOCUBE_THREADS must be an integer, got {limit!r}")
    else:
        bound = min(8, os.cpu_count() or 1)
    return max(1, min(bound, n_jobs))


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(sorted({int(t) for t in text.split(",") if t.strip() != ""}))
    except ValueError:
        _fail(_SEMANTIC_EXIT, f"cannot parse dims {text!r}")
    if not dims or any(d not in (0, 1, 2) for d in dims):
        _fail(_SEMANTIC_EXIT, f"dims must be a non-empty subset of 0,1,2, got {text!r}")
    return dims


def _parse_sides(text: str) -> list[int]:
    try:
        sides = [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        _fail(_SEMANTIC_EXIT, f"cannot parse sides {text!r}")
    if not sides:
        _fail(_SEMANTIC_EXIT, "at least one side is required")
    return sides


def _essential_death_arg(text: str):
    if text == "min":
        return "min"
    try:
        return float(text)
    except ValueError:
        _fail(_SEMANTIC_EXIT, f"essential death must be a float or 'min', got {text!r}")


def _sorted_glob(pattern: str) -> list[str]:
    return sorted(globmod.glob(pattern))


def cmd_diagram(args) -> int:
    raw_dims = tuple(args.raw_dims) if args.raw_dims else None
    vol = _load_volume_checked(args.volume, raw_dims=raw_dims)
    ed = _essential_death_arg(args.essential_death) if args.essential_death else None
    diagrams = diagrams_of(vol, essential_death=ed)
    _emit_json([diagram_to_dict(d) for d in diagrams], args.output)
    return 0


def _read_diagram_file(path: str):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail(_IO_EXIT, f"{path}: {exc}")
    if isinstance(obj, dict):
        obj = [obj]
    try:
        return {int(d["dim"]): diagram_from_dict(d) for d in obj}
    except (KeyError, TypeError, ValueError) as exc:
        _fail(_IO_EXIT, f"{path}: not a diagram file ({exc})")


def cmd_distance(args) -> int:
    if args.p < 1:
        _fail(_SEMANTIC_EXIT, f"p must be >= 1, got {args.p}")
    left = _read_diagram_file(args.diagram_a)
    right = _read_diagram_file(args.diagram_b)
    shared = sorted(set(left) & set(right))
    if not shared:
        _fail(_SEMANTIC_EXIT, "the diagram files share no homology dimension")
    result = {"p": args.p, "metric": "bottleneck" if args.bottleneck else "wasserstein"}
    per_dim = {}
    matchings = {}
    for k in shared:
        if args.bottleneck:
            per_dim[str(k)] = bottleneck(left[k], right[k])
        else:
            dist, matching = wasserstein(left[k], right[k], args.p)
            per_dim[str(k)] = dist
            matchings[str(k)] = matching_to_dict(matching)
    result["distance_per_dim"] = per_dim
    _emit_json(result, args.output)
    if args.matching_out and not args.bottleneck:
        _emit_json(matchings, args.matching_out)
    return 0


def cmd_loss(args) -> int:
    f_true = _load_volume_checked(args.true_volume)
    f_pred = _load_volume_checked(args.pred_volume)
    m = None if (args.no_downsample or args.m == 0) else args.m
    try:
        cfg = LossConfig(
            p=args.p,
            lam=getattr(args, "lambda"),
            dims=_parse_dims(args.dims),
            m=m,
            geometric_loss=args.geom,
        )
        report = topological_loss(f_true, f_pred, cfg)
    except TopocubeError as exc:
        _fail(_SEMANTIC_EXIT, str(exc))
    payload = {
        "total": report.total,
        "topological": report.topological,
        "geometric": report.geometric,
        "lambda": cfg.lam,
        "p": cfg.p,
        "dims": list(cfg.dims),
        "M": cfg.m,
        "geometric_loss": cfg.geometric_loss,
        "per_dim": {
            str(k): {"wasserstein": w, "total_persistence": t}
            for k, (w, t) in sorted(report.per_dim.items())
        },
    }
    _emit_json(payload, args.output)
    if args.grad_out:
        save_volume(report.gradient, args.grad_out)
    return 0


def _metric_pairs(args) -> list[tuple[str, str]]:
    if args.manifest:
        try:
            lines = Path(args.manifest).read_text().splitlines()
        except OSError as exc:
            _fail(_IO_EXIT, str(exc))
        pairs = []
        for line in lines:
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                _fail(_SEMANTIC_EXIT, f"manifest line needs 'pred,truth': {line!r}")
            pairs.append((parts[0], parts[1]))
        return pairs
    preds = _sorted_glob(args.pred)
    truths = _sorted_glob(args.truth)
    if len(preds) != len(truths):
        _fail(
            _SEMANTIC_EXIT,
            f"glob counts differ: {len(preds)} predictions vs {len(truths)} truths",
        )
    if not preds:
        _fail(_SEMANTIC_EXIT, "the prediction glob matched no files")
    return list(zip(preds, truths))


def cmd_metrics(args) -> int:
    pairs = _metric_pairs(args)

    def one(pair):
        pred_path, truth_path = pair
        pred = _load_volume_checked(pred_path)
        truth_vol = _load_volume_checked(truth_path)
        truth = BinaryVolume((truth_vol.data >= 0.5).astype(np.uint8))
        try:
            rep = evaluate_pair(pred, truth, sigma=args.sigma, truncate=args.truncate)
        except TopocubeError as exc:
            _fail(_SEMANTIC_EXIT, f"{pred_path}: {exc}")
        return [
            Path(pred_path).stem,
            rep.iou_error,
            rep.volume_error,
            rep.surface_area_error,
            rep.roughness_error,
        ]

    with ThreadPoolExecutor(max_workers=_pool_size(len(pairs))) as pool:
        rows = list(pool.map(one, pairs))
    _emit_csv(
        ["id", "iou_error", "volume_error", "surface_area_error", "roughness_error"],
        rows,
        args.output,
    )
    return 0


def cmd_interp_analysis(args) -> int:
    if args.p < 1:
        _fail(_SEMANTIC_EXIT, f"p must be >= 1, got {args.p}")
    sides = _parse_sides(args.sides)
    paths = _sorted_glob(args.volumes)
    if not paths:
        _fail(_SEMANTIC_EXIT, "the volume glob matched no files")

    def one(path):
        vol = _load_volume_checked(path)
        max_side = min(vol.dims)
        out = []
        reference = diagrams_of(vol)
        for side in sides:
            if side < 2 or side > max_side:
                _fail(
                    _SEMANTIC_EXIT,
                    f"{path}: side {side} outside the valid range [2, {max_side}]",
                )
            resampled = downsample_trilinear(vol, side)
            diagrams = diagrams_of(resampled)
            dists = [
                wasserstein(reference[k], diagrams[k], args.p)[0] for k in range(3)
            ]
            out.append([Path(path).stem, side, *dists])
        return out

    with ThreadPoolExecutor(max_workers=_pool_size(len(paths))) as pool:
        chunks = list(pool.map(one, paths))
    rows = [row for chunk in chunks for row in chunk]
    _emit_csv(
        ["id", "r2", "wasserstein_dim0", "wasserstein_dim1", "wasserstein_dim2"],
        rows,
        args.output,
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topocube",
        description="Topological descriptors, losses, and shape metrics of 3D volumes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_diag = sub.add_parser("diagram", help="persistence diagrams of one volume")
    p_diag.add_argument("volume", help="NPY volume path")
    p_diag.add_argument("-o", "--output", default=None, help="output JSON path (default stdout)")
    p_diag.add_argument("--essential-death", default=None, help="finitization value or 'min'")
    p_diag.add_argument(
        "--raw-dims",
        type=int,
        nargs=3,
        default=None,
        metavar=("N1", "N2", "N3"),
        help="treat the input as raw little-endian float32 with these dims",
    )
    p_diag.set_defaults(func=cmd_diagram)

    p_dist = sub.add_parser("distance", help="distance between two diagram files")
    p_dist.add_argument("diagram_a")
    p_dist.add_argument("diagram_b")
    p_dist.add_argument("--p", type=float, default=2.0)
    p_dist.add_argument("--bottleneck", action="store_true", help="bottleneck instead of Wasserstein")
    p_dist.add_argument("-o", "--output", default=None)
    p_dist.add_argument("--matching-out", default=None, help="write the optimal matchings as JSON")
    p_dist.set_defaults(func=cmd_distance)

    p_loss = sub.add_parser("loss", help="topology-aware loss between truth and prediction")
    p_loss.add_argument("true_volume")
    p_loss.add_argument("pred_volume")
    p_loss.add_argument("--p", type=float, default=2.0)
    p_loss.add_argument("--lambda", type=float, default=0.1)
    p_loss.add_argument("--dims", default="0,1,2")
    p_loss.add_argument("--M", type=int, default=16, dest="m", help="working-grid side (0 disables)")
    p_loss.add_argument("--no-downsample", action="store_true")
    p_loss.add_argument("--geom", choices=("none", "bce", "dice"), default="none")
    p_loss.add_argument("-o", "--output", default=None)
    p_loss.add_argument("--grad-out", default=None, help="write the topological gradient as NPY")
    p_loss.set_defaults(func=cmd_loss)

    p_met = sub.add_parser("metrics", help="shape-error metrics over file pairs")
    p_met.add_argument("--pred", required=True, help="glob of prediction volumes")
    p_met.add_argument("--truth", required=True, help="glob of binary truth volumes")
    p_met.add_argument("--manifest", default=None, help="CSV of pred,truth pairs (overrides globs)")
    p_met.add_argument("--sigma", type=float, default=1.0, help="Gaussian sigma (voxels)")
    p_met.add_argument("--truncate", type=float, default=4.0, help="Gaussian truncation (sigmas)")
    p_met.add_argument("-o", "--output", default=None)
    p_met.set_defaults(func=cmd_metrics)

    p_int = sub.add_parser(
        "interp-analysis",
        help="Wasserstein error between original and resampled diagrams",
    )
    p_int.add_argument("volumes", help="glob of NPY volumes")
    p_int.add_argument("--sides", required=True, help="comma list of target sides, e.g. 32,16,8")
    p_int.add_argument("--p", type=float, default=2.0)
    p_int.add_argument("-o", "--output", default=None)
    p_int.set_defaults(func=cmd_interp_analysis)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TopocubeError as exc:
        _fail(_SEMANTIC_EXIT, str(exc))
    except OSError as exc:
        _fail(_IO_EXIT, str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
