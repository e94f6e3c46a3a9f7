"""Command-line entry point: ``panolayout <command> ...``.

Exit codes: 0 success, 1 validation failure, 2 empty or unmatched input,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (
    CutoutSpec,
    StretchParams,
    cutout_masks,
    horizontal_flip,
    horizontal_rotate,
    sample_stretch,
)
from .errors import DataError, LayoutError, NumericError
from .fit import OBJECTIVES, FitConfig, fit_layout
from .geometry import ImageGeometry
from .layout import (
    SHAPES,
    OcclusionMask,
    detect_occlusion_columns,
    generate_synthetic_room,
    polygon_from_corners,
    polygon_to_boundaries,
    polygon_to_corners,
    pool_mask,
)
from .layout_io import dumps_layout, read_layout, write_layout
from .losses import LossConfig, compute_losses, corner_targets
from .metrics import evaluate_pair, write_metrics_csv
from .pointcloud import VARIANTS, generate, write_xyz

EXIT_OK, EXIT_INVALID, EXIT_EMPTY, EXIT_NUMERIC = 0, 1, 2, 3
LAYOUT_SUFFIXES = (".json", ".txt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2, which is reserved for empty input here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _json_dump(obj, path=None):
    text = json.dumps(obj, indent=1) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _map(fn, items, jobs):
    """Ordered map; results come back in input order whatever ``jobs`` is."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_boundaries(path, num_columns):
    corners, g = read_layout(path)
    room = polygon_from_corners(corners, g)
    return polygon_to_boundaries(room, g, num_columns), room, g


def _occlusion_mask(room, g, num_columns):
    full = polygon_to_boundaries(room, g, g.width)
    m = detect_occlusion_columns(full, layout=room)
    return OcclusionMask(pool_mask(m.columns, num_columns), m.corners_occluded)


# ---------------------------------------------------------------------------
# evaluate


def _evaluate_one(job):
    name, gt_path, pred_path, resolution = job
    gt, g = read_layout(gt_path)
    pred, g_pred = read_layout(pred_path, g)
    if g_pred != g:
        raise DataError(f"{name}: image geometry differs between gt and prediction")
    return evaluate_pair(gt, pred, g, resolution, id=name)


def _split_means(reports):
    rows = []
    for label, keep in (("occluded", True), ("non_occluded", False), ("all", None)):
        sel = [r for r in reports if keep is None or r.occluded == keep]
        row = {"subset": label, "count": len(sel)}
        for key in ("iou2d", "iou3d", "ce", "pe"):
            vals = [getattr(r, key) for r in sel if getattr(r, key) is not None]
            row[key] = repr(float(np.mean(vals))) if vals else ""
        rows.append(row)
    return rows


def cmd_evaluate(args) -> int:
    gt_dir, pred_dir = Path(args.gt_dir), Path(args.pred_dir)
    for d in (gt_dir, pred_dir):
        if not d.is_dir():
            raise UsageError(f"{d} is not a directory")
    gt_files = {p.name: p for p in gt_dir.iterdir() if p.suffix in LAYOUT_SUFFIXES}
    pred_files = {p.name: p for p in pred_dir.iterdir() if p.suffix in LAYOUT_SUFFIXES}
    matched = sorted(set(gt_files) & set(pred_files))
    skipped = sorted(set(gt_files) ^ set(pred_files))
    for name in skipped:
        side = "prediction" if name in gt_files else "ground truth"
        print(f"skip {name}: no matching {side}", file=sys.stderr)

    jobs = [(n, gt_files[n], pred_files[n], args.resolution) for n in matched]
    reports = _map(_evaluate_one, jobs, args.jobs)
    write_metrics_csv(args.out, reports)
    if args.occlusion_split:
        split_path = Path(args.out).with_name(Path(args.out).stem + "_split.csv")
        with open(split_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["subset", "count", "iou2d", "iou3d", "ce", "pe"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(_split_means(reports))
    print(f"evaluated {len(reports)} pairs, skipped {len(skipped)}")
    return EXIT_OK if reports else EXIT_EMPTY


# ---------------------------------------------------------------------------
# losses


def _load_features(path):
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path, ndmin=1)


def _corner_columns(corners, g, n):
    return np.mod(np.rint((corners.u + 0.5) * n / g.width - 0.5), n)


def _column_flags(mask, n):
    if mask is None:
        return np.zeros(n, dtype=bool)
    return np.asarray(getattr(mask, "columns", mask), dtype=bool)


def cmd_losses(args) -> int:
    if args.mode == "student" and (args.features_a is None or args.features_b is None):
        raise UsageError("student mode needs both --features-a and --features-b")
    n = args.columns
    gt, room, g = _load_boundaries(args.gt, n)
    pred, _, g_pred = _load_boundaries(args.pred, n)
    if g_pred != g:
        raise DataError("image geometry differs between gt and prediction")
    cfg = LossConfig(occlusion_weight=args.lam, num_columns=n,
                     corner_smoothing_base=args.corner_base)
    if args.mask == "detect":
        mask = _occlusion_mask(room, g, n)
    elif args.mask == "all":
        mask = np.ones(n, dtype=bool)
    else:
        mask = None
    pred_prob = corner_targets(_corner_columns(pred.corners, g, n), n, args.corner_base)
    teacher = student = None
    if args.mode == "student":
        teacher, student = _load_features(args.features_a), _load_features(args.features_b)
    out = compute_losses(gt, pred, _corner_columns(gt.corners, g, n), pred_prob, mask, cfg,
                         args.mode, teacher, student)
    record = out.to_dict()
    record["occlusion_weight"] = args.lam
    record["occluded_columns"] = int(np.count_nonzero(_column_flags(mask, n)))
    _json_dump(record, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# pcdgen


def cmd_pcdgen(args) -> int:
    corners, g = read_layout(args.layout)
    room = polygon_from_corners(corners, g)
    cloud = generate(args.variant, room, g, args.n, args.seed)
    write_xyz(args.out, cloud, args.seed)
    print(f"{cloud.n} {cloud.variant}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def _room_seed(seed, i):
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


def _synth_one(job):
    i, shape, seed, out_dir = job
    g = ImageGeometry()
    room = generate_synthetic_room(_room_seed(seed, i), shape, camera_height=g.camera_height)
    corners = polygon_to_corners(room, g)
    # the written file must reconstruct to a Manhattan room
    check = polygon_from_corners(corners, g)
    if not check.is_manhattan(1e-6):
        raise DataError(f"room {i} failed the Manhattan check")
    path = Path(out_dir) / f"room_{i:04d}.json"
    write_layout(path, corners, g)
    return path.name


def cmd_synth(args) -> int:
    shapes = [s.strip() for s in args.shapes.split(",") if s.strip()]
    bad = [s for s in shapes if s not in SHAPES]
    if not shapes or bad:
        raise UsageError(f"--shapes takes a comma list of {', '.join(SHAPES)}")
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, shapes[i % len(shapes)], args.seed, str(out_dir)) for i in range(args.count)]
    names = _map(_synth_one, jobs, args.jobs)
    print(f"wrote {len(names)} rooms to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    n = args.columns
    target, room, g = _load_boundaries(args.target, n)
    init, _, g_init = _load_boundaries(args.init, n)
    if g_init != g:
        raise DataError("image geometry differs between init and target")
    mask = _occlusion_mask(room, g, n) if args.mask == "detect" else None
    cfg = FitConfig.for_objective(args.objective, learning_rate=args.lr, max_iters=args.max_iters)
    trace = fit_layout(init, target, mask, cfg)
    _json_dump(trace.to_dict(), args.out)
    if args.loss_csv:
        with open(args.loss_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "loss"])
            for i, v in enumerate(trace.losses):
                w.writerow([i, repr(float(v))])
    print(f"iterations={trace.iterations} loss={trace.final_loss:.6g} iou3d={trace.iou3d:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# augment


def cmd_augment(args) -> int:
    corners, g = read_layout(args.input)
    room = polygon_from_corners(corners, g)
    a = polygon_to_boundaries(room, g, g.width)
    if args.op == "cutout":
        spec = CutoutSpec(args.side, args.count, args.probability)
        rects = cutout_masks(corners, spec, args.seed, g)
        _json_dump({"image_width": g.width, "image_height": g.height,
                    "rectangles": [list(r) for r in rects]}, args.out)
        return EXIT_OK
    if args.op == "stretch":
        if args.kx is None and args.kz is None:
            p = sample_stretch(np.random.default_rng(args.seed))
        else:
            p = StretchParams(args.kx or 1.0, args.kz or 1.0)
        out = polygon_to_corners(room.scaled(p.kx, p.kz), g)
    elif args.op == "rotate":
        out = horizontal_rotate(a, args.shift).corners
    else:
        out = horizontal_flip(a).corners
    Path(args.out).write_text(dumps_layout(out, g))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    common.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")

    p = _Parser(prog="panolayout", description="Room layout geometry, losses, metrics and fitting.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("evaluate", parents=[common], help="score predictions against ground truth")
    e.add_argument("gt_dir")
    e.add_argument("pred_dir")
    e.add_argument("out")
    e.add_argument("--resolution", type=int, default=512)
    e.add_argument("--occlusion-split", action="store_true",
                   help="also write per-subset means to <out>_split.csv")
    e.set_defaults(func=cmd_evaluate)

    lo = sub.add_parser("losses", parents=[common], help="loss breakdown for one pair")
    lo.add_argument("gt")
    lo.add_argument("pred")
    lo.add_argument("--mode", choices=("teacher", "student"), default="teacher")
    lo.add_argument("--lambda", dest="lam", type=float, default=5.0,
                    help="boundary weight inside occluded columns")
    lo.add_argument("--mask", choices=("detect", "all", "none"), default="detect")
    lo.add_argument("--columns", type=int, default=256)
    lo.add_argument("--corner-base", type=float, default=0.0,
                    help="corner heat-map decay per column; 0 gives one-hot peaks")
    lo.add_argument("--features-a", help="teacher features (.npy or text)")
    lo.add_argument("--features-b", help="student features (.npy or text)")
    lo.add_argument("--out", help="write JSON here instead of stdout")
    lo.set_defaults(func=cmd_losses)

    pc = sub.add_parser("pcdgen", parents=[common], help="point cloud from a layout")
    pc.add_argument("layout")
    pc.add_argument("out")
    pc.add_argument("--variant", choices=VARIANTS, default="layout")
    pc.add_argument("--n", type=int, default=8000)
    pc.set_defaults(func=cmd_pcdgen)

    sy = sub.add_parser("synth", parents=[common], help="synthetic layout corpus")
    sy.add_argument("out_dir")
    sy.add_argument("--count", type=int, default=10)
    sy.add_argument("--shapes", default=",".join(SHAPES))
    sy.set_defaults(func=cmd_synth)

    fi = sub.add_parser("fit", parents=[common], help="fit boundaries to a target layout")
    fi.add_argument("init")
    fi.add_argument("target")
    fi.add_argument("out")
    fi.add_argument("--objective", choices=sorted(OBJECTIVES), default="iou")
    fi.add_argument("--lr", type=float, default=FitConfig.learning_rate)
    fi.add_argument("--max-iters", type=int, default=FitConfig.max_iters)
    fi.add_argument("--columns", type=int, default=256)
    fi.add_argument("--mask", choices=("detect", "none"), default="detect")
    fi.add_argument("--loss-csv", help="also write the loss curve as CSV")
    fi.set_defaults(func=cmd_fit)

    au = sub.add_parser("augment", parents=[common], help="augment one layout")
    au.add_argument("input")
    au.add_argument("out")
    au.add_argument("--op", choices=("stretch", "rotate", "flip", "cutout"), required=True)
    au.add_argument("--kx", type=float)
    au.add_argument("--kz", type=float)
    au.add_argument("--shift", type=int, default=0, help="rotation in pixel columns")
    au.add_argument("--side", type=int, default=50)
    au.add_argument("--count", type=int, default=3)
    au.add_argument("--probability", type=float, default=0.5)
    au.set_defaults(func=cmd_augment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LayoutError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
