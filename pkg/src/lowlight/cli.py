"""Command line entry point: ``lowlight <command> ...``.

Exit status is 0 on success, 1 for file/parse errors and 2 for invalid
parameters or inputs. Every command that writes a file also writes a run
manifest next to it (``<output>.manifest.json``).
"""
import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .calib import (
    REFERENCE_DISTORTION,
    REFERENCE_IMAGE_SIZE,
    REFERENCE_INTRINSICS,
    DistortionCoeffs,
    TargetGrid,
    calibrate,
    extract_centroids,
    load_camera,
    make_synthetic_views,
    project_points,
    read_centroid_csv,
    render_blobs,
    undistort,
    write_centroid_csv,
)
from .classify import (
    N_FEATURES,
    SoftmaxClassifier,
    evaluate,
    load_model,
    make_feature_clusters,
    read_features_csv,
    save_model,
    write_features_csv,
)
from .enhance import (
    METHODS,
    AheParams,
    ClaheParams,
    adaptive_equalize,
    enhance,
    enhance_rgb,
    select_beta,
)
from .exceptions import (
    BlobCountError,
    DegenerateGeometryError,
    EmptyTargetError,
    FileFormatError,
    InvalidInputError,
    InsufficientDataError,
    LowlightError,
)
from .imgcore import histogram, read_pnm, write_pnm
from .jsonio import atomic_write_text, dump_json, dumps_json
from .metrics import compare

PNM_SUFFIXES = {".pgm", ".ppm", ".pnm"}


class UsageError(Exception):
    """Bad command-line parameters (exit 2)."""


def _manifest_path(output):
    output = Path(output)
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


def _write_manifest(command, params, inputs, outputs, started, extra=None, path=None):
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }
    if extra:
        manifest.update(extra)
    dump_json(manifest, path or _manifest_path(outputs[0]))


# ---------------------------------------------------------------- enhance


def _enhance_params(args):
    if args.method == "he":
        return bool(args.classic), {"classic": bool(args.classic)}
    if args.method == "ahe":
        if args.beta == "auto":
            beta = None
        else:
            try:
                beta = float(args.beta)
            except ValueError:
                raise UsageError(f"--beta must be 'auto' or a number, got {args.beta!r}") from None
        params = AheParams(beta=beta, low_threshold=args.tl, high_threshold=args.th, inclusive=args.inclusive)
        return params, {"beta": args.beta, "tl": args.tl, "th": args.th, "inclusive": args.inclusive}
    tw = args.tile_width or args.tile
    th = args.tile_height or args.tile
    params = ClaheParams(tile_width=tw, tile_height=th, clip_limit=args.clip)
    return params, {"tile_width": tw, "tile_height": th, "clip_limit": args.clip}


def _enhance_one(src, dst, method, params):
    img = read_pnm(src)
    info = {}
    if method == "ahe" and img.ndim == 2:
        out, beta = adaptive_equalize(img, params, return_beta=True)
        info["beta_used"] = beta
    elif method == "ahe":
        out = enhance_rgb(img, method, params)
        if params.beta is None:
            info["beta_used"] = [select_beta(histogram(img[..., c]), params) for c in range(3)]
    else:
        out = enhance(img, method, params)
    write_pnm(out, dst)
    return info


def cmd_enhance(args):
    started = time.perf_counter()
    params, recorded = _enhance_params(args)
    src = Path(args.input)
    out = Path(args.output)
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.suffix.lower() in PNM_SUFFIXES)
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / p.name for p in files]
        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            infos = list(pool.map(lambda pair: _enhance_one(*pair, args.method, params), zip(files, targets)))
        per_file = {p.name: info for p, info in zip(files, infos) if info}
        extra = {"per_file": per_file} if per_file else None
        _write_manifest("enhance", {"method": args.method, **recorded}, files, targets, started,
                        extra, path=out / "manifest.json")
    else:
        info = _enhance_one(src, out, args.method, params)
        _write_manifest("enhance", {"method": args.method, **recorded}, [src], [out], started, info)
    return 0


# ---------------------------------------------------------------- metrics


def cmd_metrics(args):
    ref = read_pnm(args.reference)
    test = read_pnm(args.test)
    if ref.ndim != test.ndim:
        raise InvalidInputError("type mismatch: cannot compare a gray image with an RGB image")
    report = compare(ref, test)
    sys.stdout.write(dumps_json(report.to_dict()))
    return 0


# ---------------------------------------------------------------- calibrate


def _parse_grid(text):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--grid must look like 8x8, got {text!r}") from None
    return rows, cols


def cmd_calibrate(args):
    started = time.perf_counter()
    rows, cols = _parse_grid(args.grid)
    grid = TargetGrid(rows=rows, cols=cols, spacing=args.spacing)
    views, used, skipped = [], [], []
    for path in args.views:
        path = Path(path)
        if path.suffix.lower() in PNM_SUFFIXES:
            img = read_pnm(path)
            if img.ndim != 2:
                raise InvalidInputError(f"{path}: calibration views must be gray images")
            try:
                pts = extract_centroids(img, threshold=args.threshold, grid=grid)
            except (BlobCountError, EmptyTargetError, DegenerateGeometryError) as exc:
                print(f"warning: skipping {path}: {exc}", file=sys.stderr)
                skipped.append({"view": str(path), "reason": str(exc)})
                continue
            views.append((grid.points, pts))
        else:
            world, image = read_centroid_csv(path)
            if len(world) != grid.size:
                msg = f"found {len(world)} points, expected {grid.size}"
                print(f"warning: skipping {path}: {msg}", file=sys.stderr)
                skipped.append({"view": str(path), "reason": msg})
                continue
            views.append((world, image))
        used.append(path)
    if len(views) < 3:
        raise InsufficientDataError(f"need at least 3 usable views, got {len(views)}")
    result = calibrate(views, max_iter=args.max_iter)
    dump_json(result.to_dict(), args.output)
    _write_manifest(
        "calibrate",
        {"grid": f"{rows}x{cols}", "spacing": args.spacing, "threshold": args.threshold,
         "max_iter": args.max_iter},
        args.views,
        [args.output],
        started,
        {"used_views": [str(p) for p in used], "skipped_views": skipped},
    )
    return 0


# ---------------------------------------------------------------- undistort


def cmd_undistort(args):
    started = time.perf_counter()
    img = read_pnm(args.input)
    try:
        intr, dist = load_camera(args.model)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{args.model}: not a camera model ({exc})") from None
    write_pnm(undistort(img, intr, dist), args.output)
    _write_manifest("undistort", {"model": str(args.model)}, [args.input, args.model], [args.output], started)
    return 0


# ---------------------------------------------------------------- train / eval


def cmd_train(args):
    started = time.perf_counter()
    X, y, _ = read_features_csv(args.features, n_features=args.n_features)
    model = SoftmaxClassifier(
        n_classes=args.classes,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        l2=args.l2,
        seed=args.seed,
    ).fit(X, y)
    save_model(model, args.output)
    params = {"classes": args.classes, "learning_rate": args.lr, "epochs": args.epochs,
              "batch_size": args.batch_size, "l2": args.l2, "seed": args.seed}
    _write_manifest("train", params, [args.features], [args.output], started,
                    {"loss_curve": model.loss_curve_})
    return 0


def cmd_eval(args):
    started = time.perf_counter()
    try:
        model = load_model(args.model)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{args.model}: not a classifier model ({exc})") from None
    X, y, cond = read_features_csv(args.features, n_features=model.coef_.shape[0])
    table = evaluate(model, X, y, cond)
    text = dumps_json({"accuracy": dict(table), "n_records": int(len(y))})
    sys.stdout.write(text)
    if args.output:
        atomic_write_text(text, args.output)
        _write_manifest("eval", {}, [args.features, args.model], [args.output], started)
    return 0


# ---------------------------------------------------------------- fixtures


def cmd_synth_views(args):
    """Simulated LED-grid detections (CSV) and optional rendered PGM views."""
    started = time.perf_counter()
    rows, cols = _parse_grid(args.grid)
    grid = TargetGrid(rows=rows, cols=cols, spacing=args.spacing)
    dist = DistortionCoeffs() if args.no_distortion else REFERENCE_DISTORTION
    views, poses = make_synthetic_views(
        REFERENCE_INTRINSICS, dist, n_views=args.views, grid=grid, noise=args.noise, seed=args.seed
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, ((world, image), pose) in enumerate(zip(views, poses)):
        path = out / f"view{i:02d}.csv"
        write_centroid_csv(world, image, path)
        written.append(path)
        if args.render:
            centers = project_points(grid.points3d, REFERENCE_INTRINSICS, pose, dist)
            w, h = REFERENCE_IMAGE_SIZE
            img_path = out / f"view{i:02d}.pgm"
            write_pnm(render_blobs(centers, (h, w)), img_path)
            written.append(img_path)
    _write_manifest("synth-views", {"views": args.views, "seed": args.seed, "noise": args.noise,
                                    "grid": args.grid, "spacing": args.spacing,
                                    "distortion": not args.no_distortion},
                    [], written, started, path=out / "manifest.json")
    return 0


def cmd_synth_features(args):
    started = time.perf_counter()
    X, y, cond = make_feature_clusters(
        n_per_class=args.per_class, n_classes=args.classes, n_features=args.n_features, seed=args.seed
    )
    write_features_csv(X, y, cond, args.output)
    _write_manifest("synth-features", {"per_class": args.per_class, "classes": args.classes,
                                       "n_features": args.n_features, "seed": args.seed},
                    [], [args.output], started)
    return 0


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="lowlight", description="Low-light IR imaging: enhancement, metrics, calibration and classification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="contrast-enhance a PNM image or a directory of them")
    p.add_argument("input")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--classic", action="store_true", help="he: normalize by n - cdf_min")
    p.add_argument("--beta", default="auto", help="ahe: 'auto' or a positive number")
    p.add_argument("--tl", type=int, default=85, help="ahe: low/middle threshold")
    p.add_argument("--th", type=int, default=170, help="ahe: middle/high threshold")
    p.add_argument("--inclusive", action="store_true", help="ahe: include the level's own mass")
    p.add_argument("--tile", type=int, default=32, help="clahe: square tile size")
    p.add_argument("--tile-width", type=int)
    p.add_argument("--tile-height", type=int)
    p.add_argument("--clip", type=float, default=4.0, help="clahe: clip limit")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for directory input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("metrics", help="entropy / MSE / PSNR / PSNR-VAR report as JSON")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("calibrate", help="calibrate from centroid CSVs or rendered PGM views")
    p.add_argument("views", nargs="+")
    p.add_argument("--grid", default="8x8")
    p.add_argument("--spacing", type=float, default=25.0)
    p.add_argument("--threshold", type=int, default=40, help="blob threshold for PGM views")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("undistort", help="remove lens distortion using a calibration JSON")
    p.add_argument("input")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_undistort)

    p = sub.add_parser("train", help="train the softmax head on a feature CSV")
    p.add_argument("features")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--n-features", type=int, default=N_FEATURES)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-condition accuracy of a trained model")
    p.add_argument("features")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth-views", help="write synthetic calibration views")
    p.add_argument("--views", type=int, default=5)
    p.add_argument("--grid", default="8x8")
    p.add_argument("--spacing", type=float, default=25.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--no-distortion", action="store_true")
    p.add_argument("--render", action="store_true", help="also write rendered PGM images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth_views)

    p = sub.add_parser("synth-features", help="write a synthetic feature CSV")
    p.add_argument("--per-class", type=int, default=500)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--n-features", type=int, default=N_FEATURES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth_features)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, LowlightError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
