"""Command-line interface.

Machine-readable output goes to stdout as JSON; diagnostics go to stderr.
Exit status: 0 success, 1 input/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from PIL import Image

from . import payload as payload_mod
from .baselines import baseline_scores
from .errors import RRCapError
from .evalstats import evaluate, results_document, run_manifest, write_item_csv
from .pointcloud_io import load_ply
from .projection import RenderParams, render_views
from .quality import DEFAULT_BINS, score
from .saliency import DEFAULT_SCALE, extract_view_saliency

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def _threads(value):
    if value == "auto":
        return os.cpu_count() or 1
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'")
    return n


def _add_render(p):
    p.add_argument("--resolution", type=int, default=512, help="square view size in pixels (default 512)")
    p.add_argument("--splat-radius", type=int, default=1, help="point disc radius in pixels (default 1)")
    p.add_argument("--background", type=int, default=255, help="background gray level (default 255)")
    p.add_argument("--padding", type=float, default=0.02, help="border fraction per side (default 0.02)")


def _add_scale(p, default=DEFAULT_SCALE):
    p.add_argument("--scale", "-s", type=int, default=default, help="saliency downsampling scale")


def _add_common(p):
    p.add_argument("--threads", type=_threads, default=None,
                   help="worker threads or 'auto' (falls back to $RRCAP_THREADS, then 1)")
    p.add_argument("--saliency-blur", type=float, default=0.0,
                   help="Gaussian smoothing of saliency maps in map pixels (default 0 = off); "
                        "must match between extract and score")


def _add_scoring(p):
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="histogram bins (default 64)")
    p.add_argument("--no-weighting", action="store_true", help="pool raw per-view similarity (drop content weights)")
    p.add_argument("--no-histogram", action="store_true", help="drop the histogram-correlation term")
    p.add_argument("--normalize-weights", action="store_true", help="rescale content weights to mean one")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rrcap", description="Reduced-reference point cloud quality assessment.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("project", help="render the six views of a cloud to PNG")
    p.add_argument("ply")
    p.add_argument("-o", "--output", default=".", help="output directory")
    p.add_argument("--saliency", action="store_true", help="also write 16-bit saliency PNGs")
    _add_render(p)
    _add_scale(p)
    _add_common(p)

    p = sub.add_parser("extract", help="build a reference payload (.rrcap)")
    p.add_argument("ply")
    p.add_argument("-o", "--output", required=True, help="payload file to write")
    _add_render(p)
    _add_scale(p)
    _add_common(p)

    p = sub.add_parser("score", help="score a distorted cloud against a payload")
    p.add_argument("payload")
    p.add_argument("ply")
    _add_scale(p, default=None)
    _add_scoring(p)
    _add_common(p)

    p = sub.add_parser("baseline", help="projected PSNR / SSIM between two clouds")
    p.add_argument("reference")
    p.add_argument("distorted")
    _add_render(p)
    _add_common(p)

    p = sub.add_parser("evaluate", help="correlate scores with MOS over a manifest")
    p.add_argument("manifest")
    p.add_argument("--per-item-csv", default=None, help="write per-item scores to this CSV")
    p.add_argument("--plot", default=None, help="write a score-vs-MOS figure to this file")
    _add_scale(p, default=None)
    _add_scoring(p)
    _add_common(p)
    return parser


def _render_params(args) -> RenderParams:
    return RenderParams(args.resolution, args.splat_radius, args.background, args.padding)


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("RRCAP_THREADS")
    if env:
        try:
            return _threads(env)
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"bad RRCAP_THREADS value {env!r}") from None
    return 1


def _emit(doc, out):
    out.write(json.dumps(doc, indent=2))
    out.write("\n")


def _score_opts(args, threads):
    if args.bins < 2:
        raise UsageError("--bins must be >= 2")
    return dict(
        use_weighting=not args.no_weighting,
        use_histogram=not args.no_histogram,
        bins=args.bins,
        normalize_weights=args.normalize_weights,
        blur_sigma=args.saliency_blur,
        threads=threads,
    )


def _check_scale(args, payload):
    if args.scale is not None and args.scale != payload.scale:
        raise UsageError(f"--scale {args.scale} does not match the payload's scale {payload.scale}")


def cmd_project(args, threads, out, err):
    params = _render_params(args)
    pc = load_ply(args.ply)
    if args.saliency:
        params.check_scale(args.scale)
    views = render_views(pc, params, threads=threads)
    os.makedirs(args.output, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.ply))[0]
    written = []
    for view in views:
        path = os.path.join(args.output, f"{stem}_{view.axis_label}.png")
        Image.fromarray(np.asarray(view.rgb), mode="RGB").save(path)
        written.append(path)
        if args.saliency:
            sal = extract_view_saliency(view, args.scale, args.saliency_blur).data
            peak = sal.max()
            scaled = np.rint(sal / peak * 65535) if peak > 0 else np.zeros_like(sal)
            spath = os.path.join(args.output, f"{stem}_{view.axis_label}_saliency.png")
            Image.fromarray(scaled.astype(np.uint16)).save(spath)
            written.append(spath)
    _emit({"views": written, "params": params.as_dict(), "colorless": pc.colorless}, out)


def cmd_extract(args, threads, out, err):
    params = _render_params(args)
    try:
        params.check_scale(args.scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pc = load_ply(args.ply)
    if pc.colorless:
        err.write(f"warning: {args.ply} has no color properties; using neutral gray\n")
    p = payload_mod.extract_reference(pc, params, args.scale, args.saliency_blur, threads=threads)
    blob = payload_mod.encode(p)
    with open(args.output, "wb") as fh:
        fh.write(blob)
    _emit({"payload": args.output, "bytes": len(blob), "points": pc.count, "scale": p.scale,
           "params": params.as_dict()}, out)


def cmd_score(args, threads, out, err):
    p = payload_mod.load(args.payload)
    _check_scale(args, p)
    report = score(p, load_ply(args.ply), **_score_opts(args, threads))
    _emit(report.as_dict(), out)


def cmd_baseline(args, threads, out, err):
    params = _render_params(args)
    ref = render_views(load_ply(args.reference), params, threads=threads)
    dist = render_views(load_ply(args.distorted), params, threads=threads)
    doc = baseline_scores(ref, dist).as_dict()
    doc["params"] = params.as_dict()
    _emit(doc, out)


def cmd_evaluate(args, threads, out, err):
    # items are scored in parallel; each item renders on a single thread
    opts = _score_opts(args, 1)
    opts.pop("threads")

    def log(msg):
        err.write(msg + "\n")

    if args.scale is not None:
        from .evalstats import read_manifest
        for item in read_manifest(args.manifest):
            _check_scale(args, payload_mod.load(item.payload_path))
    records, reports = run_manifest(args.manifest, threads=threads, log=log, **opts)
    stats = evaluate(records)
    params = dict(reports[0].params) if reports else {}
    doc = results_document(records, stats, params)
    if args.per_item_csv:
        write_item_csv(args.per_item_csv, records, stats)
    if args.plot:
        from .plotting import scatter_fit
        scatter_fit(records, stats, args.plot)
    _emit(doc, out)


COMMANDS = {
    "project": cmd_project,
    "extract": cmd_extract,
    "score": cmd_score,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(err)
            return EXIT_INPUT
        threads = _resolve_threads(args)
        COMMANDS[args.command](args, threads, out, err)
    except UsageError as exc:
        err.write(f"rrcap: error: {exc}\n")
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_INPUT
    except (RRCapError, OSError, ValueError) as exc:
        err.write(f"rrcap: error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        err.write(f"rrcap: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
