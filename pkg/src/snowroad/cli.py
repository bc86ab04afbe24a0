"""Command-line entry point: ``snowroad detect|eval|synth``.

Exit codes: 0 success, 1 detection failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .errors import DetectionFailed, SnowRoadError
from .evaluation import ImageMetrics, image_metrics, report_from_rows
from .imagecore import BinaryMask, load_image, load_mask, save_image
from .pipeline import PipelineConfig, render_overlay, run_pipeline
from .synthgen import SceneSpec, load_spec, write_corpus

log = logging.getLogger("snowroad")

EXIT_OK, EXIT_DETECTION, EXIT_USAGE = 0, 1, 2

STAGE_FILES = {
    "hsv": "hsv.ppm",
    "blurred": "blurred.ppm",
    "equalized": "equalized.ppm",
    "snow-mask": "snow-mask.pgm",
    "opened": "opened.pgm",
    "triangle-overlay": "triangle-overlay.ppm",
}


class UsageError(Exception):
    pass


def _load_config(path: Optional[str]) -> PipelineConfig:
    return PipelineConfig.load(path) if path else PipelineConfig()


def _dump_stages(stages: dict, out: Path) -> None:
    for name, artifact in stages.items():
        save_image(artifact, out / STAGE_FILES[name])


def cmd_detect(args) -> int:
    cfg = _load_config(args.config)
    img = load_image(args.image)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_pipeline(img, cfg, keep_stages=args.dump_stages)
    except DetectionFailed as exc:
        if args.dump_stages:
            _dump_stages(getattr(exc, "stage_artifacts", {}), out)
        print(f"snowroad: detection failed: {exc}", file=sys.stderr)
        return EXIT_DETECTION
    save_image(render_overlay(img, result.road), out / "overlay.ppm")
    if args.dump_stages:
        _dump_stages(result.stage_artifacts, out)
    (out / "result.json").write_text(json.dumps(result.to_json_dict(cfg), indent=2) + "\n")
    vp = result.vanishing_point
    print(f"vanishing point ({vp.x}, {vp.y}); road pixels {result.mask.count()}")
    return EXIT_OK


def _eval_one(job) -> ImageMetrics:
    image_path, truth_path, image_id, cfg = job
    img = load_image(image_path)
    truth = load_mask(truth_path)
    try:
        pred = run_pipeline(img, cfg).mask
        flags = ()
    except DetectionFailed as exc:
        log.warning("%s: %s", image_id, exc)
        pred = BinaryMask.zeros(img.width, img.height)
        flags = ("detection_failed",)
    return image_metrics(pred, truth, image_id, flags)


def cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    corpus = Path(args.corpus)
    images = sorted((corpus / "images").glob("*.ppm")) + sorted((corpus / "images").glob("*.png"))
    if not images:
        raise UsageError(f"no images under {corpus / 'images'}")
    jobs = []
    for p in sorted(images, key=lambda q: q.stem):
        truth = corpus / "truth" / f"{p.stem}.pgm"
        if not truth.is_file():
            raise UsageError(f"missing ground truth {truth}")
        jobs.append((p, truth, p.stem, cfg))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_eval_one, jobs))
    else:
        rows = [_eval_one(j) for j in jobs]
    report = report_from_rows(rows)
    Path(args.report).write_text(report.to_json())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    print(f"{len(rows)} images: mean FNR {report.mean_fnr:.4f}, mean FPR {report.mean_fpr:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = load_spec(args.spec) if args.spec else SceneSpec()
    seed = spec.seed if args.seed is None else args.seed
    ids = write_corpus(args.out, spec, args.n, seed)
    print(f"wrote {len(ids)} scenes to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snowroad", description="Snow-covered road detection.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect the road in one image")
    p.add_argument("image")
    p.add_argument("--config")
    p.add_argument("--out", default=".")
    p.add_argument("--dump-stages", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a corpus against its ground truth")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config")
    p.add_argument("--report", required=True)
    p.add_argument("--csv", help="also write id,fnr,fpr rows here")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", help="JSON scene spec (defaults used when omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except DetectionFailed as exc:
        print(f"snowroad: detection failed: {exc}", file=sys.stderr)
        return EXIT_DETECTION
    except (UsageError, SnowRoadError, OSError) as exc:
        print(f"snowroad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
