"""Single executable exposing the pipeline: augment, stats, postprocess,
evaluate, attn-check, overlay.

Exit codes: 0 success, 1 validation error (bad flags or bad input files),
2 internal error. All outputs are deterministic given inputs and seed. The
FLC_THREADS environment variable caps internal parallelism (0 or unset =
automatic).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import augment as aug
from . import gradcheck, metrics, stats
from .errors import FloorLineError
from .io_formats import (
    FacadeLines,
    ImageLines,
    read_annotations,
    read_label_mask,
    read_lines,
    write_label_mask,
    write_lines,
)
from .postprocess import PipelineConfig, run_pipeline
from .svg import render_overlay


@dataclass(frozen=True)
class RunConfig:
    """All tunables a run can depend on, with their deliberate defaults."""

    seed: int = 0
    min_area: int = 50
    band_px: int = 3
    parallel_slope_eps: float = 1e-4
    convergence_tol: float = 1e-8
    max_iters: int = 5000

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if min(self.min_area, self.band_px, self.max_iters) < 1:
            raise ValueError("min_area, band_px, and max_iters must be positive")
        if self.parallel_slope_eps <= 0 or self.convergence_tol <= 0:
            raise ValueError("parallel_slope_eps and convergence_tol must be positive")

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            min_area=self.min_area,
            parallel_slope_eps=self.parallel_slope_eps,
            convergence_tol=self.convergence_tol,
            max_iters=self.max_iters,
        )


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _max_workers() -> int:
    raw = os.environ.get("FLC_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise FloorLineError(f"FLC_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise FloorLineError(f"FLC_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _mask_stem(path: Path) -> str:
    name = path.name
    for suffix in (".semantic.pgm", ".floor.pgm", ".pgm"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# -- augment -------------------------------------------------------------------


def _load_mapping(path) -> dict[int, int]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise FloorLineError(f"{path}: mapping must be a JSON object of code -> code")
    return {int(k): int(v) for k, v in doc.items()}


def cmd_augment(args) -> int:
    facade_dir = Path(args.facades)
    out_dir = Path(args.out)
    semantic_files = sorted(facade_dir.glob("*.semantic.pgm"))
    if not semantic_files:
        print(f"error: no *.semantic.pgm files in {facade_dir}", file=sys.stderr)
        return 1
    mapping = _load_mapping(args.mapping) if args.mapping else None

    sources = []
    for sem_path in semantic_files:
        stem = _mask_stem(sem_path)
        floor_path = facade_dir / f"{stem}.floor.pgm"
        if not floor_path.exists():
            print(f"error: {sem_path} has no matching {floor_path.name}", file=sys.stderr)
            return 1
        semantic = read_label_mask(sem_path)
        if mapping is not None:
            semantic = aug.simplify_semantics(semantic, mapping)
        sources.append((stem, aug.RectifiedFacade(semantic, read_label_mask(floor_path))))

    records = read_annotations(args.annotations)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    manifest = {"seed": args.seed, "samples": []}
    for rec in records:
        picks = [int(rng.integers(len(sources))) for _ in rec.facades]
        pairs = [(sources[p][1], quad) for p, quad in zip(picks, rec.facades)]
        sample = aug.generate_sample(pairs, rec.width, rec.height, seed=args.seed)
        write_label_mask(sample.semantic_mask, out_dir / f"{rec.image_id}.semantic.pgm")
        write_label_mask(sample.floor_mask, out_dir / f"{rec.image_id}.floor.pgm")
        manifest["samples"].append(
            {
                "image": rec.image_id,
                "width": rec.width,
                "height": rec.height,
                "facades": [
                    {
                        "source": sources[p][0],
                        "orientation": quad.orientation,
                        "quad": [[c.x, c.y] for c in quad.corners],
                        "homography": hom.to_flat(),
                    }
                    for p, (_, quad, hom) in zip(picks, sample.provenance)
                ],
            }
        )
    _write_json(manifest, out_dir / "manifest.json")
    print(f"wrote {len(records)} sample pair(s) to {out_dir}")
    return 0


# -- stats ----------------------------------------------------------------------


def _floor_mask_paths(mask_dir: Path) -> list[Path]:
    return sorted(p for p in mask_dir.glob("*.pgm") if not p.name.endswith(".semantic.pgm"))


def cmd_stats(args) -> int:
    mask_paths = _floor_mask_paths(Path(args.masks))
    if not mask_paths:
        print(f"error: no floor mask *.pgm files in {args.masks}", file=sys.stderr)
        return 1
    masks = [read_label_mask(p) for p in mask_paths]

    table = stats.bound_probability_table(masks)
    pooled = stats.dataset_bound_distribution(masks)
    report = {
        "masks": len(masks),
        "highest_floor_histogram": {
            str(k): v for k, v in sorted(stats.highest_floor_histogram(masks).items())
        },
        "pixels_per_order": {
            str(k): v for k, v in sorted(stats.pixels_per_order(masks).items())
        },
        "vertical_bound_distribution": {
            str(order): list(ratios) for order, ratios in sorted(pooled.ratios.items())
        },
        "entropy_table": {
            "rows": [
                {
                    "given": row.given,
                    "probabilities": list(row.probabilities),
                    "entropy": row.entropy,
                }
                for row in table.rows
            ],
            "avg_bound_entropy": table.avg_bound_entropy,
        },
    }
    if args.annotations:
        hist = stats.orientation_histogram(read_annotations(args.annotations))
        report["orientation_histogram"] = {k: hist[k] for k in sorted(hist)}
    _write_json(report, args.out)
    print(f"wrote stats report for {len(masks)} mask(s) to {args.out}")
    return 0


# -- postprocess ------------------------------------------------------------------


def cmd_postprocess(args) -> int:
    facade_mask = read_label_mask(args.facade_mask)
    floor_mask = read_label_mask(args.floor_mask)
    config = RunConfig(
        seed=args.seed,
        min_area=args.min_area,
        parallel_slope_eps=args.parallel_eps,
        convergence_tol=args.tol,
        max_iters=args.max_iters,
    )
    result = run_pipeline(facade_mask, floor_mask, config.pipeline())
    for out in result.facades:
        for message in out.errors:
            print(f"warning: facade {out.facade.id}: {message}", file=sys.stderr)
    doc = ImageLines(
        image=_mask_stem(Path(args.facade_mask)),
        facades=tuple(
            FacadeLines(out.facade.id, out.facade.orientation, out.vp, out.lines)
            for out in result.facades
        ),
    )
    write_lines(doc, args.out)
    if args.svg:
        Path(args.svg).write_text(
            render_overlay(doc, facade_mask.width, facade_mask.height), encoding="utf-8"
        )
    n_lines = sum(len(f.lines) for f in doc.facades)
    print(f"recognized {n_lines} line(s) across {len(doc.facades)} facade(s)")
    return 0


# -- evaluate ---------------------------------------------------------------------


def _load_eval_pair(stem: str, pred_dir: Path, gt_dir: Path) -> metrics.EvalPair:
    def flat(doc):
        return tuple((fac.facade_id, ln) for fac in doc.facades for ln in fac.lines)

    return metrics.EvalPair(
        pred_mask=read_label_mask(pred_dir / f"{stem}.floor.pgm"),
        pred_lines=flat(read_lines(pred_dir / f"{stem}.lines.json")),
        gt_mask=read_label_mask(gt_dir / f"{stem}.floor.pgm"),
        gt_lines=flat(read_lines(gt_dir / f"{stem}.lines.json")),
    )


def cmd_evaluate(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    stems = sorted(
        _mask_stem(p) for p in gt_dir.glob("*.floor.pgm")
        if (gt_dir / (_mask_stem(p) + ".lines.json")).exists()
    )
    if not stems:
        print(f"error: no <stem>.floor.pgm + <stem>.lines.json pairs in {gt_dir}", file=sys.stderr)
        return 1
    missing = [
        s for s in stems
        if not (pred_dir / f"{s}.floor.pgm").exists()
        or not (pred_dir / f"{s}.lines.json").exists()
    ]
    if missing:
        print(f"error: predictions missing for {missing} in {pred_dir}", file=sys.stderr)
        return 1

    pairs = [_load_eval_pair(s, pred_dir, gt_dir) for s in stems]
    workers = _max_workers()
    pixel_totals = {name: metrics.ConfusionCounts(0, 0, 0) for name in metrics.SPLITS}
    line_totals = {name: metrics.ConfusionCounts(0, 0, 0) for name in metrics.SPLITS}
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_image = list(pool.map(metrics.evaluate_pair_counts, pairs))
    else:
        per_image = [metrics.evaluate_pair_counts(p) for p in pairs]
    for counts in per_image:
        for name, (px, ln) in counts.items():
            pixel_totals[name] = pixel_totals[name] + px
            line_totals[name] = line_totals[name] + ln

    report = {
        "images": len(pairs),
        "pixel_f1": {name: pixel_totals[name].f1 for name in metrics.SPLITS},
        "line_f1": {name: line_totals[name].f1 for name in metrics.SPLITS},
        "pixel_counts": {
            name: {"tp": c.tp, "fp": c.fp, "fn": c.fn} for name, c in pixel_totals.items()
        },
        "line_counts": {
            name: {"tp": c.tp, "fp": c.fp, "fn": c.fn} for name, c in line_totals.items()
        },
    }
    _write_json(report, args.out)
    overall = report["line_f1"]["overall"]
    print(f"evaluated {len(pairs)} image(s); overall line F1 = {overall:.4f}")
    return 0


# -- attn-check ---------------------------------------------------------------------


def cmd_attn_check(args) -> int:
    results = gradcheck.run_suite(args.seed, instances=args.instances)
    worst = max(r.max_error for r in results)
    print(f"checked {len(results)} instances (base seed {args.seed})")
    print(f"max relative gradient error: {worst:.3e}")
    if worst < gradcheck.DEFAULT_TOL:
        return 0
    print(f"error: gradient error exceeds {gradcheck.DEFAULT_TOL:g}", file=sys.stderr)
    return 1


# -- overlay ------------------------------------------------------------------------


def cmd_overlay(args) -> int:
    doc = read_lines(args.lines)
    Path(args.out).write_text(render_overlay(doc, args.width, args.height), encoding="utf-8")
    print(f"wrote overlay for {doc.image!r} to {args.out}")
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig()
    parser = _Parser(
        prog="floorline",
        description="Floor-level line tooling: augmentation, statistics, "
        "geometry post-processing, evaluation, and gradient checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("augment", help="warp rectified facade masks onto annotated quads")
    p.add_argument("--facades", required=True, help="directory of <stem>.semantic.pgm + <stem>.floor.pgm pairs")
    p.add_argument("--annotations", required=True, help="annotations JSON (array of image records)")
    p.add_argument("--out", required=True, help="output directory for PGM pairs and manifest.json")
    p.add_argument("--seed", type=int, default=defaults.seed, help="RNG seed for facade/quad pairing")
    p.add_argument("--mapping", default=None, help="optional JSON label mapping applied to semantic masks")
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("stats", help="dataset characterization report")
    p.add_argument("--masks", required=True, help="directory of floor-mask PGMs")
    p.add_argument("--annotations", default=None, help="optional annotations JSON for the orientation histogram")
    p.add_argument("--out", required=True, help="output report JSON")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("postprocess", help="masks -> vanishing-point-consistent line 5-tuples")
    p.add_argument("--facade-mask", required=True, help="facade-palette PGM")
    p.add_argument("--floor-mask", required=True, help="floor-palette PGM")
    p.add_argument("--out", required=True, help="output lines JSON")
    p.add_argument("--svg", default=None, help="optional SVG overlay path")
    p.add_argument("--min-area", type=int, default=defaults.min_area, help="minimum facade component area in px")
    p.add_argument("--parallel-eps", type=float, default=defaults.parallel_slope_eps,
                   help="slope gap below which lines count as parallel")
    p.add_argument("--tol", type=float, default=defaults.convergence_tol,
                   help="relative loss-change convergence threshold")
    p.add_argument("--max-iters", type=int, default=defaults.max_iters, help="iteration cap for VP refinement")
    p.add_argument("--seed", type=int, default=defaults.seed, help="reserved; pipeline is deterministic")
    p.set_defaults(handler=cmd_postprocess)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted <stem>.floor.pgm + <stem>.lines.json")
    p.add_argument("--gt", required=True, help="directory of ground-truth <stem>.floor.pgm + <stem>.lines.json")
    p.add_argument("--out", required=True, help="output metrics JSON")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("attn-check", help="finite-difference gradient verification")
    p.add_argument("--seed", type=int, default=defaults.seed, help="base seed for the randomized instances")
    p.add_argument("--instances", type=int, default=20, help="number of instances per check")
    p.set_defaults(handler=cmd_attn_check)

    p = sub.add_parser("overlay", help="render a lines JSON as a static SVG overlay")
    p.add_argument("--lines", required=True, help="lines JSON produced by postprocess")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--width", type=int, default=480, help="canvas width in px")
    p.add_argument("--height", type=int, default=360, help="canvas height in px")
    p.set_defaults(handler=cmd_overlay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.handler(args)
    except (FloorLineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # pragma: no cover - internal error path
        traceback.print_exc()
        return 2


def entrypoint() -> None:  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
