"""Command-line front end.

Subcommands: match, baseline, grid, sample, align, synth, anchors. Pipeline
settings come from built-in defaults, then an optional JSON ``--config``
file, then explicit flags, later sources winning.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .evaluation import (ReportRow, compute_metrics, grid_rows, run_alignment_experiment,
                         run_grid, run_sampling_experiment, write_heatmap, write_report_csv)
from .filtering import build_anchor, load_anchor, write_anchor
from .ingest import load_collection, load_face_records, load_ground_truth
from .matching import write_matches
from .names import DEFAULT_NAME_THRESHOLD, NameMatcher
from .pipeline import FaceProfileMatcher
from .synthgen import SynthConfig, SynthesisError, generate_dataset, write_dataset

logger = logging.getLogger("facelink")

SEED_ENV = "FACELINK_SEED"
GRID_DEFAULT_QUALITIES = "0,30,60,80,100,150"
GRID_DEFAULT_THRESHOLDS = "0.35,0.45,0.55,0.65,0.75"


@dataclass
class PipelineConfig:
    quality_q: int = 80
    cluster_threshold: float = 0.8
    k_clusters: int = 2
    min_cluster_size: int = 2
    threshold_distance: float = 0.65
    name_threshold: int = DEFAULT_NAME_THRESHOLD
    avatars_only: bool = False
    unique: bool = False
    anchors: List[str] = field(default_factory=list)
    seed: int = 0
    jobs: int = 1

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config key(s): {', '.join(unknown)}")
        return cls(**data)

    def to_matcher(self) -> FaceProfileMatcher:
        anchors = tuple(load_anchor(p) for p in self.anchors)
        return FaceProfileMatcher(
            quality=self.quality_q, anchors=anchors, cluster_threshold=self.cluster_threshold,
            k_clusters=self.k_clusters, min_cluster_size=self.min_cluster_size,
            avatars_only=self.avatars_only, threshold_distance=self.threshold_distance,
            unique=self.unique, n_jobs=self.jobs)


# flag dest -> PipelineConfig field
_FLAG_FIELDS = {
    "quality": "quality_q", "cluster_threshold": "cluster_threshold",
    "k_clusters": "k_clusters", "min_cluster_size": "min_cluster_size",
    "threshold_distance": "threshold_distance", "name_threshold": "name_threshold",
    "avatars_only": "avatars_only", "unique": "unique", "anchor": "anchors",
    "seed": "seed", "jobs": "jobs",
}


def resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else None
    from_file = cfg is not None
    cfg = cfg or PipelineConfig()
    overrides = {}
    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[name] = value
    if "seed" not in overrides and not (from_file and _file_sets_seed(args.config)):
        env = os.environ.get(SEED_ENV)
        if env is not None:
            overrides["seed"] = int(env)
    return replace(cfg, **overrides)


def _file_sets_seed(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        return "seed" in json.load(fh)


def parse_number_list(text: str, kind=float) -> List:
    """``"0.1,0.5,1"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError(f"range step must be positive: {text!r}")
        n = int(round((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 10) for i in range(n)]
    else:
        values = [float(x) for x in text.split(",") if x.strip()]
    if kind is int:
        if any(v != int(v) for v in values):
            raise ValueError(f"expected integers: {text!r}")
        return [int(v) for v in values]
    return values


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", help="JSON file of pipeline settings (flags override it)")
    g.add_argument("--quality", type=int, help="minimum face side length q; keeps >= q^2 pixels "
                                               "(default 80)")
    g.add_argument("--cluster-threshold", type=float, help="single-linkage cut (default 0.8)")
    g.add_argument("--k-clusters", type=int, help="largest clusters averaged (default 2)")
    g.add_argument("--min-cluster-size", type=int, help="smallest usable owner cluster (default 2)")
    g.add_argument("--threshold-distance", type=float,
                   help="largest accepted defining-vector distance (default 0.65)")
    g.add_argument("--avatars-only", action="store_const", const=True,
                   help="build defining vectors from avatar faces only")
    g.add_argument("--unique", action="store_const", const=True,
                   help="one-to-one greedy matching instead of per-source argmin")
    g.add_argument("--anchor", action="append", metavar="PATH",
                   help="anchor JSON file; may be repeated")
    g.add_argument("--seed", type=int, help=f"random seed (falls back to ${SEED_ENV})")
    g.add_argument("--jobs", type=int, help="worker threads (output is identical for any value)")
    g.add_argument("--dim", type=int, help="expected embedding dimension")


def _add_inputs(p: argparse.ArgumentParser, truth_required: bool) -> None:
    p.add_argument("--source", required=True, help="source network directory")
    p.add_argument("--target", required=True, help="target network directory")
    p.add_argument("--truth", required=truth_required, help="ground-truth pairs file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="facelink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="link profiles across two networks by face")
    _add_inputs(p, truth_required=False)
    _add_pipeline_flags(p)
    p.add_argument("--out", required=True, help="match output file (TSV)")
    p.add_argument("--metrics", help="metrics CSV (requires --truth)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("baseline", help="Levenshtein real-name baseline")
    _add_inputs(p, truth_required=False)
    _add_pipeline_flags(p)
    p.add_argument("--name-threshold", type=int, help="edit-distance cutoff (default 4)")
    p.add_argument("--name-thresholds", default="1:8:1",
                   help="thresholds swept into the metrics CSV (default 1:8:1)")
    p.add_argument("--translit-table", help="cyrillic<TAB>latin table replacing the default")
    p.add_argument("--strip-spaces", action="store_true", help="drop spaces from normalized names")
    p.add_argument("--out", required=True, help="match output file (TSV)")
    p.add_argument("--metrics", help="threshold-sweep metrics CSV (requires --truth)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("grid", help="quality x threshold-distance sweep")
    _add_inputs(p, truth_required=True)
    _add_pipeline_flags(p)
    p.add_argument("--qualities", default=GRID_DEFAULT_QUALITIES)
    p.add_argument("--thresholds", default=GRID_DEFAULT_THRESHOLDS)
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--heatmap", help="optional heat-map data CSV")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("sample", help="photo-sampling experiment")
    _add_inputs(p, truth_required=True)
    _add_pipeline_flags(p)
    p.add_argument("--fractions", default="0.1:1.0:0.1")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--out", required=True, help="report CSV")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("align", help="partial-alignment experiment")
    _add_inputs(p, truth_required=True)
    _add_pipeline_flags(p)
    p.add_argument("--rates", default="0.03,0.1,0.3,0.5,0.7,1.0")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--out", required=True, help="report CSV")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="JSON file of generator settings")
    p.add_argument("--seed", type=int, help=f"overrides the config seed (falls back to ${SEED_ENV})")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("anchors", help="build an anchor from a child-face file")
    p.add_argument("--children", required=True, help="face-record file of child faces")
    p.add_argument("--radius", type=float, default=0.8)
    p.add_argument("--label", default="children")
    p.add_argument("--dim", type=int)
    p.add_argument("--out", required=True, help="anchor JSON file")
    p.set_defaults(func=cmd_anchors)
    return parser


def _load_networks(args):
    source = load_collection(args.source, args.dim)
    target = load_collection(args.target, args.dim)
    if source.dimension != target.dimension and source.n_records and target.n_records:
        raise ValueError(f"source dimension {source.dimension} != "
                         f"target dimension {target.dimension}")
    truth = load_ground_truth(args.truth) if args.truth else None
    return source, target, truth


def _require_truth(args, flag):
    if getattr(args, flag) and not args.truth:
        raise ValueError(f"--{flag} requires --truth")


def cmd_match(args) -> int:
    _require_truth(args, "metrics")
    cfg = resolve_config(args)
    source, target, truth = _load_networks(args)
    matcher = cfg.to_matcher().fit(target)
    results = matcher.predict(source)
    write_matches(results, args.out)
    n_matched = sum(r.matched for r in results)
    logger.info("matched %d of %d source profiles", n_matched, len(results))
    if truth is not None:
        report = compute_metrics(results, truth)
        print(f"K={report.K} K_p={report.K_p} V={report.V} precision={report.precision:.4f} "
              f"recall={report.recall:.4f} f1={report.f1:.4f}")
        if args.metrics:
            write_report_csv([ReportRow("match", "-", 0, report)], args.metrics)
    return 0


def cmd_baseline(args) -> int:
    _require_truth(args, "metrics")
    cfg = resolve_config(args)
    source, target, truth = _load_networks(args)
    matcher = NameMatcher(threshold=cfg.name_threshold, keep_spaces=not args.strip_spaces,
                          translit_table=args.translit_table).fit(target.names)
    results = matcher.predict(source.names)
    write_matches(results, args.out)
    if truth is not None:
        rows = []
        for thr in parse_number_list(args.name_thresholds, int):
            rows.append(ReportRow("baseline", str(thr), 0,
                                  compute_metrics(matcher.predict(source.names, thr), truth)))
        report = compute_metrics(results, truth)
        print(f"threshold={cfg.name_threshold} precision={report.precision:.4f} "
              f"recall={report.recall:.4f} f1={report.f1:.4f}")
        if args.metrics:
            write_report_csv(rows, args.metrics)
    return 0


def cmd_grid(args) -> int:
    cfg = resolve_config(args)
    source, target, truth = _load_networks(args)
    cells = run_grid(source, target, truth, parse_number_list(args.qualities, int),
                     parse_number_list(args.thresholds), cfg.to_matcher())
    write_report_csv(grid_rows(cells), args.out)
    if args.heatmap:
        write_heatmap(cells, args.heatmap)
    best = max(cells, key=lambda c: (c.report.f1, -c.threshold_distance))
    print(f"best f1={best.report.f1:.4f} at quality={best.quality} "
          f"threshold={best.threshold_distance}")
    return 0


def cmd_sample(args) -> int:
    cfg = resolve_config(args)
    source, target, truth = _load_networks(args)
    rows = run_sampling_experiment(source, target, truth, parse_number_list(args.fractions),
                                   args.repetitions, cfg.seed, cfg.to_matcher(), n_jobs=cfg.jobs)
    write_report_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_align(args) -> int:
    cfg = resolve_config(args)
    source, target, truth = _load_networks(args)
    rows = run_alignment_experiment(source, target, truth, parse_number_list(args.rates),
                                    cfg.seed, cfg.to_matcher(), repetitions=args.repetitions)
    write_report_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_synth(args) -> int:
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    elif "seed" not in data and os.environ.get(SEED_ENV) is not None:
        data["seed"] = int(os.environ[SEED_ENV])
    cfg = SynthConfig.from_dict(data)
    ds = generate_dataset(cfg)
    write_dataset(ds, args.out, cfg)
    print(f"wrote {len(ds.source)} source / {len(ds.target)} target profiles, "
          f"{ds.truth.V} true pairs to {args.out}")
    return 0


def cmd_anchors(args) -> int:
    faces = load_face_records(args.children, args.dim)
    anchor = build_anchor(list(faces.iter_records()), args.radius, args.label)
    write_anchor(anchor, args.out)
    print(f"anchor {anchor.label!r} from {faces.n_records} faces, radius {anchor.radius}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, TypeError, SynthesisError) as exc:
        print(f"facelink {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
