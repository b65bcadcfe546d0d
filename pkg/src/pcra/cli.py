"""``pcra`` command line: file-based stages from trajectories to risk tables.

Stages and the artifacts they write under ``--out``::

    ingest       scenes.csv, ingest.json, split.json, config.json
    simulate     raw_scenes.csv, labels.json, then as ingest
    train        models/<class>_<feature>.json, loss_curves.csv
    eval         mse.json, table3.txt
    build-dists  dists.json
    assess       assessments.jsonl
    report       report.json, table4.txt
    render       render/<scene_id>.svg

Every JSON artifact carries a ``version`` field. Later stages read the
effective site config from ``config.json`` unless ``--config`` is given;
flags override both.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from pcra.dataset import SplitSpec, split_scenes
from pcra.exceptions import IngestError, PcraError
from pcra.io import (
    IngestReport,
    dump_json,
    dump_jsonl,
    load_json,
    load_jsonl,
    prepare_scenes,
    read_trajectory_csv,
    write_trajectory_csv,
)
from pcra.lstm import evaluate_trajectory_mse, model_from_dict, model_to_dict
from pcra.pipeline import SiteConfig, assess_scenes, train_models
from pcra.render import render_scene
from pcra.risk import DISTS_VERSION, DistributionStore, build_distributions
from pcra.severity import (
    ASSESSMENT_VERSION,
    REPORT_VERSION,
    SceneAssessment,
    aggregate_corpus,
    format_mse_table,
    format_risk_table,
)
from pcra.simulate import SimSpec, simulate
from pcra.trajectory import Feature, ObjectClass

_LOG = logging.getLogger("pcra")

CONFIG_VERSION = "pcra-config-v1"
INGEST_VERSION = "pcra-ingest-v1"
SPLIT_VERSION = "pcra-split-v1"
LABELS_VERSION = "pcra-labels-v1"
MSE_VERSION = "pcra-mse-v1"


class StageError(PcraError):
    def __init__(self, message: str, path: str | Path | None = None):
        super().__init__(message)
        self.path = None if path is None else str(path)


# -- shared plumbing ---------------------------------------------------------

def _resolve_config(args) -> SiteConfig:
    out = Path(args.out)
    if args.config:
        cfg = SiteConfig.load(args.config)
    elif (out / "config.json").exists():
        data = load_json(out / "config.json", CONFIG_VERSION)
        data.pop("version")
        cfg = SiteConfig.from_dict(data)
    else:
        cfg = SiteConfig()
    return cfg.override(
        seed=args.seed,
        alpha=args.alpha,
        n_zones=args.zones,
        horizons_s=tuple(args.horizons) if args.horizons else None,
    )


def _save_config(cfg: SiteConfig, out: Path) -> None:
    dump_json({"version": CONFIG_VERSION, **cfg.to_dict()}, out / "config.json")


def _require(path: Path) -> Path:
    if not path.exists():
        raise StageError(f"missing input file {path}; run the earlier stage first", path)
    return path


def _load_scenes(path: Path):
    scenes, _ = read_trajectory_csv(_require(path))
    return scenes


def _split_ids(out: Path) -> tuple[set[str], set[str]]:
    data = load_json(_require(out / "split.json"), SPLIT_VERSION)
    return set(data["train"]), set(data["test"])


def _subset(out: Path, which: str):
    train, test = _split_ids(out)
    keep = train if which == "train" else test
    scenes = [s for s in _load_scenes(out / "scenes.csv") if s.scene_id in keep]
    if not scenes:
        raise StageError(f"no {which} scenes in {out / 'scenes.csv'}", out / "scenes.csv")
    return scenes


def _model_path(out: Path, cls: ObjectClass, feat: Feature) -> Path:
    return out / "models" / f"{cls.value}_{feat.value}.json"


def _load_models(out: Path):
    return {
        (c, f): model_from_dict(load_json(_require(_model_path(out, c, f))))
        for c in ObjectClass
        for f in Feature
    }


def _finite_or_none(v: float):
    return None if v is None or not math.isfinite(v) else v


def _finish_prepared(raw, cfg: SiteConfig, out: Path, report: IngestReport) -> dict:
    scenes = prepare_scenes(raw, cfg.sample_rate_hz, cfg.smoothing_window, report)
    if not scenes:
        raise IngestError("no interactive scenes left after filtering")
    write_trajectory_csv(scenes, out / "scenes.csv", cfg.sample_rate_hz)
    train, test = split_scenes(scenes, SplitSpec(cfg.train_fraction, cfg.seed))
    dump_json(
        {
            "version": SPLIT_VERSION,
            "train_fraction": cfg.train_fraction,
            "seed": cfg.seed,
            "train": [s.scene_id for s in train],
            "test": [s.scene_id for s in test],
        },
        out / "split.json",
    )
    dump_json({"version": INGEST_VERSION, **report.to_dict()}, out / "ingest.json")
    _save_config(cfg, out)
    return {"scenes": len(scenes), "train": len(train), "test": len(test), "dropped": len(report.dropped)}


# -- stages ------------------------------------------------------------------

def cmd_ingest(args, cfg: SiteConfig, out: Path) -> dict:
    raw, rows = read_trajectory_csv(_require(Path(args.input)))
    return _finish_prepared(raw, cfg, out, IngestReport(rows=rows))


def cmd_simulate(args, cfg: SiteConfig, out: Path) -> dict:
    spec = SimSpec(
        n_scenes=args.n_scenes,
        yield_probability=args.yield_probability,
        noise=args.noise,
        crossing_offset=tuple(args.offset_range),
        parallel_paths=args.parallel_paths,
        seed=cfg.seed if args.sim_seed is None else args.sim_seed,
    )
    raw, labels = simulate(spec, cfg.roi)
    write_trajectory_csv(raw, out / "raw_scenes.csv", spec.frame_rate_hz)
    dump_json(
        {"version": LABELS_VERSION, "spec": spec.to_dict(), "labels": [l.to_dict() for l in labels]},
        out / "labels.json",
    )
    rows = sum(len(s.vehicle.times) + len(s.pedestrian.times) for s in raw)
    return _finish_prepared(raw, cfg, out, IngestReport(rows=rows))


def cmd_train(args, cfg: SiteConfig, out: Path) -> dict:
    scenes = _subset(out, "train")
    models = train_models(scenes, cfg)
    rows = []
    for (cls, feat), m in models.items():
        dump_json(model_to_dict(m), _model_path(out, cls, feat))
        rows.extend((cls.value, feat.value, m.config.name, k + 1, repr(float(v))) for k, v in enumerate(m.loss_curve))
    with (out / "loss_curves.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "feature", "model", "epoch", "loss"])
        w.writerows(rows)
    return {
        "train_scenes": len(scenes),
        "final_loss": {f"{c.value}_{f.value}": m.loss_curve[-1] for (c, f), m in models.items()},
    }


def cmd_eval(args, cfg: SiteConfig, out: Path) -> dict:
    models = _load_models(out)
    scenes = _subset(out, "test")
    rows = []
    for cls in ObjectClass:
        rep = evaluate_trajectory_mse(models[(cls, Feature.SPEED)], models[(cls, Feature.DEGREE)], scenes, cls)
        for dataset, model, mse in rep.rows():
            rows.append({"site": cfg.site_id, "dataset": dataset, "model": model, "mse": _finite_or_none(mse), "n_trajectories": rep.n_trajectories})
    dump_json({"version": MSE_VERSION, "rows": rows}, out / "mse.json")
    table = format_mse_table([(r["site"], r["dataset"], r["model"], float("nan") if r["mse"] is None else r["mse"]) for r in rows])
    (out / "table3.txt").write_text(table)
    return {"test_scenes": len(scenes), "mse": {r["dataset"]: r["mse"] for r in rows}}


def cmd_build_dists(args, cfg: SiteConfig, out: Path) -> dict:
    scenes = _subset(out, "train")
    store = build_distributions(scenes, cfg.grid, cfg.horizons_s, cfg.n_min, cfg.alpha)
    dump_json(store.to_dict(), out / "dists.json")
    gaps = store.coverage_gaps()
    return {"cells": len(store.dists), "cells_below_n_min": len(gaps)}


def cmd_assess(args, cfg: SiteConfig, out: Path) -> dict:
    models = _load_models(out)
    store = DistributionStore.from_dict(load_json(_require(out / "dists.json"), DISTS_VERSION))
    scenes = _load_scenes(Path(args.scenes)) if args.scenes else _subset(out, "test")
    results = assess_scenes(scenes, models, store, cfg, args.jobs)
    dump_jsonl((a.to_dict() for a in results), out / "assessments.jsonl")
    counts = aggregate_corpus(results, cfg.site_id)
    return counts.to_dict()


def _label_check(out: Path, verdicts: dict[str, str | None]) -> dict | None:
    path = out / "labels.json"
    if not path.exists():
        return None
    labels = load_json(path, LABELS_VERSION)["labels"]
    bins = {"gap_lt_1s": [], "gap_1_to_5s": [], "gap_gt_5s": [], "no_conflict": []}
    for l in labels:
        if l["scene_id"] not in verdicts:
            continue
        g = l["min_gap_s"]
        key = "no_conflict" if g is None else "gap_lt_1s" if g < 1.0 else "gap_gt_5s" if g > 5.0 else "gap_1_to_5s"
        bins[key].append(verdicts[l["scene_id"]] or "skipped")
    return {k: {"scenes": len(v), **{lab: v.count(lab) for lab in sorted(set(v))}} for k, v in bins.items()}


def cmd_report(args, cfg: SiteConfig, out: Path) -> dict:
    records = load_jsonl(_require(out / "assessments.jsonl"), ASSESSMENT_VERSION)
    assessments = [SceneAssessment.from_dict(r) for r in records]
    counts = aggregate_corpus(assessments, cfg.site_id)
    (out / "table4.txt").write_text(format_risk_table([counts]))
    verdicts = {a.scene_id: (a.verdict.label if a.verdict is not None else None) for a in assessments}
    report = {"version": REPORT_VERSION, "counts": counts.to_dict(), "verdicts": verdicts}
    check = _label_check(out, verdicts)
    if check is not None:
        report["ground_truth"] = check
    mse_path = out / "mse.json"
    if mse_path.exists():
        report["mse"] = load_json(mse_path, MSE_VERSION)["rows"]
    dump_json(report, out / "report.json")
    return counts.to_dict()


def cmd_render(args, cfg: SiteConfig, out: Path) -> dict:
    records = {r["scene_id"]: r for r in load_jsonl(_require(out / "assessments.jsonl"), ASSESSMENT_VERSION)}
    if args.scene_id not in records:
        raise StageError(f"scene {args.scene_id!r} not in {out / 'assessments.jsonl'}")
    source = Path(args.scenes) if args.scenes else out / "scenes.csv"
    scenes = {s.scene_id: s for s in _load_scenes(source)}
    if args.scene_id not in scenes:
        raise StageError(f"scene {args.scene_id!r} not in {source}", source)
    assessment = SceneAssessment.from_dict(records[args.scene_id])
    path = out / "render" / f"{args.scene_id}.svg"
    render_scene(assessment, scenes[args.scene_id], cfg.grid, path, args.time)
    return {"svg": str(path)}


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="site config JSON")
    common.add_argument("--seed", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--zones", type=int, help="zones per axis")
    common.add_argument("--horizons", type=float, nargs="+", help="horizons in seconds")
    common.add_argument("--out", default="pcra_out", help="artifact directory (default: pcra_out)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pcra", description="Predictive collision risk areas from trajectories.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="read a trajectory CSV")
    s.add_argument("input", help="CSV with columns scene_id,object_id,class,frame,time_s,x,y")

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic crosswalk corpus")
    s.add_argument("--n-scenes", type=int, default=200)
    s.add_argument("--yield-probability", type=float, default=0.0)
    s.add_argument("--noise", type=float, default=0.05)
    s.add_argument("--offset-range", type=float, nargs=2, default=(-8.0, 8.0), metavar=("LO", "HI"))
    s.add_argument("--parallel-paths", action="store_true")
    s.add_argument("--sim-seed", type=int, help="generator seed (default: --seed)")

    sub.add_parser("train", parents=[common], help="fit the speed/degree networks")
    sub.add_parser("eval", parents=[common], help="trajectory-level test MSE")
    sub.add_parser("build-dists", parents=[common], help="zone/horizon displacement distributions")

    s = sub.add_parser("assess", parents=[common], help="grade test scenes")
    s.add_argument("--scenes", help="prepared scenes CSV to assess instead of the test split")
    s.add_argument("--jobs", type=int, default=1)

    sub.add_parser("report", parents=[common], help="scene-count table and report.json")

    s = sub.add_parser("render", parents=[common], help="SVG snapshot of one scene")
    s.add_argument("scene_id")
    s.add_argument("--time", type=float, help="timestep to draw (default: worst)")
    s.add_argument("--scenes", help="prepared scenes CSV holding the scene")
    return p


COMMANDS = {
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "eval": cmd_eval,
    "build-dists": cmd_build_dists,
    "assess": cmd_assess,
    "report": cmd_report,
    "render": cmd_render,
}


def _error_record(stage: str, exc: BaseException) -> dict:
    rec = {"status": "error", "stage": stage, "error": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "scene_id", "path", "epoch"):
        v = getattr(exc, attr, None)
        if v is not None:
            rec[attr] = v
    return rec


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg = _resolve_config(args)
        summary = COMMANDS[args.command](args, cfg, out)
    except (PcraError, OSError, ValueError, KeyError) as exc:
        print(json.dumps(_error_record(args.command, exc), sort_keys=True), file=sys.stderr)
        return 2
    print(json.dumps({"status": "ok", "stage": args.command, **summary}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
