"""Batch pipeline driver.

Verbs: ``score`` (per-video raw dynamics scores), ``fit`` (human-alignment
regression), ``evaluate`` (per-video overall scores + model metrics),
``correlate`` (score/quality correlation tables), ``synth`` (synthetic
corpus), ``naturalness`` (endpoint or mock grading).

Every verb is idempotent: identical inputs and seed produce byte-identical
outputs regardless of the worker count, so reports never embed wall-clock
values or worker counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import alignment, io, metrics, naturalness
from .errors import DevilError, UndefinedMetricError, ValidationError
from .model import EvaluationReport, QUALITY_METRICS, RAW_SCORE_NAMES
from .scoring import score_video
from .synth import build_corpus


@dataclass
class RunConfig:
    """Paths and knobs for a pipeline run, loaded from a JSON config file."""

    frames_dir: Optional[str] = None
    embeddings_dir: Optional[str] = None
    benchmark: Optional[str] = None
    quality: Optional[str] = None
    ratings: Optional[str] = None
    scores_dir: Optional[str] = None
    model: Optional[str] = None
    report: Optional[str] = None
    correlate_out: Optional[str] = None
    correlate_inputs: list = field(default_factory=list)
    naturalness_out: Optional[str] = None
    workers: int = 1
    seed: int = 0
    entropy_mode: str = "builtin"
    encoder_command: Optional[str] = None
    endpoint_url: Optional[str] = None
    credential_env: Optional[str] = None
    instruction: Optional[str] = None
    mock: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.entropy_mode not in ("builtin", "external"):
            raise ValidationError(f"unknown entropy mode {self.entropy_mode!r}")
        if self.entropy_mode == "external" and not self.encoder_command:
            raise ValidationError("external entropy mode requires encoder_command")

    @classmethod
    def load(cls, path: Optional[str], overrides: dict) -> "RunConfig":
        data = {}
        if path:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _json_dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def discover_videos(frames_dir: str) -> dict[str, Path]:
    """Map video id -> frames path (<id>.devf files or image directories)."""
    root = Path(frames_dir)
    if not root.is_dir():
        raise ValidationError(f"frames directory {root} does not exist")
    found: dict[str, Path] = {}
    for entry in sorted(root.iterdir()):
        if entry.is_file() and entry.suffix == ".devf":
            found[entry.stem] = entry
        elif entry.is_dir():
            found[entry.name] = entry
    return found


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

def _score_task(task: tuple) -> tuple[str, dict | None, str | None]:
    video_id, frames_path, devb_path, entropy_mode, encoder_command = task
    try:
        seq = io.load_frames(frames_path)
        bundle = io.load_embeddings(devb_path) if devb_path else None
        scores, sources = score_video(seq, bundle, entropy_mode, encoder_command)
        return video_id, {"scores": scores.raw(), "sources": sources}, None
    except DevilError as exc:
        return video_id, None, f"{type(exc).__name__}: {exc}"


def cmd_score(config: RunConfig) -> int:
    if not config.frames_dir or not config.scores_dir:
        raise ValidationError("score needs frames_dir and scores_dir")
    videos = discover_videos(config.frames_dir)
    if not videos:
        raise ValidationError(f"no videos found under {config.frames_dir}")
    devb_root = Path(config.embeddings_dir) if config.embeddings_dir else None

    tasks = []
    for video_id in sorted(videos):
        devb = devb_root / f"{video_id}.devb" if devb_root else None
        if devb is not None and not devb.exists():
            devb = None
        tasks.append(
            (
                video_id,
                str(videos[video_id]),
                str(devb) if devb else None,
                config.entropy_mode,
                config.encoder_command,
            )
        )

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_score_task, tasks))
    else:
        results = [_score_task(t) for t in tasks]

    scored: dict[str, dict] = {}
    failures: dict[str, str] = {}
    for video_id, payload, error in sorted(results, key=lambda r: r[0]):
        if payload is not None:
            scored[video_id] = payload
        else:
            failures[video_id] = error

    out_dir = Path(config.scores_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for video_id, payload in scored.items():
        _json_dump(payload, out_dir / f"{video_id}.json")
    summary = {
        "videos": scored,
        "failures": failures,
        "config": {
            "seed": config.seed,
            "entropy_mode": config.entropy_mode,
            "encoder_command": config.encoder_command,
        },
    }
    _json_dump(summary, out_dir / "scores.json")

    print(f"scored {len(scored)}/{len(tasks)} videos -> {out_dir / 'scores.json'}")
    for video_id, error in failures.items():
        print(f"  failed {video_id}: {error}", file=sys.stderr)
    return 1 if scored == {} else 0


def _load_scores_summary(config: RunConfig) -> dict:
    if not config.scores_dir:
        raise ValidationError("config needs scores_dir")
    path = Path(config.scores_dir) / "scores.json"
    return json.loads(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

_GRADE_COLUMNS = {"frame": "frame_grade", "segment": "segment_grade", "video": "video_grade"}


def cmd_fit(config: RunConfig) -> int:
    if not config.ratings or not config.model:
        raise ValidationError("fit needs ratings and model paths")
    summary = _load_scores_summary(config)
    ratings = io.load_ratings(config.ratings)
    ids = sorted(set(summary["videos"]) & set(ratings))
    if len(ids) < 2:
        raise ValidationError(f"only {len(ids)} videos join scores with ratings")
    train_ids, test_ids = alignment.split_train_test(ids, 0.75, config.seed)

    fitted = {}
    holdout: dict[str, dict] = {}
    for granularity, features in alignment.GRANULARITY_FEATURES.items():
        def rows(subset):
            x = [
                [summary["videos"][v]["scores"][f] for f in features] for v in subset
            ]
            y = [getattr(ratings[v], _GRADE_COLUMNS[granularity]) for v in subset]
            return x, y

        x_train, y_train = rows(train_ids)
        model = alignment.fit_granularity_model(x_train, y_train, granularity)
        fitted[granularity] = model

        if len(test_ids) >= 2:
            x_test, y_test = rows(test_ids)
            predictions = [alignment.apply_model(model, row) for row in x_test]
            holdout[granularity] = metrics.correlation_summary(predictions, y_test)
        else:
            holdout[granularity] = {"pearson": None, "kendall": None, "win_ratio": None}

    bundle = alignment.AlignmentModel(
        frame=fitted["frame"],
        segment=fitted["segment"],
        video=fitted["video"],
        seed=config.seed,
        train_rows=len(train_ids),
    )
    payload = bundle.to_dict()
    payload["holdout"] = holdout
    _json_dump(payload, Path(config.model))

    for granularity in alignment.GRANULARITY_FEATURES:
        stats = holdout[granularity]
        rendered = ", ".join(
            f"{k}={'n/a' if v is None else f'{v:.4f}'}" for k, v in stats.items()
        )
        print(f"fit {granularity}: train={len(train_ids)} test={len(test_ids)} {rendered}")
    print(f"model -> {config.model}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _complete_quality(record) -> bool:
    return all(getattr(record, name) is not None for name in QUALITY_METRICS)


def cmd_evaluate(config: RunConfig) -> int:
    if not config.benchmark or not config.model or not config.report:
        raise ValidationError("evaluate needs benchmark, model and report paths")
    summary = _load_scores_summary(config)
    model = alignment.load_alignment_model(config.model)
    benchmark = {entry.id: entry for entry in io.load_benchmark(config.benchmark)}
    quality = None
    if config.quality:
        quality = io.load_quality(config.quality)

    per_video: dict[str, dict] = {}
    unmatched = sorted(set(summary["videos"]) - set(benchmark))
    for video_id in sorted(set(summary["videos"]) & set(benchmark)):
        raw = summary["videos"][video_id]["scores"]
        aligned = alignment.score_video_set(model, raw)
        entry = dict(raw)
        entry.update(aligned)
        entry["grade"] = benchmark[video_id].grade
        entry["sources"] = summary["videos"][video_id]["sources"]
        per_video[video_id] = entry

    model_metrics: dict = {"unmatched": unmatched}
    ids = sorted(per_video)
    overall = [per_video[v]["overall"] for v in ids]
    grades = [per_video[v]["grade"] for v in ids]
    if len(ids) >= 2:
        model_metrics["d_range"] = metrics.dynamics_range(overall)
        try:
            model_metrics["d_control"] = metrics.dynamics_controllability(grades, overall)
        except UndefinedMetricError:
            model_metrics["d_control"] = None
    else:
        model_metrics["d_range"] = None
        model_metrics["d_control"] = None

    correlations: dict = {}
    if quality is not None:
        with_quality = [v for v in ids if v in quality and _complete_quality(quality[v])]
        scores_q = [per_video[v]["overall"] for v in with_quality]
        composites = [metrics.composite_quality(quality[v]) for v in with_quality]
        model_metrics["d_quality"] = metrics.dynamics_based_quality(scores_q, composites)
        low, mid, high = metrics.quality_at_levels(scores_q, composites)
        model_metrics["d_quality_low"] = low
        model_metrics["d_quality_mid"] = mid
        model_metrics["d_quality_high"] = high
        naturalness_values = [
            quality[v].naturalness
            for v in ids
            if v in quality and quality[v].naturalness is not None
        ]
        model_metrics["naturalness"] = (
            float(sum(naturalness_values) / len(naturalness_values))
            if naturalness_values
            else None
        )
        correlations = _quality_correlations(per_video, quality, ids)

    report = EvaluationReport(
        per_video=per_video,
        model_metrics=model_metrics,
        correlations=correlations,
        config={
            "seed": config.seed,
            "entropy_mode": summary["config"].get("entropy_mode"),
            "encoder_command": summary["config"].get("encoder_command"),
            "alignment_seed": model.seed,
            "alignment_train_rows": model.train_rows,
            "benchmark": Path(config.benchmark).name,
            "quality_table": Path(config.quality).name if config.quality else None,
        },
    )
    io.write_report(report, config.report)

    shown = {k: v for k, v in model_metrics.items() if k != "unmatched"}
    print(f"evaluated {len(per_video)} videos ({len(unmatched)} unmatched) -> {config.report}")
    for key in sorted(shown):
        value = shown[key]
        print(f"  {key}: " + ("n/a" if value is None else f"{100.0 * value:.1f}%"))
    return 0


def _quality_correlations(per_video: dict, quality: dict, ids: list[str]) -> dict:
    table: dict[str, dict] = {}
    for metric_name in QUALITY_METRICS:
        joined = [
            (per_video[v]["overall"], getattr(quality[v], metric_name))
            for v in ids
            if v in quality and getattr(quality[v], metric_name) is not None
        ]
        cell: dict[str, Optional[float]] = {"pearson": None, "kendall": None}
        if len(joined) >= 2:
            xs = [j[0] for j in joined]
            ys = [j[1] for j in joined]
            for stat, fn in (("pearson", metrics.pearson), ("kendall", metrics.kendall)):
                try:
                    cell[stat] = fn(xs, ys)
                except (UndefinedMetricError, ValidationError):
                    cell[stat] = None
        table[metric_name] = cell
    return table


# ---------------------------------------------------------------------------
# correlate
# ---------------------------------------------------------------------------

def cmd_correlate(config: RunConfig) -> int:
    inputs = config.correlate_inputs
    if not inputs:
        if not config.report or not config.quality:
            raise ValidationError("correlate needs report and quality paths (or correlate_inputs)")
        inputs = [{"name": "default", "report": config.report, "quality": config.quality}]
    if not config.correlate_out:
        raise ValidationError("correlate needs correlate_out")

    table: dict[str, dict] = {}
    for item in inputs:
        report = io.read_report(item["report"])
        quality = io.load_quality(item["quality"])
        ids = sorted(set(report.per_video) & set(quality))
        per_metric: dict[str, dict] = {}
        for metric_name in QUALITY_METRICS:
            joined = [
                (report.per_video[v]["overall"], getattr(quality[v], metric_name))
                for v in ids
                if getattr(quality[v], metric_name) is not None
            ]
            cell: dict[str, Optional[float]] = {"pearson": None, "kendall": None}
            if len(joined) >= 2:
                xs = [j[0] for j in joined]
                ys = [j[1] for j in joined]
                for stat, fn in (("pearson", metrics.pearson), ("kendall", metrics.kendall)):
                    try:
                        cell[stat] = fn(xs, ys)
                    except (UndefinedMetricError, ValidationError):
                        cell[stat] = None
            per_metric[metric_name] = cell
        table[item["name"]] = per_metric

    average: dict[str, dict] = {}
    for metric_name in QUALITY_METRICS:
        cell = {}
        for stat in ("pearson", "kendall"):
            values = [
                table[name][metric_name][stat]
                for name in table
                if table[name][metric_name][stat] is not None
            ]
            cell[stat] = float(sum(values) / len(values)) if values else None
        average[metric_name] = cell

    output = {"models": table, "average": average}
    _json_dump(output, Path(config.correlate_out))

    print(f"correlations for {len(table)} model(s) -> {config.correlate_out}")
    for name, per_metric in sorted(table.items()):
        for metric_name in QUALITY_METRICS:
            cell = per_metric[metric_name]
            rendered = ", ".join(
                f"{stat}={'undefined' if cell[stat] is None else f'{cell[stat]:.4f}'}"
                for stat in ("pearson", "kendall")
            )
            print(f"  {name}/{metric_name}: {rendered}")
    return 0


# ---------------------------------------------------------------------------
# synth / naturalness
# ---------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    manifest = build_corpus(
        args.out,
        count=args.count,
        seed=args.seed if args.seed is not None else 0,
        n_frames=args.frames,
        size=args.size,
    )
    print(f"wrote {manifest['count']} synthetic videos under {args.out}")
    return 0


def cmd_naturalness(config: RunConfig) -> int:
    if not config.frames_dir or not config.naturalness_out:
        raise ValidationError("naturalness needs frames_dir and naturalness_out")
    if not config.mock and not config.endpoint_url:
        raise ValidationError("naturalness needs an endpoint_url unless --mock is set")
    videos = discover_videos(config.frames_dir)

    endpoint = None
    if not config.mock:
        endpoint = naturalness.EndpointConfig(
            url=config.endpoint_url,
            credential_env=config.credential_env,
            instruction=config.instruction or naturalness.DEFAULT_INSTRUCTION,
        )

    levels: dict[str, str] = {}
    failures: dict[str, str] = {}
    for video_id in sorted(videos):
        seq = None if config.mock else io.load_frames(videos[video_id])
        result = naturalness.grade_video(video_id, seq, endpoint, config.mock)
        if "level" in result:
            levels[video_id] = result["level"]
        else:
            failures[video_id] = result["error"]

    scores = {v: metrics.naturalness_level_to_score(level) for v, level in levels.items()}
    aggregate = (
        float(sum(scores.values()) / len(scores)) if scores else None
    )
    output = {
        "levels": levels,
        "scores": scores,
        "failures": failures,
        "aggregate": aggregate,
        "config": {
            "mock": config.mock,
            "endpoint_url": config.endpoint_url,
            "instruction": (
                config.instruction or naturalness.DEFAULT_INSTRUCTION
            ),
        },
    }
    _json_dump(output, Path(config.naturalness_out))
    print(
        f"naturalness for {len(levels)}/{len(videos)} videos -> {config.naturalness_out}"
        + (f" (aggregate {aggregate:.4f})" if aggregate is not None else "")
    )
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="devil", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--mock", action="store_true", default=None)

    for name in ("score", "fit", "evaluate", "correlate", "naturalness"):
        common(sub.add_parser(name))

    synth = sub.add_parser("synth")
    synth.add_argument("--out", required=True)
    synth.add_argument("--count", type=int, default=24)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--frames", type=int, default=16)
    synth.add_argument("--size", type=int, default=64)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        config = RunConfig.load(
            args.config,
            {"seed": args.seed, "workers": args.workers, "mock": args.mock},
        )
        handler = {
            "score": cmd_score,
            "fit": cmd_fit,
            "evaluate": cmd_evaluate,
            "correlate": cmd_correlate,
            "naturalness": cmd_naturalness,
        }[args.command]
        return handler(config)
    except DevilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
