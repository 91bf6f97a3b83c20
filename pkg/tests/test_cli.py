import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from devil.cli import main
from devil.io import read_report
from devil.synth import SynthSpec, build_corpus, generate
from devil.io import save_frames

from oracles import pearson_reference


def write_config(path: Path, **kwargs) -> str:
    path.write_text(json.dumps(kwargs))
    return str(path)


def identity_model_payload(seed=0):
    """Alignment model that passes the first raw feature of each granularity
    straight through (bounds [0,1], unit weight)."""

    def linear(granularity, n_features):
        return {
            "granularity": granularity,
            "weights": [1.0] + [0.0] * (n_features - 1),
            "intercept": 0.0,
            "input_min": [0.0] * n_features,
            "input_max": [1.0] * n_features,
        }

    return {
        "version": 1,
        "seed": seed,
        "train_rows": 0,
        "models": {
            "frame": linear("frame", 3),
            "segment": linear("segment", 2),
            "video": linear("video", 2),
        },
    }


def write_scores_summary(scores_dir: Path, rows: dict):
    scores_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "videos": {
            video_id: {"scores": scores, "sources": {"flow_source": "builtin"}}
            for video_id, scores in rows.items()
        },
        "failures": {},
        "config": {"seed": 0, "entropy_mode": "builtin", "encoder_command": None},
    }
    (scores_dir / "scores.json").write_text(json.dumps(summary, sort_keys=True, indent=2))


def raw_scores(value, **overrides):
    base = {name: value for name in ("s_ofs", "s_sd", "s_pd", "s_pa", "s_ga", "s_te", "s_tsd")}
    base.update(overrides)
    return base


class TestScore:
    def test_static_corpus_zeros(self, tmp_path):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        for i in range(4):
            save_frames(
                generate(SynthSpec(kind="static", n=16, pattern="gradient")),
                frames_dir / f"v{i}.devf",
            )
        config = write_config(
            tmp_path / "cfg.json",
            frames_dir=str(frames_dir),
            scores_dir=str(tmp_path / "scores"),
        )
        assert main(["score", "--config", config]) == 0
        summary = json.loads((tmp_path / "scores" / "scores.json").read_text())
        assert len(summary["videos"]) == 4
        for payload in summary["videos"].values():
            assert payload["scores"]["s_ofs"] == 0.0
            assert payload["scores"]["s_sd"] == 0.0
            assert payload["scores"]["s_pd"] == 0.0

    def test_worker_counts_byte_identical(self, tmp_path):
        corpus = build_corpus(tmp_path / "corpus", count=6, seed=1)
        outputs = {}
        for workers in (1, 3):
            scores_dir = tmp_path / f"scores_w{workers}"
            config = write_config(
                tmp_path / f"cfg{workers}.json",
                frames_dir=corpus["frames_dir"],
                embeddings_dir=corpus["embeddings_dir"],
                scores_dir=str(scores_dir),
            )
            assert main(["score", "--config", config, "--workers", str(workers)]) == 0
            outputs[workers] = (scores_dir / "scores.json").read_bytes()
        assert outputs[1] == outputs[3]

    def test_fallback_flags_recorded(self, tmp_path):
        corpus = build_corpus(tmp_path / "corpus", count=3, seed=2)  # vid_002 has no devb
        config = write_config(
            tmp_path / "cfg.json",
            frames_dir=corpus["frames_dir"],
            embeddings_dir=corpus["embeddings_dir"],
            scores_dir=str(tmp_path / "scores"),
        )
        assert main(["score", "--config", config]) == 0
        summary = json.loads((tmp_path / "scores" / "scores.json").read_text())
        with_devb = summary["videos"]["vid_000"]["sources"]
        without_devb = summary["videos"]["vid_002"]["sources"]
        assert with_devb["patch_source"] == "devb"
        assert without_devb["patch_source"] == "luma_fallback"
        assert without_devb["flow_source"] == "builtin"

    def test_failed_video_recorded_not_fatal(self, tmp_path):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        save_frames(generate(SynthSpec(kind="static", n=16)), frames_dir / "good.devf")
        (frames_dir / "bad.devf").write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNK")
        config = write_config(
            tmp_path / "cfg.json",
            frames_dir=str(frames_dir),
            scores_dir=str(tmp_path / "scores"),
        )
        assert main(["score", "--config", config]) == 0
        summary = json.loads((tmp_path / "scores" / "scores.json").read_text())
        assert "good" in summary["videos"]
        assert "bad" in summary["failures"]

    def test_all_failed_nonzero_exit(self, tmp_path):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        (frames_dir / "bad.devf").write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNK")
        config = write_config(
            tmp_path / "cfg.json",
            frames_dir=str(frames_dir),
            scores_dir=str(tmp_path / "scores"),
        )
        assert main(["score", "--config", config]) == 1


class TestFit:
    def _linear_fixture(self, tmp_path, n=16):
        """Scores whose first feature equals the grade target exactly."""
        grades = [i % 5 + 1 for i in range(n)]
        rows = {}
        ratings_lines = ["video_id,frame_grade,segment_grade,video_grade,naturalness_grade"]
        for i, grade in enumerate(grades):
            target = (grade - 1) / 4.0
            rows[f"v{i:02d}"] = raw_scores(0.0, s_ofs=target, s_pa=target, s_te=target)
            ratings_lines.append(f"v{i:02d},{grade},{grade},{grade},{grade}")
        write_scores_summary(tmp_path / "scores", rows)
        ratings_path = tmp_path / "ratings.csv"
        ratings_path.write_text("\n".join(ratings_lines) + "\n")
        return write_config(
            tmp_path / "cfg.json",
            scores_dir=str(tmp_path / "scores"),
            ratings=str(ratings_path),
            model=str(tmp_path / "model.json"),
        )

    def test_noiseless_holdout_perfect(self, tmp_path, capsys):
        config = self._linear_fixture(tmp_path)
        assert main(["fit", "--config", config, "--seed", "0"]) == 0
        payload = json.loads((tmp_path / "model.json").read_text())
        for granularity in ("frame", "segment", "video"):
            stats = payload["holdout"][granularity]
            assert stats["pearson"] == pytest.approx(1.0, abs=1e-9)

    def test_underdetermined_names_granularity(self, tmp_path, capsys):
        grades = [1, 2, 3]
        rows = {
            f"v{i}": raw_scores(0.1 * i) for i in range(3)
        }
        write_scores_summary(tmp_path / "scores", rows)
        ratings = tmp_path / "ratings.csv"
        ratings.write_text(
            "video_id,frame_grade,segment_grade,video_grade,naturalness_grade\n"
            + "\n".join(f"v{i},{g},{g},{g},{g}" for i, g in enumerate(grades))
            + "\n"
        )
        config = write_config(
            tmp_path / "cfg.json",
            scores_dir=str(tmp_path / "scores"),
            ratings=str(ratings),
            model=str(tmp_path / "model.json"),
        )
        assert main(["fit", "--config", config]) == 2
        assert "frame" in capsys.readouterr().err

    def test_same_seed_identical_model_bytes(self, tmp_path):
        config = self._linear_fixture(tmp_path)
        main(["fit", "--config", config, "--seed", "7"])
        first = (tmp_path / "model.json").read_bytes()
        main(["fit", "--config", config, "--seed", "7"])
        assert (tmp_path / "model.json").read_bytes() == first


class TestEvaluate:
    def _setup(self, tmp_path, scores_by_id, grades_by_id, quality_rows=None):
        write_scores_summary(tmp_path / "scores", scores_by_id)
        bench = tmp_path / "bench.jsonl"
        bench.write_text(
            "\n".join(
                json.dumps({"id": vid, "prompt": f"prompt {vid}", "grade": g})
                for vid, g in grades_by_id.items()
            )
            + "\n"
        )
        (tmp_path / "model.json").write_text(json.dumps(identity_model_payload()))
        kwargs = dict(
            scores_dir=str(tmp_path / "scores"),
            benchmark=str(bench),
            model=str(tmp_path / "model.json"),
            report=str(tmp_path / "report.json"),
        )
        if quality_rows is not None:
            quality = tmp_path / "quality.csv"
            header = "video_id,naturalness,motion_smoothness,subject_consistency,background_consistency"
            quality.write_text(
                header + "\n" + "\n".join(quality_rows) + "\n"
            )
            kwargs["quality"] = str(quality)
        return write_config(tmp_path / "cfg.json", **kwargs)

    def test_grade_sorted_scores_full_controllability(self, tmp_path):
        scores = {f"v{i}": raw_scores(0.1 * i + 0.05) for i in range(8)}
        grades = {f"v{i}": min(i // 2 + 1, 5) for i in range(8)}
        config = self._setup(tmp_path, scores, grades)
        assert main(["evaluate", "--config", config]) == 0
        report = read_report(tmp_path / "report.json")
        assert report.model_metrics["d_control"] == 1.0

    def test_quality_omitted_no_dquality(self, tmp_path):
        scores = {"a": raw_scores(0.2), "b": raw_scores(0.6)}
        config = self._setup(tmp_path, scores, {"a": 1, "b": 3})
        main(["evaluate", "--config", config])
        report = read_report(tmp_path / "report.json")
        assert "d_quality" not in report.model_metrics
        assert "d_range" in report.model_metrics

    def test_three_video_binning_fixture(self, tmp_path):
        scores = {
            "a": raw_scores(0.05),
            "b": raw_scores(0.10),
            "c": raw_scores(0.50),
        }
        quality_rows = [
            "a,0.8,0.8,0.8,0.8",
            "b,0.6,0.6,0.6,0.6",
            "c,0.4,0.4,0.4,0.4",
        ]
        config = self._setup(tmp_path, scores, {"a": 1, "b": 1, "c": 2}, quality_rows)
        assert main(["evaluate", "--config", config]) == 0
        report = read_report(tmp_path / "report.json")
        assert report.model_metrics["d_quality"] == pytest.approx(0.15, abs=1e-12)
        assert report.per_video["a"]["overall"] == pytest.approx(0.05)

    def test_unmatched_ids_listed_and_excluded(self, tmp_path):
        scores = {"a": raw_scores(0.2), "b": raw_scores(0.4), "zz": raw_scores(0.9)}
        config = self._setup(tmp_path, scores, {"a": 1, "b": 2})
        main(["evaluate", "--config", config])
        report = read_report(tmp_path / "report.json")
        assert report.model_metrics["unmatched"] == ["zz"]
        assert "zz" not in report.per_video

    def test_report_schema_valid(self, tmp_path):
        import jsonschema

        from devil.io import REPORT_SCHEMA

        scores = {"a": raw_scores(0.2), "b": raw_scores(0.6)}
        quality_rows = ["a,0.9,0.9,0.9,0.9", "b,0.5,0.5,0.5,0.5"]
        config = self._setup(tmp_path, scores, {"a": 1, "b": 4}, quality_rows)
        main(["evaluate", "--config", config])
        data = json.loads((tmp_path / "report.json").read_text())
        jsonschema.validate(data, REPORT_SCHEMA)


class TestCorrelate:
    def _report_with_overall(self, tmp_path, overalls):
        report = {
            "per_video": {vid: {"overall": val} for vid, val in overalls.items()},
            "model_metrics": {},
            "correlations": {},
            "config": {},
        }
        path = tmp_path / "report.json"
        path.write_text(json.dumps(report, sort_keys=True))
        return path

    def _quality_csv(self, tmp_path, rows):
        path = tmp_path / "quality.csv"
        header = "video_id,naturalness,motion_smoothness,subject_consistency,background_consistency"
        path.write_text(header + "\n" + "\n".join(rows) + "\n")
        return path

    def test_quality_equals_one_minus_s(self, tmp_path):
        overalls = {f"v{i}": 0.1 * i for i in range(8)}
        report = self._report_with_overall(tmp_path, overalls)
        rows = [f"v{i},{1 - 0.1 * i},,," for i in range(8)]
        quality = self._quality_csv(tmp_path, rows)
        config = write_config(
            tmp_path / "cfg.json",
            report=str(report),
            quality=str(quality),
            correlate_out=str(tmp_path / "corr.json"),
        )
        assert main(["correlate", "--config", config]) == 0
        table = json.loads((tmp_path / "corr.json").read_text())
        cell = table["models"]["default"]["naturalness"]
        assert cell["pearson"] == pytest.approx(-1.0, abs=1e-12)
        assert cell["kendall"] == pytest.approx(-1.0, abs=1e-12)

    def test_constant_column_undefined(self, tmp_path):
        overalls = {f"v{i}": 0.1 * i for i in range(5)}
        report = self._report_with_overall(tmp_path, overalls)
        rows = [f"v{i},0.5,,," for i in range(5)]
        quality = self._quality_csv(tmp_path, rows)
        config = write_config(
            tmp_path / "cfg.json",
            report=str(report),
            quality=str(quality),
            correlate_out=str(tmp_path / "corr.json"),
        )
        main(["correlate", "--config", config])
        table = json.loads((tmp_path / "corr.json").read_text())
        assert table["models"]["default"]["naturalness"]["pearson"] is None

    def test_matches_bruteforce_oracle(self, tmp_path):
        rng = np.random.default_rng(13)
        overalls = {f"v{i}": float(rng.uniform()) for i in range(20)}
        quality_values = {f"v{i}": float(rng.uniform()) for i in range(20)}
        report = self._report_with_overall(tmp_path, overalls)
        rows = [f"v{i},{quality_values[f'v{i}']},,," for i in range(20)]
        quality = self._quality_csv(tmp_path, rows)
        config = write_config(
            tmp_path / "cfg.json",
            report=str(report),
            quality=str(quality),
            correlate_out=str(tmp_path / "corr.json"),
        )
        main(["correlate", "--config", config])
        table = json.loads((tmp_path / "corr.json").read_text())
        ids = sorted(overalls)
        expected = pearson_reference(
            [overalls[v] for v in ids], [quality_values[v] for v in ids]
        )
        assert table["models"]["default"]["naturalness"]["pearson"] == pytest.approx(
            expected, abs=1e-12
        )

    def test_multi_model_average(self, tmp_path):
        r1 = self._report_with_overall(tmp_path, {"a": 0.1, "b": 0.9})
        quality = self._quality_csv(tmp_path, ["a,0.9,,,", "b,0.1,,,"])
        config = write_config(
            tmp_path / "cfg.json",
            correlate_out=str(tmp_path / "corr.json"),
            correlate_inputs=[
                {"name": "m1", "report": str(r1), "quality": str(quality)},
                {"name": "m2", "report": str(r1), "quality": str(quality)},
            ],
        )
        main(["correlate", "--config", config])
        table = json.loads((tmp_path / "corr.json").read_text())
        assert set(table["models"]) == {"m1", "m2"}
        assert table["average"]["naturalness"]["pearson"] == pytest.approx(-1.0)


class TestNaturalnessCommand:
    def test_mock_determinism(self, tmp_path):
        corpus = build_corpus(tmp_path / "corpus", count=5, seed=4)
        outs = []
        for run in range(2):
            out = tmp_path / f"nat{run}.json"
            config = write_config(
                tmp_path / f"cfg{run}.json",
                frames_dir=corpus["frames_dir"],
                naturalness_out=str(out),
                mock=True,
            )
            assert main(["naturalness", "--config", config]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        payload = json.loads(outs[0])
        assert len(payload["levels"]) == 5
        assert payload["aggregate"] is not None

    def test_requires_endpoint_without_mock(self, tmp_path):
        corpus = build_corpus(tmp_path / "corpus", count=2, seed=5)
        config = write_config(
            tmp_path / "cfg.json",
            frames_dir=corpus["frames_dir"],
            naturalness_out=str(tmp_path / "nat.json"),
        )
        assert main(["naturalness", "--config", config]) == 2


class TestSynthCommand:
    def test_synth_writes_corpus(self, tmp_path):
        out = tmp_path / "corpus"
        assert main(["synth", "--out", str(out), "--count", "5", "--seed", "9"]) == 0
        assert (out / "corpus.json").exists()
        assert len(list((out / "frames").glob("*.devf"))) == 5

    def test_console_script(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "devil.cli", "synth", "--out", str(tmp_path / "c"), "--count", "2"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert (tmp_path / "c" / "corpus.json").exists()


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", bogus_key=1)
        assert main(["score", "--config", config]) == 2

    def test_external_mode_requires_command(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", entropy_mode="external")
        assert main(["score", "--config", config]) == 2
