"""Drive the whole CLI pipeline on a synthetic corpus in a temp directory:

    synth -> score -> fit -> evaluate -> correlate -> naturalness (mock)

Run: python demos/05_full_pipeline.py
"""

import json
import tempfile
from pathlib import Path

from devil.cli import main

with tempfile.TemporaryDirectory(prefix="devil-demo-") as tmp:
    base = Path(tmp)
    corpus = base / "corpus"

    assert main(["synth", "--out", str(corpus), "--count", "15", "--seed", "7"]) == 0

    config = {
        "frames_dir": str(corpus / "frames"),
        "embeddings_dir": str(corpus / "embeddings"),
        "benchmark": str(corpus / "benchmark.jsonl"),
        "ratings": str(corpus / "ratings.csv"),
        "quality": str(corpus / "quality.csv"),
        "scores_dir": str(base / "scores"),
        "model": str(base / "model.json"),
        "report": str(base / "report.json"),
        "correlate_out": str(base / "correlations.json"),
        "naturalness_out": str(base / "naturalness.json"),
        "seed": 7,
        "workers": 2,
    }
    config_path = base / "config.json"
    config_path.write_text(json.dumps(config, indent=2))

    for verb in ("score", "fit", "evaluate", "correlate"):
        print(f"--- devil {verb} ---")
        assert main([verb, "--config", str(config_path)]) == 0

    print("--- devil naturalness --mock ---")
    assert main(["naturalness", "--config", str(config_path), "--mock"]) == 0

    report = json.loads((base / "report.json").read_text())
    print()
    print("report sections:", sorted(report))
    print("model metrics:", json.dumps(report["model_metrics"], indent=2, sort_keys=True))
