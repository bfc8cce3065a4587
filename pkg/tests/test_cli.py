import json
from pathlib import Path

import numpy as np
import pytest

from spectrum_forge import corpus
from spectrum_forge.cli import main
from spectrum_forge.evalmetrics import EmbeddingMatrix, save_embeddings

from test_probes import program_with


@pytest.fixture
def small_corpus(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    for i in range(4):
        (d / f"add{i}.ll").write_text(program_with(2 + i, 0, f"add{i}"),
                                      encoding="utf-8")
    for i in range(4):
        (d / f"mul{i}.ll").write_text(program_with(0, 2 + i, f"mul{i}"),
                                      encoding="utf-8")
    return d


@pytest.fixture
def config_path(tmp_path):
    cfg = {
        "seed": 9,
        "P": 2,
        "L": 2,
        "M": 8,
        "k_star": 4,
        "method": "greedy",
        "use_mock_optimizer": True,
        "pass_pool": ["nop", "del-add", "del-mul"],
        "pass_list": ["nop", "del-add", "del-mul"],
        "oz_passes": ["oz"],
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def test_features_subcommand(tmp_path, fixtures_dir):
    out = tmp_path / "features.jsonl"
    rc = main(["features", "--corpus", str(fixtures_dir), "--out", str(out)])
    assert rc == 0
    records = corpus.read_jsonl(out)
    assert len(records) == len(list(Path(fixtures_dir).glob("*.ll")))
    for r in records:
        assert len(r["autophase"]) == 56


def test_features_empty_dir_succeeds(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    out = tmp_path / "features.jsonl"
    rc = main(["features", "--corpus", str(empty), "--out", str(out)])
    assert rc == 0
    assert out.read_text() == ""


def test_features_missing_dir_fails(tmp_path, capsys):
    rc = main(["features", "--corpus", str(tmp_path / "absent"),
               "--out", str(tmp_path / "f.jsonl")])
    assert rc != 0
    assert "not found" in capsys.readouterr().err


def test_build_probes_deterministic(small_corpus, config_path, tmp_path):
    out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
    for out in (out1, out2):
        rc = main(["--config", config_path, "build-probes",
                   "--corpus", str(small_corpus), "--out", str(out)])
        assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert len(doc["probes"]) == 2
    assert all(len(p["passes"]) == 2 for p in doc["probes"])


def test_build_probes_too_few_programs(small_corpus, tmp_path, config_path):
    cfg = json.loads(Path(config_path).read_text())
    cfg["P"] = 100  # more clusters than corpus programs
    big = tmp_path / "big.json"
    big.write_text(json.dumps(cfg), encoding="utf-8")
    rc = main(["--config", str(big), "build-probes",
               "--corpus", str(small_corpus), "--out", str(tmp_path / "p.json")])
    assert rc != 0


def test_full_pipeline_end_to_end(small_corpus, config_path, tmp_path):
    probes = tmp_path / "probes.json"
    spectra = tmp_path / "spectra.bin"
    codebook = tmp_path / "codebook.bin"
    codes = tmp_path / "codes.jsonl"
    labels = tmp_path / "labels.jsonl"
    dataset = tmp_path / "dataset"
    base = ["--config", config_path]

    assert main(base + ["build-probes", "--corpus", str(small_corpus),
                        "--out", str(probes)]) == 0
    assert main(base + ["spectrum", "--corpus", str(small_corpus),
                        "--probes", str(probes), "--out", str(spectra)]) == 0
    assert main(base + ["train-codebook", "--spectra", str(spectra),
                        "--out", str(codebook)]) == 0
    assert main(base + ["encode", "--spectra", str(spectra),
                        "--codebook", str(codebook), "--out", str(codes)]) == 0
    assert main(base + ["labels", "--corpus", str(small_corpus),
                        "--out", str(labels)]) == 0
    assert main(base + ["dataset", "--corpus", str(small_corpus),
                        "--probes", str(probes), "--codebook", str(codebook),
                        "--out", str(dataset)]) == 0

    label_rows = {r["program_id"]: r for r in corpus.read_jsonl(labels)}
    # Every add-heavy program is best served by del-add (pass index 1),
    # every mul-heavy one by del-mul (index 2).
    for i in range(4):
        assert label_rows[f"add{i}"]["best_pass_id"] == 1
        assert label_rows[f"mul{i}"]["best_pass_id"] == 2
    # oz deletes everything except the ret in these programs.
    assert label_rows["add0"]["oz_benefit_pct"] == pytest.approx(200.0 / 3)

    ds_labels = corpus.read_jsonl(dataset / "labels.jsonl")
    assert len(ds_labels) == 8
    code_rows = corpus.read_jsonl(dataset / "codes.jsonl")
    for r in code_rows:
        arr = np.asarray(r["codes"])
        assert arr.shape == (2, 8)

    # Alignment report over the generated artifacts.
    report = tmp_path / "align.json"
    rc = main(base + ["eval", "--task", "alignment",
                      "--labels", str(labels), "--probes", str(probes),
                      "--spectra", str(dataset / "spectra.bin"),
                      "--program-id", "add3", "--top5", "del-add,del-mul",
                      "--report", str(report)])
    assert rc == 0
    doc = json.loads(report.read_text())
    assert doc["reaction_strength"] <= 0.0
    assert doc["total_aligned"] >= 0


def test_eval_knn_subcommand(tmp_path, config_path):
    # Embeddings cluster perfectly by label, split 6 train / 2 test.
    ids = [f"p{i}" for i in range(8)]
    rng = np.random.default_rng(0)
    vecs = np.vstack([
        rng.normal(size=(4, 6)),
        rng.normal(size=(4, 6)) + 40.0,
    ])
    emb = tmp_path / "emb.bin"
    save_embeddings(EmbeddingMatrix(ids, vecs), emb)
    labels = tmp_path / "labels.jsonl"
    with open(labels, "w") as f:
        for i, pid in enumerate(ids):
            split = "test" if i in (3, 7) else "train"
            f.write(json.dumps({
                "program_id": pid, "best_pass_id": 0 if i < 4 else 1,
                "oz_benefit_pct": 0.0, "split": split,
            }) + "\n")
    report = tmp_path / "knn.json"
    rc = main(["--config", config_path, "eval", "--task", "knn",
               "--labels", str(labels), "--embeddings", str(emb),
               "--report", str(report)])
    assert rc == 0
    doc = json.loads(report.read_text())
    assert doc["knn_top1"] == pytest.approx(100.0)
    assert doc["n_train"] == 6 and doc["n_test"] == 2


def test_eval_metrics_subcommand(tmp_path, config_path):
    labels = tmp_path / "labels.jsonl"
    preds = tmp_path / "preds.jsonl"
    with open(labels, "w") as f:
        for pid, best in (("a", 3), ("b", 5)):
            f.write(json.dumps({"program_id": pid, "best_pass_id": best,
                                "oz_benefit_pct": 10.0, "split": "test"}) + "\n")
    with open(preds, "w") as f:
        f.write(json.dumps({"program_id": "a",
                            "ranked_pass_ids": [3, 1, 2, 4, 5],
                            "predicted_oz": 12.0}) + "\n")
        f.write(json.dumps({"program_id": "b",
                            "ranked_pass_ids": [1, 2, 5, 4, 3],
                            "predicted_oz": 6.0}) + "\n")
    report = tmp_path / "metrics.json"
    rc = main(["--config", config_path, "eval", "--task", "metrics",
               "--labels", str(labels), "--preds", str(preds),
               "--report", str(report)])
    assert rc == 0
    doc = json.loads(report.read_text())
    assert doc["top1"] == pytest.approx(50.0)
    assert doc["top5"] == pytest.approx(100.0)
    assert doc["mae"] == pytest.approx(3.0)


def test_unknown_config_key_fails(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1, "frobnicate": True}), encoding="utf-8")
    rc = main(["--config", str(bad), "features",
               "--corpus", str(tmp_path), "--out", str(tmp_path / "f.jsonl")])
    assert rc != 0
