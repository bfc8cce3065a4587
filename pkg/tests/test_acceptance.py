"""Acceptance suite: one test per pipeline-level guarantee, each printing
a single pass/fail line with its runtime. Run with `pytest -v -s` to see
the lines as they complete."""

import contextlib
import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from spectrum_forge import corpus, ir, pq
from spectrum_forge.cli import main
from spectrum_forge.driver import apply_passes, mock_driver
from spectrum_forge.evalmetrics import knn_classify
from spectrum_forge.features import extract_autophase, extract_instcount
from spectrum_forge.probes import build_probe_set, reaction, search_probe, sequence_score

from conftest import FIXTURE_DIR, fixture_text
from test_eval import brute_force_knn
from test_features import HAND_TALLIES, expected_vector
from test_pq import brute_force_encode
from test_probes import program_with

INSTCOUNT_TALLIES = {
    "simple_add.ll": {"add": 3, "br": 1, "ret": 1},
    "branch.ll": {"icmp": 1, "br": 1, "mul": 1, "sub": 1, "ret": 2},
    "loop.ll": {"br": 3, "phi": 1, "icmp": 1, "add": 1, "ret": 1},
    "memory.ll": {"alloca": 1, "store": 2, "load": 1, "mul": 1, "ret": 1},
    "calls.ll": {"call": 3, "ret": 1},
    "commented.ll": {"add": 3, "br": 1, "ret": 1},
    "twofuncs.ll": {"add": 6, "br": 2, "ret": 2},
    "switch.ll": {"switch": 1, "ret": 3},
    "empty.ll": {},
    "negatives.ll": {"sub": 1, "xor": 1, "ashr": 1, "shl": 1, "or": 1,
                     "and": 1, "ret": 1},
    "phi_many.ll": {"icmp": 1, "br": 3, "phi": 4, "add": 1, "ret": 1},
    "unknown.ll": {"other": 2, "ret": 1},
}


@contextlib.contextmanager
def criterion(name: str, limit_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name} ({time.perf_counter() - start:.2f}s)")
        raise
    elapsed = time.perf_counter() - start
    status = "PASS" if elapsed < limit_s else "FAIL"
    print(f"[{status}] {name} ({elapsed:.2f}s, limit {limit_s:g}s)")
    assert elapsed < limit_s, f"{name} exceeded {limit_s}s"


def test_reaction_closed_forms_and_scale_invariance():
    with criterion("reaction definition: closed forms, clamp, scale invariance", 1.0):
        rng = np.random.default_rng(0)
        h = rng.uniform(0, 100, size=56)
        assert np.allclose(reaction(h, h), 0.0, atol=1e-12)
        # Closed forms: 0 -> 1 gives ln 2; 3 -> 0 gives -ln 4.
        assert reaction(np.array([0.0]), np.array([1.0]))[0] == pytest.approx(
            np.log(2.0), abs=1e-9)
        assert reaction(np.array([3.0]), np.array([0.0]))[0] == pytest.approx(
            -np.log(4.0), abs=1e-9)
        # Negative optimized counts clamp to zero before the log.
        assert reaction(np.array([3.0]), np.array([-5.0]))[0] == pytest.approx(
            -np.log(4.0), abs=1e-9)
        # Antisymmetry on non-negative inputs.
        a = rng.uniform(0, 50, size=56)
        b = rng.uniform(0, 50, size=56)
        assert np.allclose(reaction(a, b), -reaction(b, a), atol=1e-12)
        # Large-scale behavior: at s = 1e6 the reaction approaches the
        # count ratio log, uniformly over a, b in [1, 100].
        s = 1e6
        worst = 0.0
        for av in np.linspace(1, 100, 25):
            for bv in np.linspace(1, 100, 25):
                got = reaction(np.array([s * av]), np.array([s * bv]))[0]
                worst = max(worst, abs(got - np.log(bv / av)))
        assert worst < 1e-4


def test_feature_extraction_matches_hand_tallies():
    with criterion("feature extraction: hand-tallied fixtures, additivity", 5.0):
        assert len(HAND_TALLIES) >= 10
        for name, tally in HAND_TALLIES.items():
            got = extract_autophase(ir.parse_ir(fixture_text(name))).values
            assert np.array_equal(got, expected_vector(tally)), name
        for name, tally in INSTCOUNT_TALLIES.items():
            counts = extract_instcount(ir.parse_ir(fixture_text(name))).as_dict()
            assert counts == tally, name
        # Concatenating two modules adds their feature vectors.
        a = fixture_text("simple_add.ll")
        b = fixture_text("branch.ll").replace("@f", "@g")
        merged = extract_autophase(ir.parse_ir(a + "\n" + b)).values
        assert np.array_equal(
            merged,
            extract_autophase(ir.parse_ir(a)).values
            + extract_autophase(ir.parse_ir(b)).values,
        )


def test_pq_encode_matches_exhaustive_search():
    with criterion("product quantization: exhaustive-search oracle", 30.0):
        rng = np.random.default_rng(42)
        train = rng.normal(size=(500, 8))
        cb = pq.train_codebook(train, M=4, k_star=16, seed=1)
        queries = rng.normal(size=(1000, 8))
        for q in queries:
            assert pq.encode(cb, q).ids == brute_force_encode(cb, q)
        # Reconstruction error never increases with codebook size.
        errors = [
            pq.quantization_error(
                pq.train_codebook(train, M=4, k_star=k, seed=1), queries)
            for k in (4, 8, 16)
        ]
        assert errors[0] >= errors[1] >= errors[2]
        # k = n reconstructs the training set exactly.
        tiny = rng.normal(size=(16, 8))
        exact = pq.train_codebook(tiny, M=4, k_star=16, seed=0)
        assert pq.quantization_error(exact, tiny) == pytest.approx(0.0, abs=1e-10)
        # Equidistant case resolves to the lowest centroid index.
        tie = pq.Codebook(M=1, D=1, k_star=4,
                          centroids=np.array([[[0.0], [2.0], [5.0], [4.0]]],
                                             dtype=np.float32))
        assert pq.encode(tie, np.array([3.0])).ids == (1,)


def test_probe_search_attains_exhaustive_optimum():
    with criterion("probe search: greedy and genetic reach the optimum", 30.0):
        driver = mock_driver()
        programs = [program_with(3, 2), program_with(1, 4, name="q")]
        pool = ["nop", "del-add", "del-mul"]
        best = max(
            sequence_score(driver, programs, seq)
            for seq in itertools.product(pool, repeat=2)
        )
        greedy = search_probe(driver, programs, pool, L=2, method="greedy")
        assert greedy.provenance["score"] == pytest.approx(best)
        genetic = search_probe(driver, programs, pool, L=2, method="genetic",
                               budget=9, seed=0)
        assert genetic.provenance["score"] == pytest.approx(best)
        # Two full builds serialize to identical bytes.
        named = [("a", programs[0]), ("q", programs[1]),
                 ("r", program_with(5, 0, "r")), ("s", program_with(0, 5, "s"))]
        kwargs = dict(P=2, L=2, pass_pool=pool, method="genetic",
                      budget=9, seed=3)
        j1 = build_probe_set(driver, named, **kwargs).to_json()
        j2 = build_probe_set(driver, named, **kwargs).to_json()
        assert j1 == j2


def test_labels_match_exhaustive_single_pass_oracle():
    with criterion("labeling: exhaustive single-pass oracle, hand counts", 10.0):
        driver = mock_driver()
        pool = ["nop", "del-add", "del-mul", "del-store", "del-call"]
        for name in ("simple_add.ll", "branch.ll", "memory.ll", "calls.ll",
                     "negatives.ll"):
            text = fixture_text(name)
            orig = ir.instruction_count(ir.parse_ir(text))
            reductions = [
                orig - ir.instruction_count(
                    ir.parse_ir(apply_passes(driver, text, [p])))
                for p in pool
            ]
            want = max(range(len(pool)), key=lambda i: (reductions[i], -i))
            got_id, got_red = corpus.label_best_pass(driver, text, pool)
            assert got_id == want and got_red == float(reductions[want]), name
        # Hand-counted relative reductions for the size pipeline alias.
        assert corpus.label_oz_benefit(
            driver, program_with(3, 1)) == pytest.approx(80.0, abs=1e-9)
        assert corpus.label_oz_benefit(
            driver, fixture_text("branch.ll"), oz_passes=["nop"]
        ) == pytest.approx(0.0, abs=1e-9)


def test_knn_matches_brute_force_on_random_embeddings():
    with criterion("k-NN classifier: brute-force oracle with tie rules", 10.0):
        rng = np.random.default_rng(7)
        train = rng.normal(size=(200, 10))
        labels = rng.integers(0, 5, size=200).tolist()
        queries = rng.normal(size=(60, 10))
        assert knn_classify(train, labels, queries, k=5) == brute_force_knn(
            train, labels, queries, 5)
        # Equidistant neighbors: the lower train index wins.
        pair = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert knn_classify(pair, [9, 4], np.array([[0.0, 0.0]]), k=1) == [9]
        # Split votes: the nearest tied label wins.
        trio = np.array([[0.0], [1.0], [10.0]])
        assert knn_classify(trio, [5, 6, 6], np.array([[0.2]]), k=2) == [5]


def test_dataset_build_is_byte_deterministic(tmp_path):
    with criterion("end-to-end determinism: identical dataset bytes", 60.0):
        cfg = {
            "seed": 13, "P": 2, "L": 2, "M": 8, "k_star": 4,
            "method": "greedy", "use_mock_optimizer": True,
            "pass_pool": ["nop", "del-add", "del-mul"],
            "pass_list": ["nop", "del-add", "del-mul", "del-store"],
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        base = ["--config", str(cfg_path)]
        probes = tmp_path / "probes.json"
        spectra = tmp_path / "spectra.bin"
        codebook = tmp_path / "codebook.bin"
        assert main(base + ["build-probes", "--corpus", str(FIXTURE_DIR),
                            "--out", str(probes)]) == 0
        assert main(base + ["spectrum", "--corpus", str(FIXTURE_DIR),
                            "--probes", str(probes), "--out", str(spectra)]) == 0
        assert main(base + ["train-codebook", "--spectra", str(spectra),
                            "--out", str(codebook)]) == 0

        outputs = []
        for run in ("run1", "run2"):
            out = tmp_path / run
            assert main(base + ["dataset", "--corpus", str(FIXTURE_DIR),
                                "--probes", str(probes),
                                "--codebook", str(codebook),
                                "--out", str(out)]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outputs[0] == outputs[1]
        assert outputs[0]  # the corpus actually produced files
