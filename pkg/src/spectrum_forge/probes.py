"""Probe construction and behavioral-spectrum computation.

A probe is a fixed-length pass sequence tuned (by greedy or genetic
search) to maximize the mean relative instruction reduction over one
cluster of the corpus. A program's spectrum stacks its reaction vectors
to all P probes.
"""

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ir
from .driver import OptimizerDriver, apply_passes
from .errors import DimensionMismatch, SpectrumForgeError
from .features import AUTOPHASE_DIM, FeatureVector, extract_autophase
from .kmeans import kmeans
from .seeding import stable_seed

PROBESET_FORMAT_VERSION = 1

DEFAULT_P = 100   # probe count
DEFAULT_L = 50    # passes per probe


def reaction(h_orig: FeatureVector | np.ndarray, h_opt: FeatureVector | np.ndarray) -> np.ndarray:
    """Scale-invariant reaction: log1p of the clamped optimized feature
    minus log1p of the clamped original, per dimension."""
    a = h_orig.values if isinstance(h_orig, FeatureVector) else np.asarray(h_orig)
    b = h_opt.values if isinstance(h_opt, FeatureVector) else np.asarray(h_opt)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.log1p(np.maximum(0.0, b)) - np.log1p(np.maximum(0.0, a))


@dataclass(frozen=True)
class Probe:
    id: int
    passes: tuple[str, ...]
    provenance: dict = field(default_factory=dict)  # cluster, method, score


@dataclass
class ProbeSet:
    probes: list[Probe]
    pass_pool: list[str]
    clustering_centroids: np.ndarray  # P x 56
    config_hash: str = ""

    def __post_init__(self):
        clusters = [p.provenance.get("cluster") for p in self.probes]
        if len(set(clusters)) != len(clusters):
            raise ValueError("probe provenance cluster ids must be unique")

    @property
    def P(self) -> int:
        return len(self.probes)

    def to_json(self) -> str:
        doc = {
            "format_version": PROBESET_FORMAT_VERSION,
            "pass_pool": self.pass_pool,
            "config_hash": self.config_hash,
            "clustering_centroids": self.clustering_centroids.tolist(),
            "probes": [
                {"id": p.id, "passes": list(p.passes), "provenance": p.provenance}
                for p in self.probes
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ProbeSet":
        doc = json.loads(text)
        if doc.get("format_version") != PROBESET_FORMAT_VERSION:
            raise SpectrumForgeError(
                f"unsupported probe-set format version {doc.get('format_version')}"
            )
        probes = [
            Probe(id=p["id"], passes=tuple(p["passes"]), provenance=p["provenance"])
            for p in doc["probes"]
        ]
        return cls(
            probes=probes,
            pass_pool=list(doc["pass_pool"]),
            clustering_centroids=np.asarray(doc["clustering_centroids"], dtype=np.float64),
            config_hash=doc.get("config_hash", ""),
        )


@dataclass
class BehaviorSpectrum:
    program_id: str
    rows: np.ndarray        # P x 56 float64
    validity: np.ndarray    # P bools; False rows were zero-filled

    def __post_init__(self):
        # compute_spectrum always produces P x 56; smaller widths are
        # allowed here so codec tests can run on tiny synthetic spectra.
        if self.rows.ndim != 2 or self.rows.shape[0] != len(self.validity):
            raise DimensionMismatch(f"spectrum shape {self.rows.shape}")


def compute_spectrum(
    driver: OptimizerDriver,
    program: str,
    probes: ProbeSet,
    program_id: str = "<anon>",
    failure_policy: str = "zero-fill",
    jobs: int = 1,
) -> BehaviorSpectrum:
    """Stack the program's reactions to every probe.

    failure_policy "zero-fill": a crashed or timed-out probe contributes
    an all-zero row flagged invalid (zero is the no-change reaction).
    "strict": the first failure propagates.
    """
    if failure_policy not in ("zero-fill", "strict"):
        raise ValueError(f"unknown failure policy {failure_policy!r}")
    h_orig = extract_autophase(ir.parse_ir(program))

    def one(probe: Probe):
        try:
            optimized = apply_passes(driver, program, probe.passes)
            h_opt = extract_autophase(ir.parse_ir(optimized))
            return reaction(h_orig, h_opt), True
        except SpectrumForgeError:
            if failure_policy == "strict":
                raise
            return np.zeros(AUTOPHASE_DIM), False

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, probes.probes))
    else:
        results = [one(p) for p in probes.probes]

    rows = np.stack([r for r, _ in results])
    validity = np.array([v for _, v in results], dtype=bool)
    return BehaviorSpectrum(program_id=program_id, rows=rows, validity=validity)


def cluster_corpus(
    features: list[FeatureVector], P: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """K-means over program feature vectors; returns (centroids, labels)."""
    x = np.stack([f.values for f in features]).astype(np.float64)
    return kmeans(x, P, seed=seed)


def sequence_score(
    driver: OptimizerDriver, programs: list[str], passes: tuple[str, ...]
) -> float:
    """Mean relative instruction reduction of one pass sequence over a
    cluster: (orig - opt) / max(1, orig), averaged over programs."""
    total = 0.0
    for text in programs:
        orig = ir.instruction_count(ir.parse_ir(text))
        opt = ir.instruction_count(ir.parse_ir(apply_passes(driver, text, passes)))
        total += (orig - opt) / max(1, orig)
    return total / len(programs)


def _greedy_search(driver, programs, pass_pool, L, cache):
    prefix: tuple[str, ...] = ()
    for _ in range(L):
        best_score, best_pass = None, None
        for name in pass_pool:  # pool order = lowest-index tie-break
            cand = prefix + (name,)
            if cand not in cache:
                cache[cand] = sequence_score(driver, programs, cand)
            s = cache[cand]
            if best_score is None or s > best_score:
                best_score, best_pass = s, name
        prefix = prefix + (best_pass,)
    return prefix, cache[prefix]


def _genetic_search(driver, programs, pass_pool, L, budget, seed, cache,
                    population=32, tournament=4, elitism=2):
    n_pool = len(pass_pool)

    def score_of(genome: tuple[int, ...]) -> float:
        passes = tuple(pass_pool[g] for g in genome)
        if passes not in cache:
            cache[passes] = sequence_score(driver, programs, passes)
        return cache[passes]

    # With enough budget to enumerate the whole space, do exactly that:
    # the search is then guaranteed to return the global optimum.
    if n_pool**L <= budget:
        best, best_score = None, None
        for genome in itertools.product(range(n_pool), repeat=L):
            s = score_of(genome)
            if best_score is None or s > best_score:
                best, best_score = genome, s
        passes = tuple(pass_pool[g] for g in best)
        return passes, best_score

    rng = np.random.default_rng(seed)
    pop = [tuple(rng.integers(n_pool, size=L).tolist()) for _ in range(population)]
    scores = [score_of(g) for g in pop]
    best_idx = int(np.argmax(scores))
    best, best_score = pop[best_idx], scores[best_idx]

    generations = max(1, budget // population)
    for _ in range(generations):
        order = sorted(range(population), key=lambda i: (-scores[i], i))
        next_pop = [pop[i] for i in order[:elitism]]
        while len(next_pop) < population:
            parents = []
            for _ in range(2):
                contenders = rng.integers(population, size=tournament)
                winner = min(contenders, key=lambda i: (-scores[i], i))
                parents.append(pop[winner])
            if L > 1:
                cut = int(rng.integers(1, L))
                child = parents[0][:cut] + parents[1][cut:]
            else:
                child = parents[0]
            child = tuple(
                int(rng.integers(n_pool)) if rng.random() < 1.0 / L else g
                for g in child
            )
            next_pop.append(child)
        pop = next_pop
        scores = [score_of(g) for g in pop]
        gen_best = int(np.argmax(scores))
        if scores[gen_best] > best_score:
            best, best_score = pop[gen_best], scores[gen_best]

    passes = tuple(pass_pool[g] for g in best)
    return passes, best_score


def search_probe(
    driver: OptimizerDriver,
    cluster_programs: list[str],
    pass_pool: list[str],
    L: int,
    method: str = "greedy",
    budget: int = 1000,
    seed: int = 0,
) -> Probe:
    """Find one length-L sequence maximizing the cluster score.

    Deterministic given seed; exhausting the budget returns best-so-far.
    """
    if not cluster_programs:
        raise ValueError("cluster_programs must be nonempty")
    if not pass_pool:
        raise ValueError("pass_pool must be nonempty")
    cache: dict[tuple[str, ...], float] = {}
    if method == "greedy":
        passes, score = _greedy_search(driver, cluster_programs, pass_pool, L, cache)
    elif method == "genetic":
        passes, score = _genetic_search(
            driver, cluster_programs, pass_pool, L, budget, seed, cache
        )
    else:
        raise ValueError(f"unknown search method {method!r}")
    return Probe(
        id=0,
        passes=passes,
        provenance={"cluster": 0, "method": method, "score": score},
    )


def build_probe_set(
    driver: OptimizerDriver,
    corpus: list[tuple[str, str]],  # (program_id, IR text)
    P: int,
    L: int,
    pass_pool: list[str],
    method: str = "greedy",
    budget: int = 1000,
    seed: int = 0,
    config_hash: str = "",
) -> ProbeSet:
    """Cluster the corpus into P groups and tune one probe per cluster.

    Probes are ordered by cluster id; each derives its own RNG seed from
    the top-level seed so the whole set is reproducible.
    """
    features = [extract_autophase(ir.parse_ir(text)) for _, text in corpus]
    centroids, labels = cluster_corpus(features, P, seed=stable_seed(seed, "cluster"))

    probes = []
    for cid in range(P):
        members = [corpus[i][1] for i in range(len(corpus)) if labels[i] == cid]
        found = search_probe(
            driver, members, pass_pool, L, method=method, budget=budget,
            seed=stable_seed(seed, "probe", cid),
        )
        probes.append(
            Probe(
                id=cid,
                passes=found.passes,
                provenance={
                    "cluster": cid,
                    "method": method,
                    "score": found.provenance["score"],
                },
            )
        )
    return ProbeSet(
        probes=probes,
        pass_pool=list(pass_pool),
        clustering_centroids=centroids,
        config_hash=config_hash,
    )
