"""
Harness Service - Handles run configuration, the suite registry, suite
execution and JSON-lines reports
"""

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from functools import lru_cache
from itertools import islice, product
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher
import numpy as np

from .construct_service import DEFAULT_REGISTRY, ConfigurationError, ConstructService, Registry
from .gadget_service import GadgetService
from .lemma_report import LemmaReport
from .poset_service import PosetService
from .ray_service import RayService
from .rtree_service import RTreeService
from .similarity_service import SimilarityService
from .spine_service import SpineService
from .tree_service import (
    DecoratedTree,
    FrontierPolicy,
    Kind,
    TreeService,
    VertexRecord,
)

logger = logging.getLogger(__name__)

WORKERS_ENV = "TREE_SIBLINGS_WORKERS"

LABEL_RADIUS = 8
LOCAL_RADIUS = 6
UNISIGN_RADIUS = 8
SIMILARITY_RADIUS = 8
RAY_HALFWIDTH = 8
POSET_RADIUS = 5
GLOBAL_PAIRS = 12
SIMILARITY_PAIRS = 10
RANDOM_TREES = 200
ENGINE_MAPS = 16
ORACLE_TREE_SIZE = 8
ORACLE_GUEST_SIZE = 7
ORACLE_HOST_SIZE = 9


def minimal_radius(k: int) -> int:
    """Nearest height-k target sits at distance 2k + 1; two more steps keep its neighbourhood interior."""
    return 2 * k + 3


@dataclass(frozen=True)
class RunConfig:
    """Settings of one verification run"""
    sib_count: int = 3
    stage: int = 1
    radius: int = 6
    maxlabel: Optional[int] = None
    registry_path: str = DEFAULT_REGISTRY
    suites: Tuple[str, ...] = ()
    seed: int = 0
    out_dir: str = "reports"

    def validate(self) -> "RunConfig":
        if self.sib_count < 1:
            raise ConfigurationError(f"sib_count must be >= 1, got {self.sib_count}")
        if self.stage < 0:
            raise ConfigurationError(f"stage must be >= 0, got {self.stage}")
        if self.radius < minimal_radius(self.stage):
            raise ConfigurationError(f"radius {self.radius} below minimal radius "
                                     f"{minimal_radius(self.stage)} for stage {self.stage}")
        unknown = [name for name in self.suites if name not in SUITES]
        if unknown:
            raise ConfigurationError(f"unknown suites: {', '.join(unknown)}")
        return self

    @property
    def selected(self) -> List[str]:
        return sorted(self.suites) if self.suites else sorted(SUITES)

    def hash_body(self) -> dict:
        body = asdict(self)
        body.pop("out_dir")
        body["suites"] = self.selected
        return body

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.hash_body(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class SuiteReport:
    """Deterministic outcome of one suite; wall time stays out of the body"""
    suite: str
    cases: int
    violations: List[dict]
    exceptions: List[dict]
    details: dict
    config_hash: str
    wall_time: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return not self.violations

    def body(self) -> dict:
        return {
            "suite": self.suite,
            "cases": self.cases,
            "violations": self.violations,
            "exceptions": self.exceptions,
            "details": self.details,
            "config_hash": self.config_hash,
            "passed": self.passed,
        }


@lru_cache(maxsize=4)
def _registry(path: str, sib_count: int, stage: int) -> Registry:
    if Path(path).exists():
        return ConstructService.load_registry(path)
    logger.warning("registry %s not found, enumerating siblings", path)
    return ConstructService.build_registry(sib_count, max(stage, 1))


def load_registry(cfg: RunConfig) -> Registry:
    return _registry(cfg.registry_path, cfg.sib_count, cfg.stage)


# ============================================================================
# SUITES
# ============================================================================

def suite_gadget_table(cfg: RunConfig) -> LemmaReport:
    report = LemmaReport("gadget-table")
    df = GadgetService.embedding_table()
    report.cases = len(df)
    for row in df[~df["agree"]].itertuples():
        report.violation(guest=[row.guest_pathlen, row.guest_fan], host=[row.host_pathlen, row.host_fan],
                         engine=bool(row.engine))
    report.details["equal_path_rule_disagreements"] = int((df["engine"] != df["equal_path_rule"]).sum())
    return report


def suite_label_reconstruct(cfg: RunConfig) -> LemmaReport:
    return RTreeService.lab_check(RTreeService.build_rball(LABEL_RADIUS, cfg.maxlabel))


def suite_colour_lemma(cfg: RunConfig) -> LemmaReport:
    return RTreeService.verify_colour_sweep(RTreeService.build_rball(LOCAL_RADIUS, cfg.maxlabel))


def suite_spin_lemmas(cfg: RunConfig) -> LemmaReport:
    ball = RTreeService.build_rball(LOCAL_RADIUS, cfg.maxlabel)
    report = LemmaReport("spin-lemmas")
    report.merge(RTreeService.verify_spin_lemmas(ball))
    report.merge(RTreeService.verify_hthpreserv(ball))
    report.merge(RTreeService.verify_homogeneity(ball))
    report.merge(RTreeService.verify_unisign(RTreeService.build_rball(UNISIGN_RADIUS), max_peak=3))
    return report


def suite_global_lemmas(cfg: RunConfig) -> LemmaReport:
    sb = SpineService.build_spine(cfg.stage, cfg.radius, cfg.maxlabel)
    report = LemmaReport("global-lemmas")
    report.merge(SpineService.verify_global_lemmas(sb, SpineService.sample_pairs(sb, GLOBAL_PAIRS, cfg.seed)))
    report.merge(SpineService.verify_structure(sb))
    gadgets = SpineService.build_spine(cfg.stage, cfg.radius, cfg.maxlabel, with_gadgets=True)
    report.merge(SpineService.degree_census(gadgets.tree, typed=False))
    report.details["rounds"] = sb.rounds
    return report


def suite_ray_centres(cfg: RunConfig) -> LemmaReport:
    report = RayService.verify_ray_centres(cfg.sib_count, RAY_HALFWIDTH, RAY_HALFWIDTH // 2)
    report.cases += 1
    if any(RayService.reflection_embeds(s, s2, RAY_HALFWIDTH)
           for s in range(cfg.sib_count) for s2 in range(cfg.sib_count)):
        report.violation(check="reflection")
    return report


def suite_noniso(cfg: RunConfig) -> LemmaReport:
    registry = load_registry(cfg)
    report = LemmaReport("noniso")
    for k in (0, 1):
        report.merge(ConstructService.verify_nonisomorphism(k, cfg.radius, cfg.sib_count, registry))
        for s in range(cfg.sib_count):
            tb = ConstructService.build_t(s, k, cfg.radius, registry)
            report.merge(ConstructService.verify_tball(tb, registry))
            report.merge(ConstructService.verify_spine_recovery(tb))
            report.merge(SpineService.degree_census(tb.tree, typed=True))
    return report


def _amalgamated_pairs(sb, count: int, seed: int, margin: int) -> List[Tuple[int, int]]:
    pool = [v for v in sb.core_vertices()
            if sb.tree.records[v].kind is Kind.RAY and sb.depth[v] + margin <= sb.radius]
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count and len(pool) > 1:
        a, b = rng.choice(len(pool), size=2, replace=False)
        pairs.append((pool[int(a)], pool[int(b)]))
    return pairs


def suite_similarity_unique(cfg: RunConfig) -> LemmaReport:
    sb = SpineService.build_spine(1, SIMILARITY_RADIUS)
    report = LemmaReport("similarity-unique")
    maps = []
    for u, v in _amalgamated_pairs(sb, SIMILARITY_PAIRS, cfg.seed, margin=5):
        phi = SimilarityService.build_similarity(sb, u, v)
        report.merge(SimilarityService.verify_uniqueness(sb, u, v, radius=4))
        report.merge(SimilarityService.check_similarity_properties(sb, phi))
        maps.append(phi)
    for first, second in zip(maps, maps[1:]):
        report.merge(SimilarityService.check_composition(sb, first, second))
    shifted = SimilarityService.build_similarity(sb, sb.centre, sb.central(1))
    explicit = SimilarityService.translation(sb, 1)
    report.cases += 1
    if any(explicit.get(w) != y for w, y in shifted.mapping.items() if w in explicit):
        report.violation(check="translation")
    return report


def suite_main_lemma(cfg: RunConfig) -> LemmaReport:
    registry = load_registry(cfg)
    report = LemmaReport("main-lemma")
    for k in (0, 1):
        tb = ConstructService.build_t(0, k, cfg.radius, registry)
        for name, phi in SimilarityService.witness_embeddings(tb):
            report.merge(SimilarityService.embedding_induces_similarity(tb.spine, tb.tree, phi))
            report.merge(ConstructService.verify_embedkcopies(tb, phi))
        engine_maps = islice(TreeService.iter_embeddings(tb.tree, tb.tree, rooted=True, policy=FrontierPolicy.OPEN),
                             ENGINE_MAPS)
        count = 0
        for phi in engine_maps:
            count += 1
            report.merge(SimilarityService.embedding_induces_similarity(
                tb.spine, tb.tree, phi, strict=False, targets=tb.targets))
            report.merge(ConstructService.verify_embedkcopies(tb, phi, margin=k + 2))
        report.details[f"stage{k}.engine_maps"] = count
        if k == 1:
            mirror = SimilarityService.mirror_map(tb.tree, tb.tree.index(("r+",)))
            control = SimilarityService.embedding_induces_similarity(tb.spine, tb.tree, mirror)
            report.cases += 1
            report.details["negative_control_flagged"] = len(control.violations)
            if control.passed:
                report.violation(check="negative-control")
    return report


def suite_embfinite(cfg: RunConfig) -> LemmaReport:
    registry = load_registry(cfg)
    report = LemmaReport("embfinite")
    for k in (0, 1):
        tb = ConstructService.build_t(0, k, cfg.radius, registry)
        witnesses = SimilarityService.witness_embeddings(tb)
        report.merge(ConstructService.verify_embfinite(tb, witnesses))
        report.details[f"stage{k}.witnesses"] = [name for name, _ in witnesses]
    return report


def suite_poset_monoid(cfg: RunConfig) -> LemmaReport:
    report = LemmaReport("poset-monoid")
    for domain in ("gadgets", "ray-windows", "r-ball", "negative-control"):
        report.merge(PosetService.monoid_equality_check(domain, cfg.sib_count, RAY_HALFWIDTH, POSET_RADIUS))
    return report


def all_trees(n: int) -> List[nx.Graph]:
    """Unlabeled trees on n vertices, one per isomorphism class."""
    if n <= 2:
        return [nx.path_graph(n)]
    return list(nx.nonisomorphic_trees(n))


def _random_decorated(rng: np.random.Generator, n: int) -> DecoratedTree:
    g = nx.from_prufer_sequence([int(x) for x in rng.integers(0, n, size=n - 2)]) if n > 2 else nx.path_graph(n)
    records = []
    for v in range(n):
        label = int(rng.integers(0, 3))
        kind = Kind.TREE if label == 0 else Kind.COPY
        records.append(VertexRecord(kind, (f"v{v}",), label=label))
    return DecoratedTree(records, list(g.edges()))


def _relabeled(t: DecoratedTree, order: Sequence[int]) -> DecoratedTree:
    """Vertex v of t becomes vertex order[v]."""
    records = [None] * len(t)
    for v, rec in enumerate(t.records):
        records[order[v]] = rec
    return DecoratedTree(records, [(order[a], order[b]) for a, b in t.edges()])


def _relabeled_with_one_change(rng: np.random.Generator, t: DecoratedTree) -> DecoratedTree:
    order = [int(x) for x in rng.permutation(len(t))]
    moved = _relabeled(t, order)
    v = int(rng.integers(0, len(t)))
    label = (moved.records[v].label + 1) % 3
    records = list(moved.records)
    records[v] = replace(records[v], label=label, kind=Kind.TREE if label == 0 else Kind.COPY)
    return DecoratedTree(records, moved.edges())


def brute_isomorphic(a: DecoratedTree, b: DecoratedTree) -> bool:
    """Search over vertex permutations, extending one vertex at a time, tokens respected."""
    n = len(a)
    if n != len(b):
        return False
    image = [-1] * n
    used = [False] * n

    def place(i: int) -> bool:
        if i == n:
            return True
        for c in range(n):
            if used[c] or a.records[i].token() != b.records[c].token() or a.degree(i) != b.degree(c):
                continue
            if any((j in a.adjacency[i]) != (image[j] in b.adjacency[c]) for j in range(i)):
                continue
            image[i], used[c] = c, True
            if place(i + 1):
                return True
            image[i], used[c] = -1, False
        return False

    return place(0)


def suite_iso_oracle(cfg: RunConfig) -> LemmaReport:
    report = LemmaReport("iso-oracle")
    rng = np.random.default_rng(cfg.seed)
    by_size = {n: all_trees(n) for n in range(1, ORACLE_HOST_SIZE + 1)}
    for n in range(1, ORACLE_TREE_SIZE + 1):
        trees = [TreeService.from_networkx(g) for g in by_size[n]]
        for a, b in product(trees, repeat=2):
            report.cases += 1
            if TreeService.is_isomorphic(a, b, False) != brute_isomorphic(a, b):
                report.violation(check="unlabeled", n=n, edges=[sorted(a.edges()), sorted(b.edges())])
        for t in trees:
            moved = _relabeled(t, [int(x) for x in rng.permutation(n)])
            report.cases += 1
            if not (TreeService.is_isomorphic(t, moved, False) and brute_isomorphic(t, moved)):
                report.violation(check="unlabeled-relabeled", n=n, edges=sorted(t.edges()))
    report.details["unlabeled_classes"] = len(by_size[ORACLE_TREE_SIZE])

    for _ in range(RANDOM_TREES):
        n = int(rng.integers(1, 13))
        t = _random_decorated(rng, n)
        partners = {
            "relabeled": _relabeled(t, [int(x) for x in rng.permutation(n)]),
            "same-size": _random_decorated(rng, n),
            "one-label-changed": _relabeled_with_one_change(rng, t),
        }
        for check, other in partners.items():
            report.cases += 1
            expected = brute_isomorphic(t, other)
            if check == "relabeled" and not expected:
                report.violation(check="oracle", size=n)
            if TreeService.is_isomorphic(t, other, False) != expected:
                report.violation(check=f"decorated-{check}", size=n)

    guests = [g for n in range(1, ORACLE_GUEST_SIZE + 1) for g in by_size[n]]
    hosts = [g for n in range(1, ORACLE_HOST_SIZE + 1) for g in by_size[n]]
    for guest, host in ((g, h) for g in guests for h in hosts if len(g) <= len(h)):
        report.cases += 1
        engine = TreeService.find_embedding(TreeService.from_networkx(guest), TreeService.from_networkx(host),
                                            rooted=False) is not None
        if engine != GraphMatcher(host, guest).subgraph_is_monomorphic():
            report.violation(check="embedding", guest=sorted(guest.edges()), host=sorted(host.edges()))
    return report


SUITES: Dict[str, Callable[[RunConfig], LemmaReport]] = {
    "gadget-table": suite_gadget_table,
    "label-reconstruct": suite_label_reconstruct,
    "colour-lemma": suite_colour_lemma,
    "spin-lemmas": suite_spin_lemmas,
    "global-lemmas": suite_global_lemmas,
    "ray-centres": suite_ray_centres,
    "noniso": suite_noniso,
    "similarity-unique": suite_similarity_unique,
    "main-lemma": suite_main_lemma,
    "embfinite": suite_embfinite,
    "poset-monoid": suite_poset_monoid,
    "iso-oracle": suite_iso_oracle,
}


# ============================================================================
# RUNNING
# ============================================================================

class HarnessService:
    """Service for suite orchestration"""

    @staticmethod
    def worker_count() -> int:
        try:
            return max(1, int(os.environ.get(WORKERS_ENV, "1")))
        except ValueError:
            raise ConfigurationError(f"{WORKERS_ENV} must be an integer")

    @staticmethod
    def run_suite(cfg: RunConfig, name: str) -> SuiteReport:
        """
        Run one registered suite.

        Args:
            cfg: Run configuration
            name: Suite name

        Returns:
            SuiteReport; identical config and seed give an identical body
        """
        if name not in SUITES:
            raise ConfigurationError(f"unknown suite {name}")
        cfg.validate()
        start = time.perf_counter()
        result = SUITES[name](cfg)
        wall = time.perf_counter() - start
        logger.info("suite %s: %d cases, %d violations, %.2fs", name, result.cases, len(result.violations), wall)
        return SuiteReport(name, result.cases, result.violations, result.exceptions, result.details,
                           cfg.config_hash, wall)

    @staticmethod
    def run_suites(cfg: RunConfig) -> List[SuiteReport]:
        names = cfg.validate().selected
        workers = HarnessService.worker_count()
        if workers > 1 and len(names) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(HarnessService.run_suite, [cfg] * len(names), names))
        else:
            reports = [HarnessService.run_suite(cfg, name) for name in names]
        return sorted(reports, key=lambda r: r.suite)

    @staticmethod
    def report_path(cfg: RunConfig) -> Path:
        return Path(cfg.out_dir) / f"{cfg.config_hash}.jsonl"

    @staticmethod
    def write_reports(cfg: RunConfig, reports: List[SuiteReport]) -> Tuple[bool, str]:
        try:
            path = HarnessService.report_path(cfg)
            path.parent.mkdir(parents=True, exist_ok=True)
            stamp = datetime.now().isoformat(timespec="seconds")
            with path.open("w") as f:
                for report in reports:
                    line = {"body": report.body(), "wall_time": round(report.wall_time, 3), "timestamp": stamp}
                    f.write(json.dumps(line, sort_keys=True) + "\n")
            return True, f"Reports written to {path}"
        except Exception as e:
            return False, f"Error: {str(e)}"

    @staticmethod
    def body_bytes(reports: List[SuiteReport]) -> bytes:
        """Canonical bytes of the report bodies, for determinism checks."""
        return "\n".join(json.dumps(r.body(), sort_keys=True) for r in reports).encode()

    @staticmethod
    def summary(reports: List[SuiteReport]) -> str:
        lines = []
        for report in reports:
            status = "PASS" if report.passed else "FAIL"
            lines.append(f"{status}  {report.suite:<18} cases={report.cases:<7} "
                         f"violations={len(report.violations):<4} {report.wall_time:.2f}s")
        return "\n".join(lines)
