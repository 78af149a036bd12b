"""
Spine Service - Handles staged truncations of the spine S^p(k) and the global
height, colour, sign and spin functions across copies
"""

import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .gadget_service import GadgetService, GadgetSpec
from .lemma_report import LemmaReport
from .rtree_service import LABEL_TAG, CopyFrame, UndefinedAtBaseError, child_labels
from .tree_service import (
    DecoratedTree,
    Kind,
    TreeBuilder,
    VertexRecord,
    format_address,
)

logger = logging.getLogger(__name__)


@dataclass
class SpineBall:
    """Truncation of S^p(k) around its centre z"""
    tree: DecoratedTree
    stage: int
    centre: int
    radius: int
    maxlabel: Optional[int]
    copies: Dict[int, int]
    rays: Dict[int, Dict[int, int]]
    heights: Dict[int, int]
    depth: Dict[int, int]
    rounds: List[int]
    frames: Dict[int, CopyFrame] = field(default_factory=dict)

    def frame(self, copy: int) -> CopyFrame:
        if copy not in self.frames:
            self.frames[copy] = CopyFrame(self.tree, self.copies[copy], copy)
        return self.frames[copy]

    def copy_of(self, v: int) -> int:
        return self.tree.records[v].copy

    def interior(self, v: int) -> bool:
        return not self.tree.records[v].frontier

    def is_copy_root(self, v: int) -> bool:
        return self.copies.get(self.copy_of(v)) == v

    def label_zero(self, interior: bool = True) -> List[int]:
        return [v for v in self.core_vertices()
                if self.tree.records[v].label == 0 and not (interior and self.tree.records[v].frontier)]

    def core_vertices(self) -> List[int]:
        return sorted(self.depth)

    def central(self, index: int) -> Optional[int]:
        return self.rays[0].get(index)


def _shortlex(address: Tuple[str, ...]):
    return len(address), address


class _SpineBuilder:
    """Breadth-first materialization with staged amalgamation rounds"""

    def __init__(self, radius: int, maxlabel: Optional[int]):
        self.radius = radius
        self.maxlabel = maxlabel
        self.builder = TreeBuilder()
        self.dist: List[int] = []
        self.ghth: List[int] = []
        self.copy_parent: List[Optional[int]] = []
        self.truncated: Set[int] = set()
        self.copy_roots: Dict[int, int] = {}
        self.rays: Dict[int, Dict[int, int]] = {}
        self.queue: deque = deque()

    def add(self, record: VertexRecord, parent: Optional[int], copy_parent: Optional[int], height: int) -> int:
        v = self.builder.add_vertex(record)
        if parent is not None:
            self.builder.add_edge(parent, v)
        self.dist.append(0 if parent is None else self.dist[parent] + 1)
        self.ghth.append(height)
        self.copy_parent.append(copy_parent)
        self.queue.append(v)
        return v

    def start(self) -> int:
        z = self.add(VertexRecord(Kind.RAY, (), label=0, amalgamated=True, copy=0, ray=0, ray_index=0),
                     None, None, 0)
        self.copy_roots[0] = z
        self.rays[0] = {0: z}
        return z

    def expand(self):
        while self.queue:
            v = self.queue.popleft()
            if self.dist[v] >= self.radius:
                continue
            self._copy_children(v)
            if self.builder.records[v].ray is not None:
                self._ray_neighbours(v)

    def _copy_children(self, v: int):
        rec = self.builder.records[v]
        cp = self.copy_parent[v]
        parent_label = None if cp is None else self.builder.records[cp].label
        is_root = self.copy_roots[rec.copy] == v
        for i, lab in enumerate(child_labels(rec.label, parent_label, is_root)):
            if self.maxlabel is not None and lab > self.maxlabel:
                self.truncated.add(v)
                continue
            kind = Kind.TREE if lab == 0 else Kind.COPY
            self.add(VertexRecord(kind, rec.address + (f"c{i}",), label=lab, copy=rec.copy),
                     v, v, max(self.ghth[v], lab))

    def _ray_neighbours(self, v: int):
        rec = self.builder.records[v]
        ray = self.rays[rec.ray]
        steps = []
        if rec.ray_index >= 0 and rec.ray_index + 1 not in ray:
            steps.append((rec.ray_index + 1, "r+"))
        if rec.ray_index <= 0 and rec.ray_index - 1 not in ray:
            steps.append((rec.ray_index - 1, "r-"))
        for index, move in steps:
            copy = len(self.copy_roots)
            w = self.add(VertexRecord(Kind.RAY, rec.address + (move,), label=0, amalgamated=True,
                                      copy=copy, ray=rec.ray, ray_index=index),
                         v, None, self.ghth[v])
            self.copy_roots[copy] = w
            ray[index] = w

    def amalgamate(self, t: int):
        ray = len(self.rays)
        self.rays[ray] = {0: t}
        self.builder.update(t, kind=Kind.RAY, amalgamated=True, ray=ray, ray_index=0)
        if self.dist[t] < self.radius:
            self._ray_neighbours(t)

    def candidates(self, stage: int) -> List[int]:
        return [v for v, rec in enumerate(self.builder.records)
                if rec.kind is Kind.TREE and self.ghth[v] <= stage]


class SpineService:
    """Service for spine truncations and the global calculus"""

    @staticmethod
    def build_spine(k: int, radius: int, maxlabel: Optional[int] = None, with_gadgets: bool = False) -> SpineBall:
        """
        Build the radius-bounded truncation of S^p(k) around z.

        Stage 0 activates the central ray; stage j amalgamates every tree
        vertex of global height <= j, repeating rounds until nothing changes.

        Args:
            k: Stage
            radius: Graph distance bound from z, gadgets excluded
            maxlabel: Labels above this are not materialized
            with_gadgets: Attach label gadgets to every core vertex

        Returns:
            SpineBall with vertex ids in shortlex address order
        """
        if k < 0:
            raise ValueError("stage must be >= 0")
        sb = _SpineBuilder(radius, maxlabel)
        sb.start()
        sb.expand()
        rounds = []
        for stage in range(1, k + 1):
            count = 0
            while True:
                found = sb.candidates(stage)
                if not found:
                    break
                for t in found:
                    sb.amalgamate(t)
                sb.expand()
                count += 1
            rounds.append(count)
        logger.info("spine stage %d radius %d: %d core vertices, rounds %s", k, radius, len(sb.builder), rounds)
        return SpineService._finish(sb, k, with_gadgets, rounds)

    @staticmethod
    def _finish(sb: _SpineBuilder, k: int, with_gadgets: bool, rounds: List[int]) -> SpineBall:
        records = sb.builder.records
        order = sorted(range(len(records)), key=lambda v: _shortlex(records[v].address))
        new = {old: i for i, old in enumerate(order)}
        copy_ids = {c: i for i, c in enumerate(sorted(sb.copy_roots,
                                                        key=lambda c: _shortlex(records[sb.copy_roots[c]].address)))}
        ray_ids = {r: i for i, r in enumerate(sorted(sb.rays, key=lambda r: _shortlex(records[sb.rays[r][0]].address)))}
        builder = TreeBuilder()
        for old in order:
            rec = records[old]
            frontier = sb.dist[old] >= sb.radius or old in sb.truncated
            builder.add_vertex(VertexRecord(
                rec.kind, rec.address, label=rec.label, amalgamated=rec.amalgamated, frontier=frontier,
                copy=copy_ids[rec.copy], ray=None if rec.ray is None else ray_ids[rec.ray],
                ray_index=rec.ray_index,
            ))
        for a, b in sb.builder.edges:
            builder.add_edge(new[a], new[b])
        core = len(builder)
        if with_gadgets:
            for v in range(core):
                GadgetService.attach(builder, v, GadgetSpec.for_label(builder.records[v].label), LABEL_TAG)
        tree = builder.build(root=0)
        return SpineBall(
            tree=tree,
            stage=k,
            centre=0,
            radius=sb.radius,
            maxlabel=sb.maxlabel,
            copies={copy_ids[c]: new[v] for c, v in sb.copy_roots.items()},
            rays={ray_ids[r]: {i: new[v] for i, v in members.items()} for r, members in sb.rays.items()},
            heights={new[v]: sb.ghth[v] for v in range(core)},
            depth={new[v]: sb.dist[v] for v in range(core)},
            rounds=rounds,
        )

    @staticmethod
    def entry_vertex(sb: SpineBall, v: int, w: int) -> int:
        """First vertex of P_{v,w} in the copy of w."""
        copy = sb.copy_of(w)
        return next(x for x in sb.tree.path(v, w) if sb.copy_of(x) == copy)

    @staticmethod
    def ghth(sb: SpineBall, v: int, w: int) -> int:
        return max(sb.tree.records[x].label for x in sb.tree.path(v, w))

    @staticmethod
    def gcol(sb: SpineBall, v: int, w: int) -> int:
        entry = SpineService.entry_vertex(sb, v, w)
        if entry == w:
            return 0
        return sb.frame(sb.copy_of(w)).colour(entry, w)

    @staticmethod
    def gsign(sb: SpineBall, v: int, w: int) -> int:
        entry = SpineService.entry_vertex(sb, v, w)
        if entry == w:
            raise UndefinedAtBaseError(f"global sign undefined at copy entry {format_address(sb.tree.records[w].address)}")
        return sb.frame(sb.copy_of(w)).sign(entry, w)

    @staticmethod
    def gspin(sb: SpineBall, v: int, w: int) -> int:
        entry = SpineService.entry_vertex(sb, v, w)
        if entry == w:
            raise UndefinedAtBaseError(f"global spin undefined at copy entry {format_address(sb.tree.records[w].address)}")
        return sb.frame(sb.copy_of(w)).spin(entry, w)

    @staticmethod
    def exception_set(sb: SpineBall, u: int, v: int) -> Set[int]:
        """Label-0 vertices reached from P_{u,v} along strictly decreasing labels."""
        tree = sb.tree
        on_path = set(tree.path(u, v))
        result = set()
        for w in sb.label_zero(interior=False):
            p = tree.path(w, u)
            k = next(i for i, x in enumerate(p) if x in on_path)
            labels = [tree.records[x].label for x in reversed(p[:k + 1])]
            if all(a > b for a, b in zip(labels, labels[1:])):
                result.add(w)
        return result

    @staticmethod
    def sample_pairs(sb: SpineBall, count: int, seed: int) -> List[Tuple[int, int]]:
        pool = sb.label_zero()
        rng = np.random.default_rng(seed)
        pairs = []
        while len(pairs) < count and len(pool) > 1:
            a, b = rng.choice(len(pool), size=2, replace=False)
            pairs.append((pool[int(a)], pool[int(b)]))
        return pairs

    @staticmethod
    def verify_global_lemmas(sb: SpineBall, pairs: List[Tuple[int, int]]) -> LemmaReport:
        """
        Global colour preservation off the decreasing-label exception set,
        global spin preservation off P_{u,v}, and the exact domain of the
        global spin.
        """
        tree = sb.tree
        report = LemmaReport("global-lemmas")
        name = lambda x: format_address(tree.records[x].address)  # noqa: E731
        targets = sb.label_zero()

        def spin_or_none(a: int, w: int) -> Optional[int]:
            try:
                return SpineService.gspin(sb, a, w)
            except UndefinedAtBaseError:
                return None

        for u, v in pairs:
            allowed = SpineService.exception_set(sb, u, v)
            between = set(tree.path(u, v))
            for w in targets:
                report.cases += 1
                cu, cv = SpineService.gcol(sb, u, w), SpineService.gcol(sb, v, w)
                if cu != cv:
                    if w in allowed:
                        report.exception(u=name(u), v=name(v), w=name(w), col_u=cu, col_v=cv)
                    else:
                        report.violation(check="gcol", u=name(u), v=name(v), w=name(w), col_u=cu, col_v=cv)
                su, sv = spin_or_none(u, w), spin_or_none(v, w)
                for base, value in ((u, su), (v, sv)):
                    p = tree.path(base, w)
                    excluded = len(p) == 1 or sb.copy_of(p[-2]) != sb.copy_of(w)
                    if excluded != (value is None):
                        report.violation(check="gspin-domain", base=name(base), w=name(w))
                if su is not None and sv is not None and w not in between and su != sv:
                    report.violation(check="gspin", u=name(u), v=name(v), w=name(w), spin_u=su, spin_v=sv)
        report.details["pairs"] = len(pairs)
        return report

    @staticmethod
    def verify_structure(sb: SpineBall) -> LemmaReport:
        """Activation, amalgamation and core-degree invariants."""
        tree = sb.tree
        report = LemmaReport("spine-structure")
        for v in sb.core_vertices():
            rec = tree.records[v]
            if rec.frontier:
                continue
            report.cases += 1
            if rec.kind is Kind.RAY and not sb.is_copy_root(v) and sb.heights[v] > sb.stage:
                report.violation(check="amalgamated-too-high", vertex=format_address(rec.address))
            if rec.kind is Kind.TREE and sb.heights[v] <= sb.stage:
                report.violation(check="not-amalgamated", vertex=format_address(rec.address))
            if rec.kind is Kind.RAY and tree.core_degree(v) != 4:
                report.violation(check="ray-degree", vertex=format_address(rec.address), degree=tree.core_degree(v))
            if rec.kind is Kind.RAY and (rec.ray == 0 or rec.ray_index != 0) and not sb.is_copy_root(v):
                report.violation(check="activation", vertex=format_address(rec.address))
        return report

    @staticmethod
    def degree_census(tree: DecoratedTree, typed: bool = True) -> LemmaReport:
        """Degrees of interior vertices per decoration class, gadgets included."""
        report = LemmaReport("degree-census")
        expected = {"tree": {3}, "copy": {4}, "ray": {6 if typed else 5},
                    "gadget-path": {2}, "gadget-hub": {3, 4}, "gadget-leaf": {1}}
        counts: Counter = Counter()
        for v, rec in enumerate(tree.records):
            if rec.kind is Kind.GADGET:
                if tree.records[rec.anchor].frontier:
                    continue
                part = rec.address[-1][1:]
                cls = "gadget-hub" if part == "h" else "gadget-leaf" if part.startswith("l") else "gadget-path"
            elif rec.frontier:
                continue
            else:
                cls = rec.kind.value
            report.cases += 1
            counts[(cls, tree.degree(v))] += 1
            if tree.degree(v) not in expected[cls]:
                report.violation(vertex=format_address(rec.address), cls=cls, degree=tree.degree(v))
        report.details["classes"] = {f"{cls}:{deg}": n for (cls, deg), n in sorted(counts.items())}
        return report
