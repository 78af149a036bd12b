"""
R-Tree Service - Handles truncations of the labelled tree (R, r) and its
colour, height, sign and spin calculus
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Set

from .gadget_service import GadgetService, GadgetSpec
from .lemma_report import LemmaReport
from .tree_service import (
    DecoratedTree,
    Kind,
    TreeBuilder,
    TreeService,
    TruncationError,
    VertexRecord,
    format_address,
)

logger = logging.getLogger(__name__)

LABEL_TAG = "L"


class UndefinedAtBaseError(ValueError):
    """Raised when sign or spin is requested where it is undefined"""


def child_labels(label: int, parent_label: Optional[int], is_root: bool) -> List[int]:
    """Labels of the children of a vertex, ascending; the parent is excluded."""
    if is_root:
        return [1, 1]
    if label == 0:
        return [1]
    return sorted({label - 1, label, label + 1} - {parent_label})


def path_parity(tree: DecoratedTree, path: List[int]) -> int:
    """(-1) ** (consecutive pairs + label-0 vertices) along a path."""
    labels = [tree.records[v].label for v in path]
    pairs = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    zeros = sum(1 for a in labels if a == 0)
    return -1 if (pairs + zeros) % 2 else 1


@dataclass(frozen=True)
class SignContext:
    """Orientation of the two copy neighbours of a base tree vertex"""
    base: int
    orientation: Dict[int, int]


class CopyFrame:
    """Label calculus inside one copy of R"""

    def __init__(self, tree: DecoratedTree, root: int, copy: int):
        self.tree = tree
        self.root = root
        self.copy = copy
        self._orientation: Dict[int, Dict[int, int]] = {}

    def contains(self, v: int) -> bool:
        return self.tree.records[v].copy == self.copy

    def neighbours(self, v: int) -> List[int]:
        return [w for w in self.tree.adjacency[v] if self.tree.records[w].copy == self.copy]

    def path(self, u: int, v: int) -> List[int]:
        p = self.tree.path(u, v)
        if not all(self.contains(w) for w in p):
            raise ValueError(f"path {format_address(self.tree.records[u].address)} -> "
                             f"{format_address(self.tree.records[v].address)} leaves copy {self.copy}")
        return p

    def label(self, v: int) -> int:
        return self.tree.records[v].label

    def colour(self, v: int, u: int) -> int:
        if u == v:
            return 0
        p = self.path(v, u)
        for a, b in zip(reversed(p[:-1]), reversed(p[1:])):
            if self.label(a) == self.label(b):
                return self.label(a)
        raise ValueError(f"no consecutive pair between {format_address(self.tree.records[v].address)} "
                         f"and {format_address(self.tree.records[u].address)}")

    def height(self, v: int, w: int) -> int:
        return max(self.label(x) for x in self.path(v, w))

    def orientation(self, base: int) -> Dict[int, int]:
        cached = self._orientation.get(base)
        if cached is not None:
            return cached
        result: Dict[int, int] = {}
        if base == self.root:
            for w in self.neighbours(base):
                move = self.tree.records[w].address[-1]
                if move == "c0":
                    result[w] = 1
                elif move == "c1":
                    result[w] = -1
        else:
            p = self.path(self.root, base)
            toward = p[-2]
            s = self.branch(self.root, p[1]) * path_parity(self.tree, p)
            for w in self.neighbours(base):
                result[w] = s if w == toward else -s
        self._orientation[base] = result
        return result

    def branch(self, base: int, neighbour: int) -> int:
        value = self.orientation(base).get(neighbour)
        if value is None:
            raise TruncationError(f"orientation at {format_address(self.tree.records[base].address)} "
                                  f"is not materialized")
        return value

    def sign(self, base: int, u: int) -> int:
        if u == base:
            raise UndefinedAtBaseError("sign is undefined at its base vertex")
        return self.branch(base, self.path(base, u)[1])

    def spin(self, base: int, u: int) -> int:
        if u == base:
            raise UndefinedAtBaseError("spin is undefined at its base vertex")
        p = self.path(base, u)
        return self.branch(base, p[1]) * path_parity(self.tree, p)


@dataclass
class RBall:
    """Truncation of (R, r) around its centre"""
    tree: DecoratedTree
    centre: int
    radius: int
    maxlabel: Optional[int] = None
    with_gadgets: bool = False
    _frame: Optional[CopyFrame] = field(default=None, repr=False)

    def frame(self) -> CopyFrame:
        """The ball is a single copy of R, numbered 0."""
        if self._frame is None:
            self._frame = CopyFrame(self.tree, self.centre, 0)
        return self._frame

    def copy_of(self, v: int) -> Optional[int]:
        return self.tree.records[v].copy

    def tree_vertices(self, interior: bool = True) -> List[int]:
        return [v for v, rec in enumerate(self.tree.records)
                if rec.kind is Kind.TREE and not (interior and rec.frontier)]

    def interior(self, v: int) -> bool:
        return not self.tree.records[v].frontier


class RTreeService:
    """Service for R-ball construction and local lemma checks"""

    @staticmethod
    def build_rball(radius: int, maxlabel: Optional[int] = None, with_gadgets: bool = False) -> RBall:
        """
        Build the ball of the given radius around r.

        Args:
            radius: Graph distance bound, gadgets excluded
            maxlabel: Labels above this are not materialized
            with_gadgets: Attach PK(2l+6, 2) to every core vertex

        Returns:
            RBall with centre at vertex 0
        """
        if radius < 1:
            raise ValueError("radius must be >= 1")
        builder = TreeBuilder()
        centre = builder.add_vertex(VertexRecord(Kind.TREE, (), label=0, copy=0))
        queue = deque([(centre, 0, None)])
        while queue:
            v, dist, parent_label = queue.popleft()
            rec = builder.records[v]
            if dist == radius:
                builder.mark_frontier(v)
                continue
            for i, lab in enumerate(child_labels(rec.label, parent_label, v == centre)):
                if maxlabel is not None and lab > maxlabel:
                    builder.mark_frontier(v)
                    continue
                kind = Kind.TREE if lab == 0 else Kind.COPY
                w = builder.add_child(v, VertexRecord(kind, rec.address + (f"c{i}",), label=lab, copy=0))
                queue.append((w, dist + 1, rec.label))
        if with_gadgets:
            for v in range(len(builder)):
                GadgetService.attach(builder, v, GadgetSpec.for_label(builder.records[v].label), LABEL_TAG)
        ball = RBall(builder.build(root=centre), centre, radius, maxlabel, with_gadgets)
        logger.debug("built R-ball radius %d: %d vertices", radius, len(ball.tree))
        return ball

    @staticmethod
    def vertex_count(radius: int, maxlabel: Optional[int] = None) -> int:
        """Size of the core ball of the given radius, counted from the label rule alone."""
        @lru_cache(maxsize=None)
        def below(label: int, parent_label: int, remaining: int) -> int:
            if remaining == 0:
                return 1
            total = 1
            for lab in child_labels(label, parent_label, False):
                if maxlabel is None or lab <= maxlabel:
                    total += below(lab, label, remaining - 1)
            return total

        if radius < 1:
            raise ValueError("radius must be >= 1")
        children = [lab for lab in child_labels(0, None, True) if maxlabel is None or lab <= maxlabel]
        return 1 + sum(below(lab, 0, radius - 1) for lab in children)

    @staticmethod
    def lab_check(ball: RBall) -> LemmaReport:
        """Stored label against distance to the nearest core-degree-2 vertex."""
        tree = ball.tree
        report = LemmaReport("label-reconstruct")
        depth = tree.distances_from(ball.centre, allowed=lambda w: tree.records[w].is_core)
        is_core = lambda w: tree.records[w].is_core  # noqa: E731
        degree_two = lambda w: not tree.records[w].frontier and tree.core_degree(w) == 2  # noqa: E731
        for v in tree.core_vertices():
            rec = tree.records[v]
            if rec.frontier or depth[v] + rec.label >= ball.radius:
                continue
            report.cases += 1
            found = TreeService.dist_to_predicate(tree, v, degree_two, allowed=is_core)
            if found != rec.label:
                report.violation(vertex=format_address(rec.address), label=rec.label, distance=found)
        return report

    @staticmethod
    def colour(ball: RBall, v: int, u: int) -> int:
        return ball.frame().colour(v, u)

    @staticmethod
    def height(ball: RBall, v: int, w: int) -> int:
        return ball.frame().height(v, w)

    @staticmethod
    def sign_context(ball: RBall, base: int) -> SignContext:
        return SignContext(base, dict(ball.frame().orientation(base)))

    @staticmethod
    def sign(ball: RBall, ctx: SignContext, u: int) -> int:
        if u == ctx.base:
            raise UndefinedAtBaseError("sign is undefined at its base vertex")
        return ctx.orientation[ball.tree.path(ctx.base, u)[1]]

    @staticmethod
    def spin(ball: RBall, ctx: SignContext, u: int) -> int:
        p = ball.tree.path(ctx.base, u)
        return RTreeService.sign(ball, ctx, u) * path_parity(ball.tree, p)

    @staticmethod
    def exception_set(ball: RBall, u: int, v: int) -> Set[int]:
        """Tree vertices reached from P_{u,v} along strictly decreasing labels."""
        tree = ball.tree
        on_path = set(tree.path(u, v))
        result = set()
        for w in ball.tree_vertices(interior=False):
            p = tree.path(w, u)
            k = next(i for i, x in enumerate(p) if x in on_path)
            labels = [tree.records[x].label for x in reversed(p[:k + 1])]
            if all(a > b for a, b in zip(labels, labels[1:])):
                result.add(w)
        return result

    @staticmethod
    def verify_colpreserv(ball: RBall, u: int, v: int) -> LemmaReport:
        frame = ball.frame()
        report = LemmaReport("colour-lemma")
        allowed = RTreeService.exception_set(ball, u, v)
        for w in ball.tree_vertices():
            report.cases += 1
            cu, cv = frame.colour(u, w), frame.colour(v, w)
            if cu == cv:
                continue
            address = format_address(ball.tree.records[w].address)
            if w in allowed:
                report.exception(vertex=address, col_u=cu, col_v=cv)
            else:
                report.violation(u=format_address(ball.tree.records[u].address),
                                 v=format_address(ball.tree.records[v].address),
                                 vertex=address, col_u=cu, col_v=cv)
        return report

    @staticmethod
    def verify_colour_sweep(ball: RBall) -> LemmaReport:
        report = LemmaReport("colour-lemma")
        tree_vertices = ball.tree_vertices()
        for u in tree_vertices:
            for v in tree_vertices:
                if u != v:
                    report.merge(RTreeService.verify_colpreserv(ball, u, v))
        report.details["pairs"] = len(tree_vertices) * (len(tree_vertices) - 1)
        return report

    @staticmethod
    def verify_hthpreserv(ball: RBall) -> LemmaReport:
        frame = ball.frame()
        report = LemmaReport("height-preservation")
        tree_vertices = ball.tree_vertices()
        for u in tree_vertices:
            for v in tree_vertices:
                huv = frame.height(u, v)
                for w in tree_vertices:
                    hu, hv = frame.height(u, w), frame.height(v, w)
                    if min(hu, hv) < huv:
                        continue
                    report.cases += 1
                    if hu != hv:
                        report.violation(u=u, v=v, w=w, hth_u=hu, hth_v=hv)
        return report

    @staticmethod
    def verify_spin_lemmas(ball: RBall) -> LemmaReport:
        """
        Check the three spin-preservation clauses against the centre and the
        pairwise corollary, including its meeting-point exception.
        """
        frame = ball.frame()
        r = ball.centre
        tree = ball.tree
        report = LemmaReport("spin-lemmas")
        tv = ball.tree_vertices()
        name = lambda x: format_address(tree.records[x].address)  # noqa: E731

        for v in tv:
            if v == r:
                continue
            on_path = set(tree.path(r, v))
            report.cases += 1
            if frame.spin(v, r) != frame.sign(r, v):
                report.violation(clause="base", v=name(v))
            for w in tv:
                if w in (r, v):
                    continue
                report.cases += 1
                expected = -frame.spin(r, w) if w in on_path else frame.spin(r, w)
                if frame.spin(v, w) != expected:
                    report.violation(clause="on-path" if w in on_path else "off-path", v=name(v), w=name(w))

        for u in tv:
            for v in tv:
                if u == v:
                    continue
                between = set(tree.path(u, v))
                meet = set(tree.path(r, u)) & set(tree.path(r, v))
                for w in tv:
                    if w in (u, v):
                        continue
                    report.cases += 1
                    su, sv = frame.spin(u, w), frame.spin(v, w)
                    if w not in between:
                        if su != sv:
                            report.violation(clause="corollary-off", u=name(u), v=name(v), w=name(w))
                    elif w != r and meet == set(tree.path(r, w)):
                        report.exception(u=name(u), v=name(v), w=name(w))
                        if su != sv:
                            report.violation(clause="corollary-meeting", u=name(u), v=name(v), w=name(w))
                    elif su != -sv:
                        report.violation(clause="corollary-on", u=name(u), v=name(v), w=name(w))
        return report

    @staticmethod
    def unimodal_partner(ball: RBall, start: int, first: int, peak: int) -> Optional[List[int]]:
        """Follow labels 0 1 .. peak peak .. 1 0 from start through first."""
        frame = ball.frame()
        walk = [start, first]
        step = lambda v, lab, prev: next(  # noqa: E731
            (w for w in frame.neighbours(v) if frame.label(w) == lab and w != prev), None)
        current = first
        for lab in list(range(2, peak + 1)) + [peak] + list(range(peak - 1, -1, -1)):
            nxt = step(current, lab, walk[-2])
            if nxt is None:
                return None
            walk.append(nxt)
            current = nxt
        return walk

    @staticmethod
    def verify_unisign(ball: RBall, max_peak: int = 3) -> LemmaReport:
        frame = ball.frame()
        report = LemmaReport("unisign")
        for w1 in ball.tree_vertices():
            for first in frame.neighbours(w1):
                for peak in range(1, max_peak + 1):
                    walk = RTreeService.unimodal_partner(ball, w1, first, peak)
                    if walk is None:
                        continue
                    w2 = walk[-1]
                    report.cases += 1
                    if frame.sign(w1, w2) != -frame.sign(w2, w1):
                        report.violation(w1=format_address(ball.tree.records[w1].address),
                                         w2=format_address(ball.tree.records[w2].address), peak=peak)
        return report

    @staticmethod
    def verify_homogeneity(ball: RBall, inner: int = 2) -> LemmaReport:
        """Rooted balls of radius inner around interior tree vertices agree with the one around r."""
        tree = ball.tree
        report = LemmaReport("homogeneity")
        depth = tree.distances_from(ball.centre, allowed=lambda w: tree.records[w].is_core)

        def code(v: int) -> bytes:
            near = tree.distances_from(v, limit=inner, allowed=lambda w: tree.records[w].is_core)
            sub = TreeService.core_subtree(tree, keep=lambda w: w in near)
            return TreeService.canonical_form(TreeService.reroot(sub, sub.index(tree.records[v].address)), True)

        reference = code(ball.centre)
        for v in ball.tree_vertices():
            if depth[v] + inner >= ball.radius:
                continue
            report.cases += 1
            if code(v) != reference:
                report.violation(vertex=format_address(tree.records[v].address))
        return report
