"""
Poset Service - Handles fence orders laid over gadgets, D' ray windows and
R-balls, order embeddings and the comparison with graph embeddings
"""

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

import networkx as nx

from .gadget_service import GadgetService, GadgetSpec, ParameterError
from .lemma_report import LemmaReport
from .ray_service import RayService, RayVariant, RayWindow
from .rtree_service import RBall, RTreeService
from .tree_service import (
    DecoratedTree,
    DecorationMatch,
    EmbeddingMap,
    FrontierPolicy,
    Kind,
    TreeService,
    TruncationError,
    format_address,
)

logger = logging.getLogger(__name__)

_GADGET_MOVE = re.compile(r"^([A-Za-z]+?)(\d+|h|l\d+)$")


@dataclass
class PosetOverlay:
    """Covering relation (lower, upper) over the vertices of a tree"""
    base: DecoratedTree
    covers: FrozenSet[Tuple[int, int]]
    disagreements: List[str] = field(default_factory=list)
    _closure: Optional[Set[Tuple[int, int]]] = field(default=None, repr=False)

    def __post_init__(self):
        edges = {frozenset(e) for e in self.base.edges()}
        for a, b in self.covers:
            if frozenset((a, b)) not in edges:
                raise ValueError(f"cover {a} < {b} is not a tree edge")

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.base)))
        g.add_edges_from(self.covers)
        return g

    def is_partial_order(self) -> bool:
        return nx.is_directed_acyclic_graph(self.digraph())

    @property
    def closure(self) -> Set[Tuple[int, int]]:
        if self._closure is None:
            if not self.is_partial_order():
                raise ValueError("covers contain a cycle")
            self._closure = set(nx.transitive_closure_dag(self.digraph()).edges())
        return self._closure

    def less(self, a: int, b: int) -> bool:
        return (a, b) in self.closure

    def to_dot(self, name: str = "P") -> str:
        return TreeService.to_dot(self.base, name=name, arcs=sorted(self.covers))


def gadget_covers(tree: DecoratedTree) -> List[Tuple[int, int]]:
    """Fence covers of every attached gadget: even path vertices low, last path vertex < hub < leaves."""
    covers = []
    for g, rec in enumerate(tree.records):
        if rec.kind is not Kind.GADGET or rec.anchor is None:
            continue
        found = _GADGET_MOVE.match(rec.address[-1])
        if not found:
            continue
        tag, step = found.groups()
        base = tree.records[rec.anchor].address
        if step.isdigit():
            i = int(step)
            prev = rec.anchor if i == 1 else tree.index(base + (f"{tag}{i - 1}",))
            covers.append((prev, g) if (i - 1) % 2 == 0 else (g, prev))
        elif step == "h":
            n = 1
            while tree.find(base + (f"{tag}{n + 1}",)) is not None:
                n += 1
            if n % 2:
                raise ParameterError(f"gadget {tag} at {format_address(base)} has odd pathlen {n}")
            covers.append((tree.index(base + (f"{tag}{n}",)), g))
        else:
            covers.append((tree.index(base + (f"{tag}h",)), g))
    return covers


def _descend(ball: RBall, v: int) -> int:
    tree = ball.tree
    frame = ball.frame()
    while tree.records[v].label > 0:
        lower = tree.records[v].label - 1
        nxt = next((w for w in frame.neighbours(v) if tree.records[w].label == lower), None)
        if nxt is None:
            raise TruncationError(f"nearest tree vertex of {format_address(tree.records[v].address)} "
                                  f"lies outside the ball")
        v = nxt
    return v


def _edge_sign(ball: RBall, w: int, u: int, v: int) -> int:
    frame = ball.frame()
    return frame.sign(w, u) if u != w else frame.sign(w, v)


class PosetService:
    """Service for fence orders and order embeddings"""

    @staticmethod
    def order_gadget(spec: GadgetSpec) -> PosetOverlay:
        """
        Fence order on PK(n, m).

        Args:
            spec: Gadget shape, even pathlen

        Returns:
            PosetOverlay with pathlen + fan + 1 covers
        """
        if spec.pathlen % 2:
            raise ParameterError(f"fence order needs an even pathlen, got {spec.pathlen}")
        tree = GadgetService.build_pk(spec)
        return PosetOverlay(tree, frozenset(gadget_covers(tree)))

    @staticmethod
    def order_r(ball: RBall, reference: Optional[RBall] = None) -> PosetOverlay:
        """
        Orient every core edge of an R-ball.

        An edge rising in label points up from the lower end when the sign
        at the nearest tree vertex is +1; a consecutive pair points down
        from u when the sign at u's nearest tree vertex is +1. Signs are
        read in the reference ball, which must hold every nearest tree vertex.

        Args:
            ball: Ball whose edges are oriented
            reference: Larger ball with the same centre (defaults to ball)

        Returns:
            PosetOverlay; disagreements between the two nearest-tree-vertex
            choices on consecutive pairs are listed on the overlay
        """
        reference = reference or ball
        rtree = reference.tree
        covers = []
        disagreements = []
        for a, b in ball.tree.edges():
            ra, rb = ball.tree.records[a], ball.tree.records[b]
            if not (ra.is_core and rb.is_core):
                continue
            u, v = rtree.index(ra.address), rtree.index(rb.address)
            lu, lv = rtree.records[u].label, rtree.records[v].label
            if lu != lv:
                low, high = (u, v) if lu < lv else (v, u)
                w = _descend(reference, low)
                up = _edge_sign(reference, w, low, high) == 1
                lower, upper = (low, high) if up else (high, low)
            else:
                su = reference.frame().sign(_descend(reference, u), u)
                sv = reference.frame().sign(_descend(reference, v), v)
                if su != -sv:
                    disagreements.append(f"{format_address(ra.address)}-{format_address(rb.address)}")
                lower, upper = (v, u) if su == 1 else (u, v)
            ids = {u: a, v: b}
            covers.append((ids[lower], ids[upper]))
        overlay = PosetOverlay(ball.tree, frozenset(covers), disagreements)
        if disagreements:
            logger.warning("order_r: %d consecutive pairs with disagreeing orientations", len(disagreements))
        return overlay

    @staticmethod
    def order_ray(window: RayWindow) -> PosetOverlay:
        """Fence on a D' window: even indices below their odd neighbours, gadgets fenced from their roots."""
        if window.variant is not RayVariant.POSET:
            raise ParameterError("fence order is defined on the poset ray variant")
        tree = window.tree
        covers = []
        for j in range(window.lo, window.hi):
            a, b = window.vertex(j), window.vertex(j + 1)
            covers.append((a, b) if j % 2 == 0 else (b, a))
        covers.extend(gadget_covers(tree))
        return PosetOverlay(tree, frozenset(covers))

    @staticmethod
    def flip_cover(overlay: PosetOverlay, pair: Tuple[int, int]) -> PosetOverlay:
        if pair not in overlay.covers:
            raise ValueError(f"{pair} is not a cover")
        covers = (set(overlay.covers) - {pair}) | {(pair[1], pair[0])}
        return PosetOverlay(overlay.base, frozenset(covers))

    @staticmethod
    def iter_order_embeddings(guest: PosetOverlay, host: PosetOverlay, rooted: bool,
                              match: DecorationMatch = DecorationMatch.KIND) -> Iterator[EmbeddingMap]:
        """
        Injective maps preserving and reflecting the order, with twin leaves
        mapped in increasing order.
        """
        g, h = guest.base, host.base
        gless, hless = guest.closure, host.closure
        up: Dict[int, List[int]] = {y: [] for y in range(len(h))}
        down: Dict[int, List[int]] = {y: [] for y in range(len(h))}
        for a, b in sorted(hless):
            up[a].append(b)
            down[b].append(a)
        start = g.root if rooted else TreeService._anchor(g)
        order, parent = [start], {start: None}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for n in g.adjacency[x]:
                if n not in parent:
                    parent[n] = x
                    order.append(n)
                    queue.append(n)
        twins = TreeService.twin_keys(g, match)
        earlier_twin: Dict[int, int] = {}
        seen: Dict[str, int] = {}
        for x in order:
            if x in twins:
                if twins[x] in seen:
                    earlier_twin[x] = seen[twins[x]]
                seen[twins[x]] = x
        starts = [h.root] if rooted else list(range(len(h)))

        def extend(i: int, mapping: Dict[int, int], used: Set[int]) -> Iterator[Dict[int, int]]:
            if i == len(order):
                yield dict(mapping)
                return
            x = order[i]
            p = parent[x]
            if p is None:
                candidates = starts
            else:
                candidates = up[mapping[p]] if (p, x) in gless else down[mapping[p]]
            for c in candidates:
                if c in used or not TreeService.compatible(g.records[x], h.records[c], match):
                    continue
                if x in earlier_twin and c < mapping[earlier_twin[x]]:
                    continue
                if any(((a, x) in gless) != ((y, c) in hless) or ((x, a) in gless) != ((c, y) in hless)
                       for a, y in mapping.items()):
                    continue
                mapping[x] = c
                used.add(c)
                yield from extend(i + 1, mapping, used)
                used.discard(c)
                del mapping[x]

        for pairs in extend(0, {}, set()):
            yield EmbeddingMap(pairs, rooted)

    @staticmethod
    def order_embeds(guest: PosetOverlay, host: PosetOverlay, rooted: bool,
                     match: DecorationMatch = DecorationMatch.KIND) -> Optional[EmbeddingMap]:
        return next(PosetService.iter_order_embeddings(guest, host, rooted, match), None)

    @staticmethod
    def hasse_automorphisms(overlay: PosetOverlay, match: DecorationMatch = DecorationMatch.FULL) -> List[EmbeddingMap]:
        """Graph self-embeddings that keep every cover pointing the same way."""
        covers = overlay.covers

        def keeps_direction(g: int, gc: int, h: int, hc: int) -> bool:
            return ((g, gc) in covers) == ((h, hc) in covers)

        tree = overlay.base
        return list(TreeService.iter_embeddings(tree, tree, rooted=False, policy=FrontierPolicy.CLOSED,
                                                match=match, arc_check=keeps_direction))

    @staticmethod
    def _compare(report: LemmaReport, name: str, graph: Set[frozenset], order: Set[frozenset]):
        report.cases += 1
        if graph != order:
            report.violation(pair=name, graph_only=len(graph - order), order_only=len(order - graph))

    @staticmethod
    def reversed_covers(guest: PosetOverlay, host: PosetOverlay, pairs: Dict[int, int]) -> List[Tuple[int, int]]:
        """Guest covers whose image is a host cover pointing the other way."""
        return sorted((a, b) for a, b in guest.covers if (pairs[b], pairs[a]) in host.covers)

    @staticmethod
    def gadget_monoids(pathlens=range(2, 13, 2), fans=range(1, 5)) -> LemmaReport:
        """
        Rooted graph against order embeddings over every ordered pair of
        fenced gadgets. A fan-1 gadget also embeds into longer paths, where
        its hub -> leaf cover lands on a falling path step; those maps are
        listed as exceptions.
        """
        report = LemmaReport("gadgets")
        specs = [GadgetSpec(n, m) for n in pathlens for m in fans]
        overlays = {spec: PosetService.order_gadget(spec) for spec in specs}
        for a, b in product(specs, repeat=2):
            ga, gb = overlays[a].base, overlays[b].base
            name = f"PK({a.pathlen},{a.fan})->PK({b.pathlen},{b.fan})"
            graph = {e.key() for e in TreeService.iter_embeddings(ga, gb, rooted=True)}
            order = {e.key() for e in PosetService.iter_order_embeddings(overlays[a], overlays[b], rooted=True)}
            report.cases += 1
            if order - graph:
                report.violation(pair=name, order_only=len(order - graph))
            for key in sorted(graph - order, key=sorted):
                flipped = PosetService.reversed_covers(overlays[a], overlays[b], dict(key))
                moves = [[ga.records[v].address[-1] for v in pair] for pair in flipped]
                if a.fan == 1 and b.pathlen > a.pathlen and len(moves) == 1 and moves[0][0].endswith("h"):
                    report.exception(check="fan-one", pair=name, reversed=moves[0])
                else:
                    report.violation(pair=name, graph_only=moves)
        return report

    @staticmethod
    def ray_monoids(sib_count: int = 3, halfwidth: int = 8, guest_halfwidth: int = 4) -> LemmaReport:
        report = LemmaReport("ray-windows")
        for s, s2 in product(range(sib_count), repeat=2):
            guest = PosetService.order_ray(RayService.build_ray(s, -guest_halfwidth, guest_halfwidth, RayVariant.POSET))
            host = PosetService.order_ray(RayService.build_ray(s2, -halfwidth, halfwidth, RayVariant.POSET))
            graph = {e.key() for e in TreeService.iter_embeddings(guest.base, host.base, rooted=False,
                                                                   match=DecorationMatch.KIND)}
            order = {e.key() for e in PosetService.iter_order_embeddings(guest, host, rooted=False)}
            PosetService._compare(report, f"D'{s}->D'{s2}", graph, order)
            report.details[f"D'{s}->D'{s2}"] = len(graph)
        return report

    @staticmethod
    def sign_changes(ball: RBall, pairs: Dict[int, int]) -> Tuple[int, int]:
        """(kept, reversed) branch signs over interior tree vertices and their copy neighbours."""
        frame = ball.frame()
        kept = flipped = 0
        for w in ball.tree_vertices():
            if w not in pairs:
                continue
            for n in frame.neighbours(w):
                if n not in pairs:
                    continue
                if frame.branch(w, n) == frame.branch(pairs[w], pairs[n]):
                    kept += 1
                else:
                    flipped += 1
        return kept, flipped

    @staticmethod
    def compare_rball(ball: RBall, overlay: PosetOverlay) -> LemmaReport:
        """
        Rooted graph self-embeddings of the ball against order self-embeddings.

        Sign-preserving graph maps must be order embeddings. Maps reversing
        every sign (the swap at r) must reverse every cover instead and are
        listed as exceptions. Mixed maps and order-only maps are violations.
        """
        report = LemmaReport("r-ball")
        for pair in overlay.disagreements:
            report.violation(check="unisign", edge=pair)
        report.cases += 1
        if not overlay.is_partial_order() or len(overlay.covers) != len(ball.tree.edges()):
            report.violation(check="orientation", covers=len(overlay.covers))
        name = lambda v: format_address(ball.tree.records[v].address)  # noqa: E731
        graph = {e.key() for e in TreeService.iter_embeddings(ball.tree, ball.tree, rooted=True)}
        order = {e.key() for e in PosetService.iter_order_embeddings(overlay, overlay, rooted=True,
                                                                      match=DecorationMatch.FULL)}
        for key in sorted(order - graph, key=sorted):
            report.cases += 1
            report.violation(check="order-only", size=len(key))
        for key in sorted(graph, key=sorted):
            pairs = dict(key)
            kept, flipped = PosetService.sign_changes(ball, pairs)
            report.cases += 1
            if flipped == 0:
                if key not in order:
                    report.violation(check="graph-only", size=len(pairs))
                continue
            if kept:
                report.violation(check="mixed-sign", kept=kept, reversed=flipped)
                continue
            if key in order:
                report.violation(check="sign-reversing-order-embedding", size=len(pairs))
                continue
            unreversed = [(a, b) for a, b in overlay.covers if (pairs[b], pairs[a]) not in overlay.covers]
            if unreversed:
                report.violation(check="not-order-reversing", covers=[[name(a), name(b)] for a, b in unreversed])
            else:
                report.exception(check="sign-reversing", size=len(pairs))
        report.details["graph"] = len(graph)
        report.details["order"] = len(order)
        return report

    @staticmethod
    def rball_monoids(radius: int = 5) -> LemmaReport:
        """Ordered R-ball of the given radius, signs read in the ball of twice the radius."""
        ball = RTreeService.build_rball(radius)
        overlay = PosetService.order_r(ball, RTreeService.build_rball(2 * radius))
        return PosetService.compare_rball(ball, overlay)

    @staticmethod
    def negative_control(radius: int = 3) -> LemmaReport:
        """A flipped cover must separate graph and order embeddings, on a gadget and on an R-ball."""
        report = LemmaReport("negative-control", cases=2)
        overlay = PosetService.order_gadget(GadgetSpec(2, 2))
        flipped = PosetService.flip_cover(overlay, min(overlay.covers))
        graph = {e.key() for e in TreeService.iter_embeddings(overlay.base, flipped.base, rooted=True)}
        order = {e.key() for e in PosetService.iter_order_embeddings(overlay, flipped, rooted=True)}
        report.details["gadget"] = graph != order

        ball = RTreeService.build_rball(radius)
        ordered = PosetService.order_r(ball, RTreeService.build_rball(2 * radius))
        report.details["r-ball"] = not PosetService.compare_rball(
            ball, PosetService.flip_cover(ordered, max(ordered.covers))).passed

        report.details["detected"] = report.details["gadget"] and report.details["r-ball"]
        for domain in ("gadget", "r-ball"):
            if not report.details[domain]:
                report.violation(check="undetected", domain=domain)
        return report

    @staticmethod
    def monoid_equality_check(domain: str, sib_count: int = 3, halfwidth: int = 8, radius: int = 5) -> LemmaReport:
        """
        Graph and order embeddings on one domain.

        Args:
            domain: "gadgets", "ray-windows", "r-ball" or "negative-control"
            sib_count: Ray families compared
            halfwidth: Host ray window halfwidth
            radius: R-ball radius

        Returns:
            LemmaReport with one case per compared pair
        """
        if domain == "gadgets":
            return PosetService.gadget_monoids()
        if domain == "ray-windows":
            return PosetService.ray_monoids(sib_count, halfwidth)
        if domain == "r-ball":
            return PosetService.rball_monoids(radius)
        if domain == "negative-control":
            return PosetService.negative_control()
        raise ValueError(f"unknown domain {domain}")
