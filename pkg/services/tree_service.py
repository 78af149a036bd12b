"""
Tree Service - Handles decorated finite trees, canonical forms, isomorphism and embeddings
"""

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms import bipartite

logger = logging.getLogger(__name__)

Address = Tuple[str, ...]


class TreeStructureError(ValueError):
    """Raised when a tree violates a structural invariant"""


class TruncationError(LookupError):
    """Raised when a query needs a vertex that is not materialized"""


class Kind(str, Enum):
    TREE = "tree"
    COPY = "copy"
    RAY = "ray"
    GADGET = "gadget"


class FrontierPolicy(str, Enum):
    CLOSED = "closed"
    OPEN = "open"


class DecorationMatch(str, Enum):
    FULL = "full"
    KIND = "kind"
    NONE = "none"


_KIND_LETTER = {Kind.TREE: "t", Kind.COPY: "c", Kind.RAY: "r", Kind.GADGET: "g"}


@dataclass(frozen=True)
class VertexRecord:
    """Decorations of one vertex"""
    kind: Kind
    address: Address
    label: Optional[int] = None
    raytype: Optional[int] = None
    amalgamated: bool = False
    frontier: bool = False
    copy: Optional[int] = None
    ray: Optional[int] = None
    ray_index: Optional[int] = None
    anchor: Optional[int] = None

    def token(self) -> str:
        label = "-" if self.label is None else str(self.label)
        raytype = "-" if self.raytype is None else str(self.raytype)
        return f"{_KIND_LETTER[self.kind]}{label}:{raytype}"

    @property
    def is_core(self) -> bool:
        return self.kind is not Kind.GADGET


def format_address(address: Address) -> str:
    return "/".join(address) if address else "."


def parse_address(text: str) -> Address:
    return () if text in ("", ".") else tuple(text.split("/"))


def _check_record(v: int, rec: VertexRecord):
    if rec.kind is Kind.TREE and rec.label != 0:
        raise TreeStructureError(f"tree vertex {v} must have label 0")
    if rec.kind is Kind.COPY and (rec.label is None or rec.label < 1):
        raise TreeStructureError(f"copy vertex {v} must have label >= 1")
    if rec.kind is Kind.RAY and rec.label != 0:
        raise TreeStructureError(f"ray vertex {v} must have label 0")
    if rec.kind is Kind.GADGET and (rec.label is not None or rec.raytype is not None):
        raise TreeStructureError(f"gadget vertex {v} carries a decoration")
    if rec.raytype not in (None, 0, 1):
        raise TreeStructureError(f"vertex {v} has raytype {rec.raytype}")


class DecoratedTree:
    """Immutable finite tree with per-vertex decorations"""

    def __init__(self, records: Sequence[VertexRecord], edges: Iterable[Tuple[int, int]],
                 root: Optional[int] = None, validate: bool = True):
        self.records: Tuple[VertexRecord, ...] = tuple(records)
        n = len(self.records)
        adjacency: List[List[int]] = [[] for _ in range(n)]
        count = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise TreeStructureError(f"edge ({u}, {v}) references a missing vertex")
            if u == v:
                raise TreeStructureError(f"self-loop at {u}")
            adjacency[u].append(v)
            adjacency[v].append(u)
            count += 1
        self.adjacency: Tuple[Tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in adjacency)
        self.root = root
        if validate:
            self._validate(count)
        self._by_address: Dict[Address, int] = {rec.address: v for v, rec in enumerate(self.records)}
        self._parent: List[int] = []
        self._depth: List[int] = []
        self._index_tree()

    def _validate(self, edge_count: int):
        n = len(self.records)
        if n == 0:
            raise TreeStructureError("empty tree")
        if edge_count != n - 1:
            raise TreeStructureError(f"{n} vertices need {n - 1} edges, got {edge_count}")
        for v, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs):
                raise TreeStructureError(f"parallel edges at {v}")
        if self.root is not None and not 0 <= self.root < n:
            raise TreeStructureError(f"root {self.root} is not a vertex")
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != n:
            raise TreeStructureError("tree is disconnected")
        if len({rec.address for rec in self.records}) != n:
            raise TreeStructureError("addresses are not unique")
        for v, rec in enumerate(self.records):
            _check_record(v, rec)

    def _index_tree(self):
        n = len(self.records)
        start = self.root if self.root is not None else 0
        self._parent = [-1] * n
        self._depth = [0] * n
        self._parent[start] = start
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if self._parent[w] == -1:
                    self._parent[w] = u
                    self._depth[w] = self._depth[u] + 1
                    queue.append(w)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, v: int) -> VertexRecord:
        return self.records[v]

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def core_degree(self, v: int) -> int:
        return sum(1 for w in self.adjacency[v] if self.records[w].is_core)

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, w) for u, nbrs in enumerate(self.adjacency) for w in nbrs if u < w]

    def find(self, address: Address) -> Optional[int]:
        return self._by_address.get(tuple(address))

    def index(self, address: Address) -> int:
        v = self.find(address)
        if v is None:
            raise TruncationError(f"address {format_address(address)} is not materialized")
        return v

    def children(self, v: int, parent: Optional[int]) -> List[int]:
        return [w for w in self.adjacency[v] if w != parent]

    def core_vertices(self) -> List[int]:
        return [v for v, rec in enumerate(self.records) if rec.is_core]

    def path(self, u: int, v: int) -> List[int]:
        """Unique simple path from u to v, both endpoints included."""
        left, right = [u], [v]
        a, b = u, v
        while self._depth[a] > self._depth[b]:
            a = self._parent[a]
            left.append(a)
        while self._depth[b] > self._depth[a]:
            b = self._parent[b]
            right.append(b)
        while a != b:
            a = self._parent[a]
            b = self._parent[b]
            left.append(a)
            right.append(b)
        right.pop()
        return left + right[::-1]

    def distance(self, u: int, v: int) -> int:
        return len(self.path(u, v)) - 1

    def distances_from(self, source: int, limit: Optional[int] = None,
                       allowed: Optional[Callable[[int], bool]] = None) -> Dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            if limit is not None and dist[u] >= limit:
                continue
            for w in self.adjacency[u]:
                if w not in dist and (allowed is None or allowed(w)):
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist


class TreeBuilder:
    """Incremental construction of a DecoratedTree"""

    def __init__(self):
        self.records: List[VertexRecord] = []
        self.edges: List[Tuple[int, int]] = []
        self._index: Dict[Address, int] = {}

    def __len__(self) -> int:
        return len(self.records)

    def add_vertex(self, record: VertexRecord) -> int:
        if record.address in self._index:
            raise TreeStructureError(f"duplicate address {format_address(record.address)}")
        self.records.append(record)
        self._index[record.address] = len(self.records) - 1
        return len(self.records) - 1

    def add_edge(self, u: int, v: int):
        self.edges.append((u, v))

    def add_child(self, parent: int, record: VertexRecord) -> int:
        v = self.add_vertex(record)
        self.add_edge(parent, v)
        return v

    def find(self, address: Address) -> Optional[int]:
        return self._index.get(tuple(address))

    def update(self, v: int, **changes):
        old = self.records[v]
        self.records[v] = replace(old, **changes)
        if self.records[v].address != old.address:
            del self._index[old.address]
            self._index[self.records[v].address] = v

    def mark_frontier(self, v: int, frontier: bool = True):
        self.update(v, frontier=frontier)

    def build(self, root: Optional[int] = 0) -> DecoratedTree:
        return DecoratedTree(self.records, self.edges, root=root)


@dataclass(frozen=True)
class EmbeddingMap:
    """Injective partial map guest vertex -> host vertex"""
    pairs: Dict[int, int]
    rooted: bool = False

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, v: int) -> int:
        return self.pairs[v]

    def __contains__(self, v: int) -> bool:
        return v in self.pairs

    def get(self, v: int, default: Optional[int] = None) -> Optional[int]:
        return self.pairs.get(v, default)

    def key(self) -> frozenset:
        return frozenset(self.pairs.items())

    def then(self, other: "EmbeddingMap") -> "EmbeddingMap":
        """Composition: first self, then other."""
        pairs = {g: other.pairs[h] for g, h in self.pairs.items() if h in other.pairs}
        return EmbeddingMap(pairs, self.rooted and other.rooted)


def _compatible(g: VertexRecord, h: VertexRecord, match: DecorationMatch) -> bool:
    if match is DecorationMatch.NONE:
        return True
    if g.kind is not h.kind:
        return False
    if match is DecorationMatch.KIND:
        return True
    if g.label != h.label:
        return False
    if g.raytype is None or h.raytype is None:
        return g.raytype is None and h.raytype is None
    return g.raytype <= h.raytype


ArcCheck = Callable[[int, int, int, int], bool]


class _Embedder:
    """Recursive bipartite-matching embedder, memoized per call"""

    def __init__(self, guest: DecoratedTree, host: DecoratedTree, policy: FrontierPolicy,
                 match: DecorationMatch, arc_check: Optional[ArcCheck] = None):
        self.guest = guest
        self.host = host
        self.policy = policy
        self.match = match
        self.arc_check = arc_check
        self.memo: Dict[Tuple[int, int, int, int], bool] = {}
        self.twins = TreeService.twin_keys(guest, match)

    def open_at(self, h: int) -> bool:
        return self.policy is FrontierPolicy.OPEN and self.host.records[h].frontier

    def pair_ok(self, g: int, gc: int, h: int, hc: int) -> bool:
        if self.arc_check is not None and not self.arc_check(g, gc, h, hc):
            return False
        return self.feasible(gc, g, hc, h)

    def feasible(self, g: int, gp: Optional[int], h: int, hp: Optional[int]) -> bool:
        key = (g, -1 if gp is None else gp, h, -1 if hp is None else hp)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        result = self._feasible(g, gp, h, hp)
        self.memo[key] = result
        return result

    def _feasible(self, g, gp, h, hp) -> bool:
        if not _compatible(self.guest.records[g], self.host.records[h], self.match):
            return False
        if self.open_at(h):
            return True
        gch = self.guest.children(g, gp)
        hch = self.host.children(h, hp)
        if len(gch) > len(hch):
            return False
        if not gch:
            return True
        if len(gch) == 1:
            return any(self.pair_ok(g, gch[0], h, hc) for hc in hch)
        return self._matching(g, gch, h, hch) is not None

    def _matching(self, g, gch, h, hch) -> Optional[Dict[int, int]]:
        graph = nx.Graph()
        top = [("g", c) for c in gch]
        graph.add_nodes_from(top)
        graph.add_nodes_from(("h", c) for c in hch)
        for gc in gch:
            row = [hc for hc in hch if self.pair_ok(g, gc, h, hc)]
            if not row:
                return None
            graph.add_edges_from((("g", gc), ("h", hc)) for hc in row)
        matching = bipartite.hopcroft_karp_matching(graph, top_nodes=top)
        if any(node not in matching for node in top):
            return None
        return {gc: matching[("g", gc)][1] for gc in gch}

    def extract(self, g: int, gp: Optional[int], h: int, hp: Optional[int], out: Dict[int, int]):
        stack = [(g, gp, h, hp)]
        while stack:
            g, gp, h, hp = stack.pop()
            out[g] = h
            if self.open_at(h):
                continue
            gch = self.guest.children(g, gp)
            if not gch:
                continue
            hch = self.host.children(h, hp)
            if len(gch) == 1:
                hc = next(hc for hc in hch if self.pair_ok(g, gch[0], h, hc))
                stack.append((gch[0], g, hc, h))
                continue
            for gc, hc in self._matching(g, gch, h, hch).items():
                stack.append((gc, g, hc, h))

    def enumerate(self, g: int, gp: Optional[int], h: int, hp: Optional[int]) -> Iterator[Dict[int, int]]:
        if not self.feasible(g, gp, h, hp):
            return
        if self.open_at(h):
            yield {g: h}
            return
        gch = self.guest.children(g, gp)
        # leaves last so twin groups are contiguous
        gch.sort(key=lambda c: (self.twins.get(c) is not None, self.twins.get(c) or "", c))
        hch = self.host.children(h, hp)
        for rest in self._assign(g, gch, 0, h, hch, frozenset(), {}):
            rest[g] = h
            yield rest

    def _assign(self, g, gch, i, h, hch, used, last) -> Iterator[Dict[int, int]]:
        if i == len(gch):
            yield {}
            return
        c = gch[i]
        twin = self.twins.get(c)
        floor = last.get(twin, -1) if twin is not None else -1
        for hc in hch:
            if hc in used or hc <= floor or not self.pair_ok(g, c, h, hc):
                continue
            nxt = dict(last)
            if twin is not None:
                nxt[twin] = hc
            for sub in self.enumerate(c, g, hc, h):
                for rest in self._assign(g, gch, i + 1, h, hch, used | {hc}, nxt):
                    merged = dict(sub)
                    merged.update(rest)
                    yield merged


class TreeService:
    """Service for decorated-tree operations"""

    @staticmethod
    def rooted_code(t: DecoratedTree, root: int) -> str:
        order = [root]
        parent = {root: None}
        for u in order:
            for w in t.adjacency[u]:
                if w not in parent:
                    parent[w] = u
                    order.append(w)
        codes: Dict[int, str] = {}
        for u in reversed(order):
            kids = sorted(codes.pop(w) for w in t.adjacency[u] if w != parent[u])
            codes[u] = "(" + t.records[u].token() + "".join(kids) + ")"
        return codes[root]

    @staticmethod
    def centroids(t: DecoratedTree) -> List[int]:
        n = len(t)
        order = [0]
        parent = {0: -1}
        for u in order:
            for w in t.adjacency[u]:
                if w not in parent:
                    parent[w] = u
                    order.append(w)
        size = [1] * n
        for u in reversed(order):
            if parent[u] >= 0:
                size[parent[u]] += size[u]
        best, result = n, []
        for u in range(n):
            heaviest = n - size[u]
            for w in t.adjacency[u]:
                if w != parent[u]:
                    heaviest = max(heaviest, size[w])
            if heaviest < best:
                best, result = heaviest, [u]
            elif heaviest == best:
                result.append(u)
        return result

    @staticmethod
    def canonical_form(t: DecoratedTree, rooted: bool) -> bytes:
        """
        AHU code with decorations folded in.

        Args:
            t: Tree to encode
            rooted: Encode from t.root instead of the centroid(s)

        Returns:
            Canonical code as bytes
        """
        if rooted:
            if t.root is None:
                raise TreeStructureError("rooted canonical form needs a root")
            return TreeService.rooted_code(t, t.root).encode()
        return min(TreeService.rooted_code(t, c) for c in TreeService.centroids(t)).encode()

    @staticmethod
    def is_isomorphic(a: DecoratedTree, b: DecoratedTree, rooted: bool) -> bool:
        if len(a) != len(b):
            return False
        return TreeService.canonical_form(a, rooted) == TreeService.canonical_form(b, rooted)

    @staticmethod
    def twin_keys(t: DecoratedTree, match: DecorationMatch = DecorationMatch.FULL) -> Dict[int, str]:
        """Leaves sharing a neighbour and equal decorations get the same key."""
        keys = {}
        for v, nbrs in enumerate(t.adjacency):
            if len(nbrs) == 1 and len(t) > 2 and v != t.root:
                rec = t.records[v]
                deco = rec.token() if match is DecorationMatch.FULL else (
                    rec.kind.value if match is DecorationMatch.KIND else "")
                keys[v] = f"{nbrs[0]}|{deco}"
        return keys

    @staticmethod
    def compatible(g: VertexRecord, h: VertexRecord, match: DecorationMatch = DecorationMatch.FULL) -> bool:
        return _compatible(g, h, match)

    @staticmethod
    def _anchor(guest: DecoratedTree) -> int:
        if guest.root is not None and guest.degree(guest.root) > 1:
            return guest.root
        return max(range(len(guest)), key=lambda v: (guest.degree(v), -v))

    @staticmethod
    def find_embedding(guest: DecoratedTree, host: DecoratedTree, rooted: bool,
                       policy: FrontierPolicy = FrontierPolicy.CLOSED,
                       match: DecorationMatch = DecorationMatch.FULL,
                       arc_check: Optional[ArcCheck] = None) -> Optional[EmbeddingMap]:
        """
        Find one injective edge-preserving decoration-compatible map.

        Args:
            guest: Tree to embed
            host: Tree to embed into
            rooted: Map guest.root to host.root
            policy: Treatment of host frontier vertices
            match: Which decorations must agree
            arc_check: Optional filter on (g, g_child, h, h_child) edge images

        Returns:
            EmbeddingMap, or None when no map exists
        """
        engine = _Embedder(guest, host, policy, match, arc_check)
        if rooted:
            if guest.root is None or host.root is None:
                raise TreeStructureError("rooted embedding needs roots on both trees")
            starts = [(guest.root, host.root)]
        else:
            anchor = TreeService._anchor(guest)
            starts = [(anchor, h) for h in range(len(host))]
        for g, h in starts:
            if engine.feasible(g, None, h, None):
                pairs: Dict[int, int] = {}
                engine.extract(g, None, h, None, pairs)
                return EmbeddingMap(pairs, rooted)
        return None

    @staticmethod
    def iter_embeddings(guest: DecoratedTree, host: DecoratedTree, rooted: bool,
                        policy: FrontierPolicy = FrontierPolicy.CLOSED,
                        match: DecorationMatch = DecorationMatch.FULL,
                        arc_check: Optional[ArcCheck] = None) -> Iterator[EmbeddingMap]:
        """All embeddings, one per permutation class of twin leaves."""
        engine = _Embedder(guest, host, policy, match, arc_check)
        if rooted:
            starts = [(guest.root, host.root)]
        else:
            anchor = TreeService._anchor(guest)
            starts = [(anchor, h) for h in range(len(host))]
        for g, h in starts:
            for pairs in engine.enumerate(g, None, h, None):
                yield EmbeddingMap(pairs, rooted)

    @staticmethod
    def check_embedding(guest: DecoratedTree, host: DecoratedTree, mapping: EmbeddingMap,
                        policy: FrontierPolicy = FrontierPolicy.CLOSED,
                        match: DecorationMatch = DecorationMatch.FULL) -> List[str]:
        """Return the list of problems with a proposed map (empty when valid)."""
        problems = []
        pairs = mapping.pairs
        if len(set(pairs.values())) != len(pairs):
            problems.append("map is not injective")
        if mapping.rooted and pairs.get(guest.root) != host.root:
            problems.append("root is not mapped to root")
        for g, h in pairs.items():
            if not _compatible(guest.records[g], host.records[h], match):
                problems.append(f"decorations differ at {format_address(guest.records[g].address)}")
        inner = 0
        for a, b in guest.edges():
            if a in pairs and b in pairs:
                inner += 1
                if pairs[b] not in host.adjacency[pairs[a]]:
                    problems.append(f"edge {format_address(guest.records[a].address)}"
                                    f"-{format_address(guest.records[b].address)} not preserved")
        if pairs and inner != len(pairs) - 1:
            problems.append("mapped part is disconnected")
        for g in range(len(guest)):
            if g in pairs:
                continue
            if policy is FrontierPolicy.CLOSED:
                problems.append(f"{format_address(guest.records[g].address)} is unmapped")
                continue
            for w in guest.adjacency[g]:
                if w in pairs and not host.records[pairs[w]].frontier:
                    problems.append(f"{format_address(guest.records[g].address)} is unmapped "
                                    f"below an interior host vertex")
        return problems

    @staticmethod
    def path(t: DecoratedTree, u: int, v: int) -> List[int]:
        return t.path(u, v)

    @staticmethod
    def dist_to_predicate(t: DecoratedTree, v: int, pred: Callable[[int], bool],
                          allowed: Optional[Callable[[int], bool]] = None):
        """
        BFS distance from v to the nearest vertex satisfying pred.

        Returns:
            Distance, or math.inf when no vertex qualifies
        """
        if pred(v):
            return 0
        dist = {v: 0}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in t.adjacency[u]:
                if w in dist or (allowed is not None and not allowed(w)):
                    continue
                if pred(w):
                    return dist[u] + 1
                dist[w] = dist[u] + 1
                queue.append(w)
        return math.inf

    @staticmethod
    def reroot(t: DecoratedTree, v: int) -> DecoratedTree:
        return DecoratedTree(t.records, t.edges(), root=v, validate=False)

    @staticmethod
    def core_subtree(t: DecoratedTree, keep: Optional[Callable[[int], bool]] = None) -> DecoratedTree:
        """Restrict to core vertices (or to keep), renumbering in id order."""
        keep = keep or (lambda v: t.records[v].is_core)
        ids = [v for v in range(len(t)) if keep(v)]
        new = {v: i for i, v in enumerate(ids)}
        records = []
        for v in ids:
            rec = t.records[v]
            records.append(replace(rec, anchor=new.get(rec.anchor)) if rec.anchor is not None else rec)
        edges = [(new[a], new[b]) for a, b in t.edges() if a in new and b in new]
        root = new.get(t.root) if t.root is not None else None
        return DecoratedTree(records, edges, root=root)

    @staticmethod
    def from_networkx(g: nx.Graph, root=None) -> DecoratedTree:
        nodes = sorted(g.nodes())
        index = {node: i for i, node in enumerate(nodes)}
        records = [VertexRecord(Kind.GADGET, (f"v{node}",)) for node in nodes]
        edges = [(index[a], index[b]) for a, b in g.edges()]
        return DecoratedTree(records, edges, root=None if root is None else index[root])

    @staticmethod
    def to_networkx(t: DecoratedTree) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(t)))
        g.add_edges_from(t.edges())
        return g

    @staticmethod
    def to_json(t: DecoratedTree) -> str:
        vertices = []
        for rec in t.records:
            vertices.append({
                "kind": rec.kind.value,
                "address": list(rec.address),
                "label": rec.label,
                "raytype": rec.raytype,
                "amalgamated": rec.amalgamated,
                "frontier": rec.frontier,
                "copy": rec.copy,
                "ray": rec.ray,
                "ray_index": rec.ray_index,
                "anchor": rec.anchor,
            })
        body = {"root": t.root, "vertices": vertices, "edges": [list(e) for e in t.edges()]}
        return json.dumps(body, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> DecoratedTree:
        body = json.loads(text)
        records = []
        for item in body["vertices"]:
            records.append(VertexRecord(
                kind=Kind(item["kind"]),
                address=tuple(item["address"]),
                label=item.get("label"),
                raytype=item.get("raytype"),
                amalgamated=item.get("amalgamated", False),
                frontier=item.get("frontier", False),
                copy=item.get("copy"),
                ray=item.get("ray"),
                ray_index=item.get("ray_index"),
                anchor=item.get("anchor"),
            ))
        return DecoratedTree(records, [tuple(e) for e in body["edges"]], root=body.get("root"))

    @staticmethod
    def to_dot(t: DecoratedTree, name: str = "T", arcs: Optional[Iterable[Tuple[int, int]]] = None,
               highlight: Iterable[int] = (), groups: Optional[Dict[str, Iterable[int]]] = None) -> str:
        """
        DOT text for a tree.

        Args:
            t: Tree to render
            name: Graph name
            arcs: Directed pairs to draw instead of the undirected tree edges
            highlight: Vertices drawn bold
            groups: Named vertex sets drawn as clusters

        Returns:
            DOT digraph source
        """
        colours = {Kind.TREE: "white", Kind.COPY: "lightblue", Kind.RAY: "gold", Kind.GADGET: "lightgrey"}
        marked = set(highlight)
        lines = [f"digraph {name} {{", "  node [shape=circle, style=filled, fontsize=10];"]
        for v, rec in enumerate(t.records):
            text = "" if rec.label is None else str(rec.label)
            if rec.raytype is not None:
                text += f"|{rec.raytype}"
            attrs = [f'label="{text}"', f'fillcolor="{colours[rec.kind]}"',
                     f'address="{format_address(rec.address)}"']
            if rec.amalgamated:
                attrs.append("shape=doublecircle")
            if rec.frontier:
                attrs.append("color=red")
            if v in marked:
                attrs.append("penwidth=3")
            lines.append(f"  v{v} [{', '.join(attrs)}];")
        for i, (label, members) in enumerate(sorted((groups or {}).items())):
            lines.append(f"  subgraph cluster_{i} {{")
            lines.append(f'    label="{label}";')
            lines.append("    " + " ".join(f"v{v};" for v in sorted(members)))
            lines.append("  }")
        if arcs is not None:
            for a, b in sorted(arcs):
                lines.append(f"  v{a} -> v{b};")
        else:
            start = t.root if t.root is not None else 0
            for u, w in sorted(t.edges()):
                a, b = (u, w) if t._depth[u] < t._depth[w] or u == start else (w, u)
                lines.append(f"  v{a} -> v{b} [dir=none];")
        lines.append("}")
        return "\n".join(lines) + "\n"
