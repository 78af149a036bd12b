"""
Similarity Service - Handles path fingerprints and the similarity maps they
determine on spine truncations
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .construct_service import TBall
from .lemma_report import LemmaReport
from .rtree_service import UndefinedAtBaseError
from .spine_service import SpineBall, SpineService
from .tree_service import (
    DecoratedTree,
    EmbeddingMap,
    FrontierPolicy,
    Kind,
    TreeService,
    TruncationError,
    format_address,
    parse_address,
)

logger = logging.getLogger(__name__)

LT = "<"
GT = ">"


class SimilarityError(RuntimeError):
    """Raised when no fingerprint-preserving extension exists at an interior vertex"""


@dataclass(frozen=True)
class Fingerprint:
    """One symbol per path vertex: '<' or '>' on ray steps, ('sign', +-1) at copy entries, labels otherwise"""
    symbols: Tuple[Tuple[str, int], ...]

    def __len__(self) -> int:
        return len(self.symbols)

    def to_ascii(self) -> str:
        out = []
        for kind, value in self.symbols:
            if kind == "ray":
                out.append(LT if value > 0 else GT)
            elif kind == "sign":
                out.append("+1" if value > 0 else "-1")
            else:
                out.append(str(value))
        return " ".join(out)

    @classmethod
    def from_ascii(cls, text: str) -> "Fingerprint":
        symbols = []
        for token in text.split():
            if token == LT:
                symbols.append(("ray", 1))
            elif token == GT:
                symbols.append(("ray", -1))
            elif token in ("+1", "-1"):
                symbols.append(("sign", int(token)))
            else:
                symbols.append(("label", int(token)))
        return cls(tuple(symbols))


@dataclass
class SimilarityMap:
    """Finite part of Phi_{u,v}; 'frontier' holds mapped vertices whose extension stopped"""
    anchor: Tuple[int, int]
    mapping: Dict[int, int]
    frontier: List[int] = field(default_factory=list)

    def __call__(self, w: int) -> int:
        if w not in self.mapping:
            raise TruncationError(f"vertex {w} lies outside the determined part of the map")
        return self.mapping[w]

    def as_embedding(self) -> EmbeddingMap:
        return EmbeddingMap(dict(self.mapping), rooted=False)


def _is_ray_step(tree: DecoratedTree, p: int, w: int) -> bool:
    return tree.records[p].copy != tree.records[w].copy


def _step_symbol(sb: SpineBall, p: int, w: int, first: bool) -> Tuple[str, int]:
    tree = sb.tree
    if _is_ray_step(tree, p, w):
        return "ray", 1 if tree.records[w].ray_index > tree.records[p].ray_index else -1
    if first:
        return "sign", sb.frame(sb.copy_of(p)).branch(p, w)
    return "label", tree.records[p].label


def _move(sb: SpineBall, y: int, prev: Optional[int], symbol: Tuple[str, int], label: int) -> Optional[int]:
    tree = sb.tree
    kind, value = symbol
    for n in tree.adjacency[y]:
        rec = tree.records[n]
        if not rec.is_core:
            continue
        if kind == "ray":
            if _is_ray_step(tree, y, n) and rec.ray_index == tree.records[y].ray_index + value:
                return n
        elif _is_ray_step(tree, y, n):
            continue
        elif kind == "sign":
            if sb.frame(sb.copy_of(y)).branch(y, n) == value and rec.label == label:
                return n
        elif n != prev and rec.label == label:
            return n
    return None


class SimilarityService:
    """Service for fingerprints and similarity maps"""

    @staticmethod
    def fingerprint(sb: SpineBall, u: int, v: int) -> Fingerprint:
        """
        Fingerprint of P_{u,v}.

        Args:
            sb: Spine truncation
            u: Start vertex (label 0)
            v: End vertex

        Returns:
            Fingerprint with one symbol per path vertex
        """
        tree = sb.tree
        path = tree.path(u, v)
        if any(tree.records[x].frontier for x in path[:-1]):
            raise TruncationError(f"path to {format_address(tree.records[v].address)} crosses the frontier")
        symbols = []
        first = True
        for p, w in zip(path, path[1:]):
            symbols.append(_step_symbol(sb, p, w, first))
            first = _is_ray_step(tree, p, w)
        symbols.append(("label", tree.records[v].label))
        return Fingerprint(tuple(symbols))

    @staticmethod
    def walk(sb: SpineBall, start: int, fp: Fingerprint) -> int:
        """Follow a fingerprint from start; raises SimilarityError when it cannot be followed."""
        tree = sb.tree
        y, prev = start, None
        symbols = fp.symbols
        for i, symbol in enumerate(symbols[:-1]):
            nxt = symbols[i + 1]
            label = nxt[1] if nxt[0] == "label" else 0
            n = _move(sb, y, prev, symbol, label)
            if n is None:
                if tree.records[y].frontier:
                    raise TruncationError(f"walk leaves the ball at {format_address(tree.records[y].address)}")
                raise SimilarityError(f"no step {symbol} at {format_address(tree.records[y].address)}")
            y, prev = n, y
        if tree.records[y].label != symbols[-1][1]:
            raise SimilarityError("final label differs")
        return y

    @staticmethod
    def build_similarity(sb: SpineBall, u: int, v: int) -> SimilarityMap:
        """
        Greedy extension of u -> v along every path out of u.

        Args:
            sb: Spine truncation
            u: Anchor in the domain
            v: Its image

        Returns:
            SimilarityMap, partial where the host truncation ends
        """
        tree = sb.tree
        if tree.records[u].label != 0 or tree.records[v].label != 0:
            raise SimilarityError("similarity anchors must have label 0")
        mapping = {u: v}
        parent = {u: None}
        first = {u: True}
        stopped = []
        queue = deque([u])
        while queue:
            p = queue.popleft()
            if tree.records[p].frontier:
                continue
            y = mapping[p]
            for w in tree.adjacency[p]:
                if w in parent or not tree.records[w].is_core:
                    continue
                symbol = _step_symbol(sb, p, w, first[p])
                n = _move(sb, y, mapping.get(parent[p]), symbol, tree.records[w].label)
                if n is None:
                    if tree.records[y].frontier or symbol[0] == "ray":
                        stopped.append(p)
                        continue
                    raise SimilarityError(f"no extension of {format_address(tree.records[p].address)} "
                                          f"toward {format_address(tree.records[w].address)}")
                parent[w] = p
                first[w] = symbol[0] == "ray"
                mapping[w] = n
                queue.append(w)
        logger.debug("similarity %s -> %s: %d vertices", u, v, len(mapping))
        return SimilarityMap((u, v), mapping, sorted(set(stopped)))

    @staticmethod
    def translation(sb: SpineBall, d: int) -> Dict[int, int]:
        """Shift along the central ray by d, by address."""
        tree = sb.tree
        result = {}
        for w in sb.core_vertices():
            address = tree.records[w].address
            lead = 0
            while lead < len(address) and address[lead] in ("r+", "r-") and address[lead] == address[0]:
                lead += 1
            index = lead if address[:1] == ("r+",) else -lead
            target = index + d
            moved = (("r+",) * target if target >= 0 else ("r-",) * -target) + address[lead:]
            image = tree.find(moved)
            if image is not None:
                result[w] = image
        return result

    @staticmethod
    def extend_to_gadgets(tree: DecoratedTree, mapping: Dict[int, int]) -> EmbeddingMap:
        """Carry a core map onto gadget vertices with the same suffix."""
        pairs = dict(mapping)
        for g, rec in enumerate(tree.records):
            if rec.kind is not Kind.GADGET or rec.anchor not in mapping:
                continue
            anchor = tree.records[rec.anchor].address
            image = tree.find(tree.records[mapping[rec.anchor]].address + rec.address[len(anchor):])
            if image is not None:
                pairs[g] = image
        return EmbeddingMap(pairs)

    @staticmethod
    def check_similarity_properties(sb: SpineBall, phi: SimilarityMap) -> LemmaReport:
        """Labels, copies, ray direction, fingerprints, spin and colour along Phi."""
        tree = sb.tree
        u, v = phi.anchor
        report = LemmaReport("similarity-properties")
        name = lambda x: format_address(tree.records[x].address)  # noqa: E731
        on_path = set(tree.path(u, v))
        for w, y in phi.mapping.items():
            a, b = tree.records[w], tree.records[y]
            report.cases += 1
            if a.label != b.label:
                report.violation(check="label", vertex=name(w))
            if (a.kind is Kind.RAY) != (b.kind is Kind.RAY):
                report.exception(check="amalgamation", vertex=name(w))
            for n in tree.adjacency[w]:
                if n in phi.mapping and n > w:
                    if _is_ray_step(tree, w, n) != _is_ray_step(tree, y, phi.mapping[n]):
                        report.violation(check="copies", edge=[name(w), name(n)])
            if a.frontier or b.frontier or a.label != 0:
                continue
            try:
                same = SimilarityService.fingerprint(sb, u, w) == SimilarityService.fingerprint(sb, v, y)
            except TruncationError:
                continue
            report.cases += 1
            if not same:
                report.violation(check="fingerprint", vertex=name(w))
            if SpineService.gcol(sb, u, w) != SpineService.gcol(sb, v, y):
                report.violation(check="colour", vertex=name(w))
            try:
                here, there = SpineService.gspin(sb, u, w), SpineService.gspin(sb, v, y)
            except UndefinedAtBaseError:
                continue
            if here != there:
                report.violation(check="spin-image", vertex=name(w))
            if w not in on_path:
                try:
                    if SpineService.gspin(sb, v, w) != here:
                        report.violation(check="spin-anchor", vertex=name(w))
                except UndefinedAtBaseError:
                    report.exception(check="spin-anchor", vertex=name(w))
        report.details["mapped"] = len(phi.mapping)
        return report

    @staticmethod
    def check_composition(sb: SpineBall, first: SimilarityMap, second: SimilarityMap) -> LemmaReport:
        """Fingerprints survive first-then-second wherever both are defined."""
        report = LemmaReport("similarity-composition")
        u = first.anchor[0]
        start = second.mapping.get(first.mapping[u])
        if start is None:
            return report
        for w, y in first.mapping.items():
            image = second.mapping.get(y)
            if image is None or sb.tree.records[image].frontier or sb.tree.records[w].label != 0:
                continue
            try:
                same = SimilarityService.fingerprint(sb, u, w) == SimilarityService.fingerprint(sb, start, image)
            except TruncationError:
                continue
            report.cases += 1
            if not same:
                report.violation(vertex=format_address(sb.tree.records[w].address))
        return report

    @staticmethod
    def ball(sb: SpineBall, centre: int, radius: int) -> List[int]:
        reach = sb.tree.distances_from(centre, limit=radius, allowed=lambda w: sb.tree.records[w].is_core)
        return sorted(reach)

    @staticmethod
    def verify_uniqueness(sb: SpineBall, u: int, v: int, radius: int = 4) -> LemmaReport:
        """Every fingerprint out of u within the radius has exactly one realisation out of v."""
        tree = sb.tree
        report = LemmaReport("similarity-unique")
        phi = SimilarityService.build_similarity(sb, u, v)
        realised: Dict[Fingerprint, List[int]] = {}
        for x in SimilarityService.ball(sb, v, radius):
            try:
                realised.setdefault(SimilarityService.fingerprint(sb, v, x), []).append(x)
            except TruncationError:
                continue
        for w in SimilarityService.ball(sb, u, radius):
            try:
                fp = SimilarityService.fingerprint(sb, u, w)
            except TruncationError:
                continue
            report.cases += 1
            found = realised.get(fp, [])
            expected = [phi.mapping[w]] if w in phi.mapping else []
            if found != expected:
                report.violation(vertex=format_address(tree.records[w].address),
                                 candidates=[format_address(tree.records[x].address) for x in found])
        return report

    @staticmethod
    def mirror_map(tree: DecoratedTree, v: int) -> EmbeddingMap:
        """Swap the c0 and c1 branches below v, identity elsewhere; partial where a branch is missing."""
        base = tree.records[v].address
        swap = {"c0": "c1", "c1": "c0"}
        pairs = {}
        for w, rec in enumerate(tree.records):
            address = rec.address
            if address[:len(base)] == base and len(address) > len(base) and address[len(base)] in swap:
                moved = base + (swap[address[len(base)]],) + address[len(base) + 1:]
                image = tree.find(moved)
                if image is not None:
                    pairs[w] = image
            else:
                pairs[w] = w
        return EmbeddingMap(pairs)

    @staticmethod
    def embedding_induces_similarity(sb: SpineBall, tree: DecoratedTree, phi: EmbeddingMap,
                                     strict: bool = True,
                                     targets: Iterable[Tuple[int, int]] = ()) -> LemmaReport:
        """
        Sign preservation of an embedding restricted to the spine.

        Args:
            sb: Spine of the truncation (core ids shared with tree)
            tree: Decorated truncation the map lives on
            phi: Map to check
            strict: Compare fingerprints at every interior label-0 vertex;
                otherwise only at targets whose attachment depends on the spin
            targets: (vertex, height) pairs carrying spin-dependent attachments

        Returns:
            LemmaReport listing vertices whose sign is not preserved
        """
        report = LemmaReport("embedding-similarity")
        z = sb.centre
        image_z = phi.get(z)
        if image_z is None:
            report.violation(check="centre-unmapped")
            return report
        name = lambda x: format_address(tree.records[x].address)  # noqa: E731
        if strict:
            for w in sb.label_zero():
                y = phi.get(w)
                if y is None or y not in sb.heights or sb.tree.records[y].frontier:
                    continue
                try:
                    same = SimilarityService.fingerprint(sb, z, w) == SimilarityService.fingerprint(sb, image_z, y)
                except TruncationError:
                    continue
                report.cases += 1
                if not same:
                    report.violation(check="sign", vertex=name(w))
            return report
        heights = dict(targets)
        probes = 0
        for w, height in heights.items():
            y = phi.get(w)
            if height < 1 or y is None or heights.get(y) != height:
                continue
            if sb.depth[w] + height + 2 > sb.radius or sb.tree.records[y].frontier:
                continue
            try:
                here, there = SpineService.gspin(sb, z, w), SpineService.gspin(sb, image_z, y)
            except UndefinedAtBaseError:
                continue
            report.cases += 1
            probes = max(probes, height)
            if here != there:
                report.violation(check="forced-sign", vertex=name(w), height=height)
        report.details["probe_length"] = probes
        return report

    @staticmethod
    def witness_embeddings(tb: TBall, shifts: Iterable[int] = (1, 2, 3), anchors: int = 3) -> List[Tuple[str, EmbeddingMap]]:
        """
        Self-embeddings of a T-ball built from walks: identity, central-ray
        translations and similarities onto amalgamated targets. Only maps
        that check out as open-policy embeddings are returned.
        """
        sb = tb.spine
        found = [("identity", EmbeddingMap({v: v for v in range(len(tb.tree))}))]
        candidates = [(f"shift{d}", SimilarityService.translation(sb, d)) for d in shifts]
        for address, height, spin, tag in tb.amalgam_log[:anchors]:
            target = sb.tree.index(parse_address(address))
            try:
                phi = SimilarityService.build_similarity(sb, sb.centre, target)
            except SimilarityError as e:
                logger.warning("no similarity onto %s: %s", address, e)
                continue
            candidates.append((f"phi[{address}]", phi.mapping))
        for name, mapping in candidates:
            embedding = SimilarityService.extend_to_gadgets(tb.tree, mapping)
            problems = TreeService.check_embedding(tb.tree, tb.tree, embedding, policy=FrontierPolicy.OPEN)
            if problems:
                logger.info("witness %s rejected: %s", name, problems[0])
                continue
            found.append((name, embedding))
        return found
