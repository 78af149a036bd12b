"""
Construct Service - Handles truncations of T_s(k): typing the spine's rays,
the sibling registry S_{i,j}, craters and the structural checks on them
"""

import json
import logging
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .gadget_service import GadgetService, GadgetSpec, ParameterError
from .lemma_report import LemmaReport
from .ray_service import TYPE_TAG, RayService, ray_address, tp
from .rtree_service import LABEL_TAG
from .spine_service import SpineBall, SpineService
from .tree_service import (
    Address,
    DecoratedTree,
    EmbeddingMap,
    Kind,
    TreeBuilder,
    TreeService,
    TruncationError,
    format_address,
    parse_address,
)

logger = logging.getLogger(__name__)

DEFAULT_REGISTRY = "registry.json"


class ConfigurationError(ValueError):
    """Raised for missing registry entries or infeasible settings"""


def address_index(address: Sequence[str]) -> int:
    """Central-ray index of an address made of r+ or r- moves only."""
    moves = set(address)
    if not moves:
        return 0
    if moves == {"r+"}:
        return len(address)
    if moves == {"r-"}:
        return -len(address)
    raise ValueError(f"{format_address(tuple(address))} is not a central ray address")


@dataclass(frozen=True)
class Seed:
    """Type assignment of a ray: tp_s with finitely many overrides, read from offset"""
    s: int = 0
    overrides: Tuple[Tuple[int, int], ...] = ()
    offset: int = 0

    def bit(self, index: int) -> int:
        j = index + self.offset
        for i, b in self.overrides:
            if i == j:
                return b
        return tp(self.s, j)

    def window(self, lo: int, hi: int) -> Dict[int, int]:
        return {j: self.bit(j) for j in range(lo, hi + 1)}


@dataclass(frozen=True)
class SiblingSpec:
    """Sibling S_{i,j}: overrides of T(i)'s central typing plus its centre"""
    base_stage: int
    index: int
    overrides: Tuple[Tuple[Address, int], ...]
    centre: Address

    @property
    def centre_index(self) -> int:
        return address_index(self.centre)

    def seed(self) -> Seed:
        return Seed(0, tuple(sorted((address_index(a), b) for a, b in self.overrides)), self.centre_index)

    @property
    def tag(self) -> str:
        return f"S_{{{self.base_stage},{self.index}}}"

    def to_dict(self) -> dict:
        return {
            "base_stage": self.base_stage,
            "index": self.index,
            "overrides": [[format_address(a), b] for a, b in self.overrides],
            "centre": format_address(self.centre),
        }

    @classmethod
    def from_dict(cls, item: dict) -> "SiblingSpec":
        overrides = tuple((parse_address(a), int(b)) for a, b in item["overrides"])
        centre = parse_address(item["centre"])
        return cls(int(item["base_stage"]), int(item["index"]), overrides, centre)


Registry = Dict[Tuple[int, int], SiblingSpec]


@dataclass
class TBall:
    """Truncation of T_s(k) around z_s"""
    spine: SpineBall
    core: DecoratedTree
    tree: DecoratedTree
    s: int
    stage: int
    seed: Seed
    typing: Dict[int, int]
    targets: List[Tuple[int, int]] = field(default_factory=list)
    amalgam_log: List[Tuple[str, int, int, str]] = field(default_factory=list)

    @property
    def centre(self) -> int:
        return self.spine.centre


class ConstructService:
    """Service for T_s(k) truncations and the sibling registry"""

    @staticmethod
    def stage_decode(k: int) -> Tuple[int, int]:
        """
        Write k = 2^i (2j + 1).

        Args:
            k: Stage, >= 1

        Returns:
            Tuple (i, j)
        """
        if k < 1:
            raise ParameterError(f"stage code must be >= 1, got {k}")
        i = 0
        while k % 2 == 0:
            k //= 2
            i += 1
        return i, (k - 1) // 2

    @staticmethod
    def crater_target(sb: SpineBall, anchor: int, x: int) -> int:
        """End of the strict descent after the last maximal pair on P_{anchor,x}."""
        tree = sb.tree
        p = tree.path(anchor, x)
        labels = [tree.records[v].label for v in p]
        top = max(labels)
        last = max(i for i in range(len(p) - 1) if labels[i] == labels[i + 1] == top)
        current = p[last + 1]
        while tree.records[current].label > 0:
            lower = tree.records[current].label - 1
            frame = sb.frame(sb.copy_of(current))
            nxt = next((w for w in frame.neighbours(current) if tree.records[w].label == lower), None)
            if nxt is None:
                raise TruncationError(f"descent from {format_address(tree.records[current].address)} leaves the ball")
            current = nxt
        return current

    @staticmethod
    def type_at(sb: SpineBall, registry: Registry, seed: Seed, anchor: int, x: int) -> int:
        """Type of ray vertex x in the structure attached at anchor with the given seed."""
        h = SpineService.ghth(sb, anchor, x)
        if h == 0:
            return seed.bit(sb.tree.records[x].ray_index)
        v = ConstructService.crater_target(sb, anchor, x)
        if SpineService.gspin(sb, anchor, v) == -1:
            return ConstructService.type_at(sb, registry, Seed(), v, x)
        key = ConstructService.stage_decode(h)
        if key not in registry:
            raise ConfigurationError(f"registry has no sibling S_{key}")
        return ConstructService.type_at(sb, registry, registry[key].seed(), v, x)

    @staticmethod
    def attachment_tag(registry: Registry, height: int, spin: int) -> str:
        if spin == -1:
            return f"T({height - 1})"
        key = ConstructService.stage_decode(height)
        if key not in registry:
            raise ConfigurationError(f"registry has no sibling S_{key}")
        return registry[key].tag

    @staticmethod
    def _decorate(spine: SpineBall, typing: Dict[int, int], gadgets: bool) -> DecoratedTree:
        builder = TreeBuilder()
        core = spine.core_vertices()
        for v in core:
            builder.add_vertex(replace(spine.tree.records[v], raytype=typing.get(v)))
        for a, b in spine.tree.edges():
            builder.add_edge(a, b)
        if gadgets:
            for v in core:
                GadgetService.attach(builder, v, GadgetSpec.for_label(builder.records[v].label), LABEL_TAG)
                if v in typing:
                    GadgetService.attach(builder, v, GadgetSpec.for_type(typing[v]), TYPE_TAG)
        return builder.build(root=spine.centre)

    @staticmethod
    def build_t(s: int, k: int, radius: int, registry: Registry, seed: Optional[Seed] = None,
                with_gadgets: bool = True) -> TBall:
        """
        Build the radius-bounded truncation of T_s(k).

        Args:
            s: Family index (central typing tp_s)
            k: Stage
            radius: Graph distance bound from z_s
            registry: Sibling registry covering every stage code <= k
            seed: Central typing override (sibling truncations)
            with_gadgets: Attach label and type gadgets

        Returns:
            TBall; vertex ids of core and tree agree on core vertices
        """
        for m in range(1, k + 1):
            if ConstructService.stage_decode(m) not in registry:
                raise ConfigurationError(f"registry has no sibling S_{ConstructService.stage_decode(m)}")
        seed = seed or Seed(s)
        small = SpineService.build_spine(k, radius)
        wide = SpineService.build_spine(k, radius + k) if k else small
        typing = {}
        skipped = 0
        for v in small.core_vertices():
            if small.tree.records[v].kind is not Kind.RAY:
                continue
            x = wide.tree.index(small.tree.records[v].address)
            try:
                typing[v] = ConstructService.type_at(wide, registry, seed, wide.centre, x)
            except TruncationError:
                skipped += 1
        if skipped:
            logger.warning("%d ray vertices left untyped at radius %d", skipped, radius)
        core = ConstructService._decorate(small, typing, gadgets=False)
        tree = ConstructService._decorate(small, typing, gadgets=True) if with_gadgets else core
        tb = TBall(small, core, tree, s, k, seed, typing)
        tb.targets = ConstructService.target_vertices(tb)
        for v, height in tb.targets:
            if 1 <= height <= k and small.interior(v):
                spin = SpineService.gspin(small, small.centre, v)
                tag = ConstructService.attachment_tag(registry, height, spin)
                tb.amalgam_log.append((format_address(small.tree.records[v].address), height, spin, tag))
        return tb

    @staticmethod
    def target_vertices(tb: TBall) -> List[Tuple[int, int]]:
        """Interior label-0 vertices with global height = global colour, z included."""
        sb = tb.spine
        found = [(sb.centre, 0)]
        for v in sb.label_zero():
            if v == sb.centre or sb.is_copy_root(v):
                continue
            height = sb.heights[v]
            if height == SpineService.gcol(sb, sb.centre, v):
                found.append((v, height))
        return found

    @staticmethod
    def crater(tb: TBall, v: int, height: int) -> List[int]:
        sb = tb.spine
        if height == 0:
            return sorted(w for w in sb.rays[0].values() if sb.interior(w))
        reach = sb.tree.distances_from(
            v, allowed=lambda w: sb.tree.records[w].is_core and sb.tree.records[w].label < height)
        return sorted(w for w in reach if sb.interior(w))

    @staticmethod
    def verify_tball(tb: TBall, registry: Registry) -> LemmaReport:
        """Central typing, amalgamation of targets, tag/spin agreement and the crater partition."""
        sb = tb.spine
        tree = sb.tree
        report = LemmaReport("tball")
        name = lambda x: format_address(tree.records[x].address)  # noqa: E731
        for index, v in sorted(sb.rays[0].items()):
            report.cases += 1
            if tb.typing.get(v) != tb.seed.bit(index):
                report.violation(check="central-typing", index=index, found=tb.typing.get(v))
        for v, height in tb.targets:
            if height <= tb.stage and tree.records[v].kind is not Kind.RAY:
                report.violation(check="target-amalgamated", vertex=name(v), height=height)
        for address, height, spin, tag in tb.amalgam_log:
            report.cases += 1
            v = tree.index(parse_address(address))
            if SpineService.gspin(sb, sb.centre, v) != spin or \
                    ConstructService.attachment_tag(registry, height, spin) != tag:
                report.violation(check="tag-spin", vertex=address)
        owners: Dict[int, List[int]] = {}
        for v, height in tb.targets:
            if height <= tb.stage:
                for w in ConstructService.crater(tb, v, height):
                    owners.setdefault(w, []).append(v)
        for w, who in owners.items():
            if len(who) > 1:
                report.violation(check="crater-overlap", vertex=name(w), targets=[name(t) for t in who])
        for v in sb.core_vertices():
            rec = tree.records[v]
            if rec.kind is not Kind.RAY or rec.frontier or sb.depth[v] + tb.stage >= sb.radius:
                continue
            report.cases += 1
            if v not in owners:
                report.violation(check="crater-cover", vertex=name(v))
        report.details["targets"] = len(tb.targets)
        report.details["amalgamations"] = len(tb.amalgam_log)
        return report

    @staticmethod
    def strip_types(tb: TBall) -> DecoratedTree:
        """The T-ball without type gadgets and raytype decorations."""
        tree = tb.tree
        kept = {v for v, rec in enumerate(tree.records)
                if not (rec.kind is Kind.GADGET and rec.address[-1].startswith(TYPE_TAG))}
        sub = TreeService.core_subtree(tree, keep=kept.__contains__)
        records = [replace(rec, raytype=None) for rec in sub.records]
        return DecoratedTree(records, sub.edges(), root=sub.root)

    @staticmethod
    def verify_spine_recovery(tb: TBall) -> LemmaReport:
        report = LemmaReport("spine-recovery", cases=1)
        spine = SpineService.build_spine(tb.stage, tb.spine.radius, with_gadgets=True)
        stripped = ConstructService.strip_types(tb)
        if TreeService.canonical_form(stripped, True) != TreeService.canonical_form(spine.tree, True):
            report.violation(s=tb.s, stage=tb.stage)
        return report

    @staticmethod
    def sibling_key(bits: Dict[int, int]) -> str:
        """Word from the first 1 that is followed by a 0 to the last 0 that follows a 1."""
        idx = sorted(bits)
        ones = [i for i in idx if bits[i] == 1]
        zeros = [i for i in idx if bits[i] == 0]
        if not ones or not zeros:
            return ""
        first = next((i for i in ones if any(z > i for z in zeros)), None)
        if first is None:
            return ""
        last = max(z for z in zeros if z > first)
        return "".join(str(bits[i]) for i in range(first, last + 1))

    @staticmethod
    def candidate_order(bound: int) -> List[int]:
        order = [0]
        for i in range(1, bound + 1):
            order.extend([i, -i])
        return order

    @staticmethod
    def _witnessed(seed: Seed, halfwidth: int) -> bool:
        span = range(-halfwidth, halfwidth + 1)
        shifts = [d for d in range(-(halfwidth // 2), halfwidth // 2 + 1) if d]
        into = any(all(seed.bit(j) <= tp(0, j + d) for j in span) for d in shifts)
        back = any(all(tp(0, j) <= seed.bit(j + d) for j in span) for d in shifts)
        return into and back

    @staticmethod
    def enumerate_siblings(k: int, count: int, registry: Registry, sib_count: int = 3, bound: int = 1,
                           halfwidth: int = 8, radius: int = 6) -> List[SiblingSpec]:
        """
        Type-override siblings of T(k), by override count then shortlex index order.

        Args:
            k: Base stage
            count: Number of siblings wanted
            registry: Siblings of lower stages used while building truncations
            sib_count: Families T_s excluded by key
            bound: Largest override set
            halfwidth: Window for keys and shift witnesses
            radius: Truncation radius for the canonical-form comparison

        Returns:
            Accepted SiblingSpec list
        """
        keys_taken = {""} | {"1" + "0" * s for s in range(1, sib_count)}
        forms = [TreeService.canonical_form(ConstructService.build_t(s, k, radius, registry, with_gadgets=False).core, False)
                 for s in range(sib_count)]
        found: List[SiblingSpec] = []
        order = ConstructService.candidate_order(halfwidth // 2)
        for size in range(1, bound + 1):
            for combo in combinations(order, size):
                overrides = tuple(sorted((i, 1 - tp(0, i)) for i in combo))
                seed = Seed(0, overrides)
                bits = seed.window(-halfwidth, halfwidth)
                key = ConstructService.sibling_key(bits)
                if key in keys_taken or not ConstructService._witnessed(seed, halfwidth):
                    continue
                centre = RayService.find_centre(bits)
                spec = SiblingSpec(k, len(found), tuple((ray_address(i), b) for i, b in overrides), ray_address(centre))
                form = TreeService.canonical_form(
                    ConstructService.build_t(0, k, radius, registry, seed=spec.seed(), with_gadgets=False).core, False)
                if form in forms:
                    logger.warning("candidate %s rejected: isomorphic truncation", key)
                    continue
                keys_taken.add(key)
                forms.append(form)
                found.append(spec)
                logger.info("sibling %s: key %s centre %d", spec.tag, key, centre)
                if len(found) == count:
                    return found
        return found

    @staticmethod
    def build_registry(sib_count: int, max_stage: int, radius: int = 6, halfwidth: int = 8) -> Registry:
        needed: Dict[int, int] = {}
        for m in range(1, max_stage + 1):
            i, j = ConstructService.stage_decode(m)
            needed[i] = max(needed.get(i, 0), j + 1)
        registry: Registry = {}
        for i in sorted(needed):
            for spec in ConstructService.enumerate_siblings(i, needed[i], registry, sib_count,
                                                            halfwidth=halfwidth, radius=radius):
                registry[(spec.base_stage, spec.index)] = spec
        return registry

    @staticmethod
    def save_registry(registry: Registry, path: str) -> Tuple[bool, str]:
        try:
            items = [registry[key].to_dict() for key in sorted(registry)]
            with open(path, "w") as f:
                json.dump(items, f, indent=2, sort_keys=True)
                f.write("\n")
            return True, f"Registry saved to {path}"
        except Exception as e:
            return False, f"Error: {str(e)}"

    @staticmethod
    def load_registry(path: str) -> Registry:
        with open(path) as f:
            items = json.load(f)
        registry = {}
        for item in items:
            spec = SiblingSpec.from_dict(item)
            registry[(spec.base_stage, spec.index)] = spec
        return registry

    @staticmethod
    def diff_registry(frozen: Registry, fresh: Registry) -> List[str]:
        lines = []
        for key in sorted(set(frozen) | set(fresh)):
            a, b = frozen.get(key), fresh.get(key)
            if a != b:
                lines.append(f"S_{key}: frozen={a.to_dict() if a else None} fresh={b.to_dict() if b else None}")
        return lines

    @staticmethod
    def verify_nonisomorphism(k: int, radius: int, sib_count: int, registry: Registry) -> LemmaReport:
        report = LemmaReport("noniso")
        balls = [ConstructService.build_t(s, k, radius, registry, with_gadgets=False) for s in range(sib_count)]
        forms = [TreeService.canonical_form(tb.core, False) for tb in balls]
        for a in range(sib_count):
            for b in range(a + 1, sib_count):
                report.cases += 1
                if forms[a] == forms[b]:
                    report.violation(check="families", stage=k, s=a, s2=b)
        again = ConstructService.build_t(0, k, radius, registry, with_gadgets=False)
        report.cases += 1
        if TreeService.canonical_form(again.core, False) != forms[0]:
            report.violation(check="rebuild", stage=k)
        central = balls[0].spine.rays[0]
        if RayService.find_centre({i: balls[0].typing[v] for i, v in central.items()}) is not None:
            report.violation(check="tp0-pattern", stage=k)
        sibling_forms = []
        for key in sorted(registry):
            spec = registry[key]
            if spec.base_stage != k:
                continue
            tb = ConstructService.build_t(0, k, radius, registry, seed=spec.seed(), with_gadgets=False)
            form = TreeService.canonical_form(tb.core, False)
            for s in range(sib_count):
                report.cases += 1
                if form == forms[s]:
                    report.violation(check="sibling", sibling=spec.tag, s=s)
            for other in sibling_forms:
                report.cases += 1
                if form == other:
                    report.violation(check="sibling-pair", sibling=spec.tag)
            sibling_forms.append(form)
            report.cases += 1
            if RayService.find_centre(spec.seed().window(-8, 8)) is None:
                report.violation(check="sibling-pattern", sibling=spec.tag)
        report.details[f"stage{k}.families"] = sib_count
        report.details[f"stage{k}.siblings"] = len(sibling_forms)
        return report

    @staticmethod
    def verify_embedkcopies(tb: TBall, mapping: EmbeddingMap, margin: int = 0) -> LemmaReport:
        """
        Amalgamated vertices map to amalgamated ones; low-height parts map into themselves.

        Args:
            tb: Truncation the map lives on
            mapping: Self-embedding of tb.tree
            margin: Skip vertices closer than this to the truncation radius

        Returns:
            LemmaReport
        """
        sb = tb.spine
        tree = tb.tree
        report = LemmaReport("embedkcopies")
        pairs = {w: y for w, y in mapping.pairs.items()
                 if w in sb.heights and y in sb.heights and sb.depth.get(w, sb.radius) + margin <= sb.radius}
        for w, y in pairs.items():
            rec = tree.records[w]
            if rec.kind is Kind.RAY and not rec.frontier and not tree.records[y].frontier:
                report.cases += 1
                if tree.records[y].kind is not Kind.RAY:
                    report.violation(check="amalgamated", vertex=format_address(rec.address))
        z_image = mapping.get(sb.centre)
        if z_image is not None:
            floor = sb.heights[z_image]
            for level in range(floor, tb.stage + 1):
                for w, y in pairs.items():
                    if sb.heights[w] <= level:
                        report.cases += 1
                        if sb.heights[y] > level:
                            report.violation(check="sub-truncation", level=level,
                                             vertex=format_address(tree.records[w].address))
        return report

    @staticmethod
    def verify_embfinite(tb: TBall, witnesses: Iterable[Tuple[str, EmbeddingMap]]) -> LemmaReport:
        """
        Host vertices next to interior images that are missed by the map:
        exactly the third leaf of type gadgets whose type went from 0 to 1.
        """
        sb = tb.spine
        tree = tb.tree
        report = LemmaReport("embfinite")
        gadgets: Dict[int, List[int]] = {}
        for v, rec in enumerate(tree.records):
            if rec.kind is Kind.GADGET:
                gadgets.setdefault(rec.anchor, []).append(v)
        for name, mapping in witnesses:
            image = set(mapping.pairs.values())
            uncovered, expected = set(), set()
            for x, y in mapping.pairs.items():
                if x not in sb.heights or y not in sb.heights:
                    continue
                if tree.records[x].frontier or tree.records[y].frontier:
                    continue
                star = [w for w in tree.adjacency[y] if tree.records[w].is_core] + gadgets.get(y, [])
                uncovered.update(w for w in star if w not in image)
                if tb.typing.get(x) == 0 and tb.typing.get(y) == 1:
                    expected.add(tree.index(tree.records[y].address + (f"{TYPE_TAG}l2",)))
            report.cases += 1
            if uncovered != expected:
                report.violation(witness=name,
                                 missing=sorted(format_address(tree.records[w].address) for w in expected - uncovered),
                                 extra=sorted(format_address(tree.records[w].address) for w in uncovered - expected))
            z_image = mapping.get(sb.centre)
            if z_image is not None and tree.records[z_image].ray == 0:
                displacement = abs(tree.records[z_image].ray_index)
                if len(uncovered) > displacement:
                    report.violation(witness=name, check="size", size=len(uncovered), displacement=displacement)
            report.details[name] = len(uncovered)
        return report
