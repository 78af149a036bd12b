"""
Ray Service - Handles typed double-ray windows, their centres and shift embeddings
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Dict, List, Optional

from .gadget_service import GadgetService, GadgetSpec, ParameterError
from .lemma_report import LemmaReport
from .tree_service import (
    DecoratedTree,
    FrontierPolicy,
    Kind,
    TreeBuilder,
    TreeService,
    VertexRecord,
)

logger = logging.getLogger(__name__)

TYPE_TAG = "T"
ODD_TAG = "P"


class RayVariant(str, Enum):
    STANDARD = "standard"
    POSET = "poset"


@dataclass
class RayWindow:
    """Finite window [lo, hi] of a typed double ray"""
    tree: DecoratedTree
    s: int
    lo: int
    hi: int
    assignment: Dict[int, int]
    centre_index: int = 0
    variant: RayVariant = RayVariant.STANDARD

    def vertex(self, index: int) -> int:
        return self.tree.index(ray_address(index))


def ray_address(index: int) -> tuple:
    return ("r+",) * index if index >= 0 else ("r-",) * -index


def tp(s: int, j: int) -> int:
    """Type of the j-th ray vertex in the s-th family."""
    if s < 0:
        raise ParameterError(f"family index must be >= 0, got {s}")
    if s == 0:
        return 0 if j <= 0 else 1
    if j < 0 or 1 <= j <= s:
        return 0
    return 1


def default_halfwidth(s_max: int) -> int:
    return 2 * (s_max + 2)


class RayService:
    """Service for double-ray windows"""

    @staticmethod
    def tp_s(s: int, j: int) -> int:
        return tp(s, j)

    @staticmethod
    def build_ray(s: int, lo: int, hi: int, variant: RayVariant = RayVariant.STANDARD,
                  typed: bool = True, gadgets: bool = True) -> RayWindow:
        """
        Build a window of D_s (or of its poset variant).

        Args:
            s: Family index
            lo: Lowest index, <= 0
            hi: Highest index, >= 0
            variant: STANDARD types every vertex; POSET types even indices with tp_s(j / 2)
            typed: Keep raytype decorations on the core
            gadgets: Attach type gadgets (and PK(4, 2) on odd poset indices)

        Returns:
            RayWindow rooted at index 0
        """
        if not lo <= 0 <= hi:
            raise ParameterError(f"window [{lo}, {hi}] must contain 0")
        variant = RayVariant(variant)
        assignment: Dict[int, Optional[int]] = {}
        for j in range(lo, hi + 1):
            if variant is RayVariant.STANDARD:
                assignment[j] = tp(s, j)
            else:
                assignment[j] = tp(s, j // 2) if j % 2 == 0 else None

        builder = TreeBuilder()
        ids: Dict[int, int] = {}
        for j in sorted(range(lo, hi + 1), key=lambda x: (abs(x), x < 0)):
            record = VertexRecord(
                Kind.RAY, ray_address(j), label=0,
                raytype=assignment[j] if typed else None,
                frontier=j in (lo, hi) and lo != hi,
                ray=0, ray_index=j,
            )
            ids[j] = builder.add_vertex(record)
            if j != 0:
                builder.add_edge(ids[j - 1 if j > 0 else j + 1], ids[j])
        if gadgets:
            for j in range(lo, hi + 1):
                if assignment[j] is None:
                    GadgetService.attach(builder, ids[j], GadgetSpec.poset_odd(), ODD_TAG)
                else:
                    GadgetService.attach(builder, ids[j], GadgetSpec.for_type(assignment[j]), TYPE_TAG)
        typed_bits = {j: b for j, b in assignment.items() if b is not None}
        return RayWindow(builder.build(root=ids[0]), s, lo, hi, typed_bits, 0, variant)

    @staticmethod
    def find_centre(assignment: Dict[int, int]) -> Optional[int]:
        """First index of type 1 followed by an index of type 0."""
        for j in sorted(assignment):
            if assignment[j] == 1 and assignment.get(j + 1) == 0:
                return j
        return None

    @staticmethod
    def shift_valid(s: int, s2: int, d: int, lo: int, hi: int) -> bool:
        return all(tp(s, j) <= tp(s2, j + d) for j in range(lo, hi + 1))

    @staticmethod
    def reflection_valid(s: int, s2: int, d: int, lo: int, hi: int) -> bool:
        return all(tp(s, j) <= tp(s2, d - j) for j in range(lo, hi + 1))

    @staticmethod
    def reflection_embeds(s: int, s2: int, halfwidth: int) -> bool:
        """Some direction-reversing alignment j -> d - j respects types on the window."""
        bound = halfwidth // 2
        return any(RayService.reflection_valid(s, s2, d, -halfwidth, halfwidth) for d in range(-bound, bound + 1))

    @staticmethod
    def centred_shift_embeds(s: int, s2: int, halfwidth: int) -> bool:
        """Identity alignment of the D_s window into D_s2 respects types."""
        if halfwidth < s + s2 + 2:
            raise ParameterError(f"halfwidth {halfwidth} < {s + s2 + 2}")
        return RayService.shift_valid(s, s2, 0, -halfwidth, halfwidth)

    @staticmethod
    def shift_witnesses(s: int, s2: int, halfwidth: int, max_shift: Optional[int] = None) -> List[int]:
        bound = halfwidth // 2 if max_shift is None else max_shift
        return [d for d in range(-bound, bound + 1) if RayService.shift_valid(s, s2, d, -halfwidth, halfwidth)]

    @staticmethod
    def gadget_shift_embeds(s: int, s2: int, d: int, guest_halfwidth: int = 4, host_halfwidth: int = 8) -> bool:
        """Rooted gadget-level embedding of the D_s window centred at 0 into D_s2 at index d."""
        if abs(d) + guest_halfwidth > host_halfwidth:
            raise ParameterError("shifted guest leaves the host window")
        guest = RayService.build_ray(s, -guest_halfwidth, guest_halfwidth, typed=False).tree
        host = RayService.build_ray(s2, -host_halfwidth, host_halfwidth, typed=False)
        rerooted = TreeService.reroot(host.tree, host.vertex(d))
        return TreeService.find_embedding(guest, rerooted, rooted=True, policy=FrontierPolicy.CLOSED) is not None

    @staticmethod
    def verify_ray_centres(sib_count: int, halfwidth: int = 8, guest_halfwidth: int = 4) -> LemmaReport:
        """
        Centre obstruction, siblinghood, non-isomorphism and gadget-level
        agreement for every ordered pair of families below sib_count.
        """
        report = LemmaReport("ray-centres")
        forms = {s: TreeService.canonical_form(RayService.build_ray(s, -halfwidth, halfwidth).tree, False)
                 for s in range(sib_count)}
        for s in range(1, sib_count):
            window = RayService.build_ray(s, -halfwidth, halfwidth)
            report.cases += 1
            if RayService.find_centre(window.assignment) != 0:
                report.violation(check="centre-pattern", s=s)
        for s, s2 in product(range(sib_count), repeat=2):
            report.cases += 1
            centred = RayService.centred_shift_embeds(s, s2, halfwidth)
            if s == s2:
                if not centred:
                    report.violation(check="identity", s=s)
                continue
            dominated = s > s2 >= 1
            if centred and dominated:
                report.exception(check="centred", s=s, s2=s2)
            elif centred != dominated:
                report.violation(check="centred", s=s, s2=s2, centred=centred)
            report.cases += 1
            if not [d for d in RayService.shift_witnesses(s, s2, halfwidth) if d != 0]:
                report.violation(check="siblinghood", s=s, s2=s2)
            report.cases += 1
            if forms[s] == forms[s2]:
                report.violation(check="non-isomorphic", s=s, s2=s2)
            bound = halfwidth - guest_halfwidth
            for d in range(-bound, bound + 1):
                report.cases += 1
                bits = (RayService.shift_valid(s, s2, d, -guest_halfwidth, guest_halfwidth)
                        or RayService.reflection_valid(s, s2, d, -guest_halfwidth, guest_halfwidth))
                gadget = RayService.gadget_shift_embeds(s, s2, d, guest_halfwidth, halfwidth)
                if bits != gadget:
                    report.violation(check="gadget-level", s=s, s2=s2, d=d, bits=bits, gadget=gadget)
        report.details["dominated_pairs"] = [[e["s"], e["s2"]] for e in report.exceptions]
        return report
