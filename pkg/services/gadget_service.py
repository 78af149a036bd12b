"""
Gadget Service - Handles the PK(n, m) gadgets that encode labels and ray types
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional

import pandas as pd

from .tree_service import (
    DecoratedTree,
    Kind,
    TreeBuilder,
    TreeService,
    VertexRecord,
)

logger = logging.getLogger(__name__)


class ParameterError(ValueError):
    """Raised for out-of-range construction parameters"""


class GadgetPurpose(str, Enum):
    LABEL = "label"
    TYPE0 = "type0"
    TYPE1 = "type1"
    POSET_ODD = "poset-odd"
    PLAIN = "plain"


@dataclass(frozen=True)
class GadgetSpec:
    """Path of pathlen edges ending at a hub with fan leaves"""
    pathlen: int
    fan: int
    purpose: GadgetPurpose = GadgetPurpose.PLAIN
    label: Optional[int] = None

    def __post_init__(self):
        if self.pathlen < 1:
            raise ParameterError(f"pathlen must be >= 1, got {self.pathlen}")
        if self.fan < 1:
            raise ParameterError(f"fan must be >= 1, got {self.fan}")
        expected = {
            GadgetPurpose.TYPE0: (2, 2),
            GadgetPurpose.TYPE1: (2, 3),
            GadgetPurpose.POSET_ODD: (4, 2),
        }
        if self.purpose is GadgetPurpose.LABEL:
            if self.label is None or (self.pathlen, self.fan) != (2 * self.label + 6, 2):
                raise ParameterError(f"label gadget for {self.label} must be PK(2l+6, 2)")
        elif self.purpose in expected and (self.pathlen, self.fan) != expected[self.purpose]:
            raise ParameterError(f"{self.purpose.value} gadget must be PK{expected[self.purpose]}")

    @classmethod
    def for_label(cls, label: int) -> "GadgetSpec":
        return cls(2 * label + 6, 2, GadgetPurpose.LABEL, label)

    @classmethod
    def for_type(cls, bit: int) -> "GadgetSpec":
        if bit == 0:
            return cls(2, 2, GadgetPurpose.TYPE0)
        return cls(2, 3, GadgetPurpose.TYPE1)

    @classmethod
    def poset_odd(cls) -> "GadgetSpec":
        return cls(4, 2, GadgetPurpose.POSET_ODD)

    @property
    def size(self) -> int:
        return self.pathlen + self.fan + 2


class GadgetService:
    """Service for gadget construction and gadget embedding predicates"""

    @staticmethod
    def attach(builder: TreeBuilder, anchor: int, spec: GadgetSpec, tag: str) -> List[int]:
        """
        Attach a gadget whose root u_0 is identified with an existing vertex.

        Args:
            builder: Builder holding the anchor
            anchor: Vertex playing u_0
            spec: Gadget shape
            tag: Address prefix for the gadget moves

        Returns:
            New vertex ids in order u_1..u_n, hub, leaves
        """
        base = builder.records[anchor].address
        added = []
        prev = anchor
        for i in range(1, spec.pathlen + 1):
            prev = builder.add_child(prev, VertexRecord(Kind.GADGET, base + (f"{tag}{i}",), anchor=anchor))
            added.append(prev)
        hub = builder.add_child(prev, VertexRecord(Kind.GADGET, base + (f"{tag}h",), anchor=anchor))
        added.append(hub)
        for j in range(spec.fan):
            added.append(builder.add_child(hub, VertexRecord(Kind.GADGET, base + (f"{tag}l{j}",), anchor=anchor)))
        return added

    @staticmethod
    def build_pk(spec: GadgetSpec) -> DecoratedTree:
        builder = TreeBuilder()
        root = builder.add_vertex(VertexRecord(Kind.GADGET, ()))
        GadgetService.attach(builder, root, spec, "g")
        return builder.build(root=root)

    @staticmethod
    def pk_embeds(a: GadgetSpec, b: GadgetSpec) -> bool:
        """
        Rooted embeddability of PK(a) into PK(b).

        Equal paths with fan <= fan' always embed. A fan-1 gadget is a bare
        path and also embeds into any gadget with a longer root path.
        """
        if a.pathlen == b.pathlen:
            return a.fan <= b.fan
        return a.fan == 1 and a.pathlen < b.pathlen

    @staticmethod
    def equal_path_rule(a: GadgetSpec, b: GadgetSpec) -> bool:
        return a.pathlen == b.pathlen and a.fan <= b.fan

    @staticmethod
    def embedding_table(pathlens: Iterable[int] = range(1, 13), fans: Iterable[int] = range(1, 5)) -> pd.DataFrame:
        """Engine result against the closed forms for every ordered spec pair."""
        specs = [GadgetSpec(n, m) for n in pathlens for m in fans]
        trees = {spec: GadgetService.build_pk(spec) for spec in specs}
        rows = []
        for a in specs:
            for b in specs:
                engine = TreeService.find_embedding(trees[a], trees[b], rooted=True) is not None
                rows.append({
                    "guest_pathlen": a.pathlen,
                    "guest_fan": a.fan,
                    "host_pathlen": b.pathlen,
                    "host_fan": b.fan,
                    "engine": engine,
                    "closed_form": GadgetService.pk_embeds(a, b),
                    "equal_path_rule": GadgetService.equal_path_rule(a, b),
                })
        df = pd.DataFrame(rows)
        df["agree"] = df["engine"] == df["closed_form"]
        logger.info("gadget table: %d pairs, %d disagreements", len(df), int((~df["agree"]).sum()))
        return df

    @staticmethod
    def named_gadgets(max_label: int = 4) -> List[GadgetSpec]:
        specs = [GadgetSpec.for_label(label) for label in range(max_label + 1)]
        return specs + [GadgetSpec.for_type(0), GadgetSpec.for_type(1), GadgetSpec.poset_odd()]
