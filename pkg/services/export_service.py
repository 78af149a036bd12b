"""
Export Service - Handles DOT, JSON and ASCII export of built objects
"""

import json
import logging
import re
from typing import Tuple

from .construct_service import ConfigurationError, ConstructService
from .gadget_service import GadgetService, GadgetSpec
from .harness_service import RunConfig, load_registry
from .poset_service import PosetService
from .ray_service import RayService, RayVariant
from .rtree_service import RTreeService
from .similarity_service import SimilarityService
from .spine_service import SpineService
from .tree_service import DecoratedTree, TreeService, parse_address

logger = logging.getLogger(__name__)

FORMATS = ("dot", "json", "ascii")

_T = re.compile(r"^T_(\d+)\((\d+)\)$")
_SIBLING = re.compile(r"^S_(\d+),(\d+)$")
_SPINE = re.compile(r"^S\^p\((\d+)\)$")
_RAY = re.compile(r"^D(')?_(\d+)$")
_PK = re.compile(r"^(poset:)?PK\((\d+),(\d+)\)$")
_FINGERPRINT = re.compile(r"^fingerprint:([^:]*):([^:]*)$")


class ExportService:
    """Service for object export"""

    @staticmethod
    def build_object(cfg: RunConfig, object_id: str):
        """
        Build the object named by an id.

        Ids: R, T_s(k), S_i,j, S^p(k), D_s, D'_s, PK(n,m), poset:PK(n,m),
        poset:R, fingerprint:<address>:<address> (on the stage-cfg spine).

        Returns:
            DecoratedTree, PosetOverlay or Fingerprint
        """
        if object_id == "R":
            return RTreeService.build_rball(cfg.radius, cfg.maxlabel, with_gadgets=True).tree
        if object_id == "poset:R":
            return PosetService.order_r(RTreeService.build_rball(cfg.radius), RTreeService.build_rball(2 * cfg.radius))
        found = _T.match(object_id)
        if found:
            s, k = int(found.group(1)), int(found.group(2))
            return ConstructService.build_t(s, k, cfg.radius, load_registry(cfg)).tree
        found = _SIBLING.match(object_id)
        if found:
            registry = load_registry(cfg)
            key = (int(found.group(1)), int(found.group(2)))
            if key not in registry:
                raise ConfigurationError(f"registry has no sibling {object_id}")
            spec = registry[key]
            return ConstructService.build_t(0, spec.base_stage, cfg.radius, registry, seed=spec.seed()).tree
        found = _SPINE.match(object_id)
        if found:
            return SpineService.build_spine(int(found.group(1)), cfg.radius, cfg.maxlabel, with_gadgets=True).tree
        found = _RAY.match(object_id)
        if found:
            variant = RayVariant.POSET if found.group(1) else RayVariant.STANDARD
            window = RayService.build_ray(int(found.group(2)), -cfg.radius, cfg.radius, variant)
            return PosetService.order_ray(window) if found.group(1) else window.tree
        found = _PK.match(object_id)
        if found:
            spec = GadgetSpec(int(found.group(2)), int(found.group(3)))
            return PosetService.order_gadget(spec) if found.group(1) else GadgetService.build_pk(spec)
        found = _FINGERPRINT.match(object_id)
        if found:
            sb = SpineService.build_spine(cfg.stage, cfg.radius, cfg.maxlabel)
            u = sb.tree.index(parse_address(found.group(1)))
            v = sb.tree.index(parse_address(found.group(2)))
            return SimilarityService.fingerprint(sb, u, v)
        raise ConfigurationError(f"unknown object id {object_id}")

    @staticmethod
    def render(cfg: RunConfig, object_id: str, fmt: str) -> str:
        """Export text with the config hash embedded."""
        if fmt not in FORMATS:
            raise ConfigurationError(f"unknown format {fmt}")
        obj = ExportService.build_object(cfg, object_id)
        stamp = cfg.config_hash
        if isinstance(obj, DecoratedTree) or hasattr(obj, "covers"):
            tree = obj if isinstance(obj, DecoratedTree) else obj.base
            if fmt == "dot":
                body = obj.to_dot("P") if hasattr(obj, "covers") else TreeService.to_dot(tree, name="T")
                return f"// object {object_id} config {stamp}\n{body}"
            if fmt == "json":
                payload = {"config_hash": stamp, "object": object_id, "tree": json.loads(TreeService.to_json(tree))}
                if hasattr(obj, "covers"):
                    payload["covers"] = sorted([list(c) for c in obj.covers])
                return json.dumps(payload, sort_keys=True)
            raise ConfigurationError("ascii export is only defined for fingerprints")
        if fmt == "ascii":
            return f"# object {object_id} config {stamp}\n{obj.to_ascii()}\n"
        if fmt == "json":
            return json.dumps({"config_hash": stamp, "object": object_id, "fingerprint": obj.to_ascii()},
                              sort_keys=True)
        raise ConfigurationError("dot export is not defined for fingerprints")

    @staticmethod
    def export(cfg: RunConfig, object_id: str, fmt: str, path: str) -> Tuple[bool, str]:
        try:
            text = ExportService.render(cfg, object_id, fmt)
            with open(path, "w") as f:
                f.write(text)
            return True, f"{object_id} written to {path}"
        except Exception as e:
            return False, f"Error: {str(e)}"

    @staticmethod
    def import_tree(text: str) -> DecoratedTree:
        """Tree part of a JSON export."""
        return TreeService.from_json(json.dumps(json.loads(text)["tree"]))
