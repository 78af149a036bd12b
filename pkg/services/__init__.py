"""
Services Package - Construction and verification services for the tree-siblings verifier
"""

from .tree_service import (
    DecoratedTree,
    DecorationMatch,
    EmbeddingMap,
    FrontierPolicy,
    Kind,
    TreeBuilder,
    TreeService,
    TreeStructureError,
    TruncationError,
    VertexRecord,
)
from .lemma_report import LemmaReport
from .gadget_service import GadgetService, GadgetSpec, ParameterError
from .rtree_service import RBall, RTreeService, UndefinedAtBaseError
from .ray_service import RayService, RayVariant, RayWindow
from .spine_service import SpineBall, SpineService
from .construct_service import ConfigurationError, ConstructService, Seed, SiblingSpec, TBall
from .similarity_service import Fingerprint, SimilarityError, SimilarityMap, SimilarityService
from .poset_service import PosetOverlay, PosetService
from .harness_service import HarnessService, RunConfig, SuiteReport, SUITES, minimal_radius
from .report_service import ReportService
from .export_service import ExportService

__all__ = [
    "DecoratedTree",
    "DecorationMatch",
    "EmbeddingMap",
    "FrontierPolicy",
    "Kind",
    "TreeBuilder",
    "TreeService",
    "TreeStructureError",
    "TruncationError",
    "VertexRecord",
    "LemmaReport",
    "GadgetService",
    "GadgetSpec",
    "ParameterError",
    "RBall",
    "RTreeService",
    "UndefinedAtBaseError",
    "RayService",
    "RayVariant",
    "RayWindow",
    "SpineBall",
    "SpineService",
    "ConfigurationError",
    "ConstructService",
    "Seed",
    "SiblingSpec",
    "TBall",
    "Fingerprint",
    "SimilarityError",
    "SimilarityMap",
    "SimilarityService",
    "PosetOverlay",
    "PosetService",
    "HarnessService",
    "RunConfig",
    "SuiteReport",
    "SUITES",
    "minimal_radius",
    "ReportService",
    "ExportService",
]
