from pathlib import Path

from pytest import fixture

import db_utils
from database import create_tables
from services.construct_service import ConstructService
from services.rtree_service import RTreeService
from services.spine_service import SpineService

REGISTRY_PATH = Path(__file__).resolve().parent.parent / "registry.json"


@fixture
def tmp_db(tmp_path, monkeypatch):
    monkeypatch.setattr(db_utils, "DB_NAME", str(tmp_path / "verification.db"))
    create_tables()
    return db_utils.DB_NAME


@fixture(scope="session")
def registry():
    return ConstructService.load_registry(str(REGISTRY_PATH))


@fixture(scope="session")
def rball6():
    return RTreeService.build_rball(6)


@fixture(scope="session")
def spine0():
    return SpineService.build_spine(0, 5)


@fixture(scope="session")
def spine1():
    return SpineService.build_spine(1, 6)
