import json
from pathlib import Path

from pytest import fixture, raises

from services.construct_service import ConfigurationError
from services.export_service import ExportService
from services.harness_service import RunConfig
from services.tree_service import TreeService

REGISTRY_PATH = Path(__file__).resolve().parent.parent / "registry.json"


@fixture(scope="module")
def cfg():
    return RunConfig(stage=0, radius=3, registry_path=str(REGISTRY_PATH))


def test_dot_export_carries_the_config_hash(cfg):
    text = ExportService.render(cfg, "PK(2,2)", "dot")
    assert text.startswith(f"// object PK(2,2) config {cfg.config_hash}\n")
    assert "digraph T {" in text


def test_json_export_imports_back(cfg):
    text = ExportService.render(cfg, "PK(2,2)", "json")
    assert json.loads(text)["config_hash"] == cfg.config_hash
    tree = ExportService.import_tree(text)
    assert len(tree) == 6
    assert TreeService.is_isomorphic(tree, ExportService.build_object(cfg, "PK(2,2)"), True)


def test_poset_exports_draw_covers(cfg):
    text = ExportService.render(cfg, "poset:PK(2,2)", "dot")
    assert text.count("->") == 5
    payload = json.loads(ExportService.render(cfg, "D'_1", "json"))
    assert payload["covers"]


def test_fingerprint_export(cfg):
    text = ExportService.render(cfg, "fingerprint:.:r+", "ascii")
    assert text.splitlines()[-1] == "< 0"


def test_trees_by_id(cfg):
    assert len(ExportService.build_object(cfg, "R")) > 0
    assert len(ExportService.build_object(cfg, "S^p(0)")) > 0
    assert len(ExportService.build_object(cfg, "T_1(0)")) > 0
    assert len(ExportService.build_object(cfg, "S_0,0")) > 0
    assert len(ExportService.build_object(cfg, "D_2")) > 0


def test_bad_requests(cfg):
    with raises(ConfigurationError):
        ExportService.build_object(cfg, "Q")
    with raises(ConfigurationError):
        ExportService.build_object(cfg, "S_4,4")
    with raises(ConfigurationError):
        ExportService.render(cfg, "PK(2,2)", "ascii")
    with raises(ConfigurationError):
        ExportService.render(cfg, "PK(2,2)", "png")


def test_export_to_file(cfg, tmp_path):
    path = tmp_path / "pk.dot"
    ok, message = ExportService.export(cfg, "PK(2,2)", "dot", str(path))
    assert ok, message
    assert path.read_text().startswith("// object PK(2,2)")
    ok, message = ExportService.export(cfg, "nothing", "dot", str(path))
    assert not ok and message.startswith("Error:")
