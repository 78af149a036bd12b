import json
from pathlib import Path

from pytest import fixture, raises

from services.construct_service import ConfigurationError
from services.harness_service import ENGINE_MAPS, SUITES, HarnessService, RunConfig, all_trees, minimal_radius

REGISTRY_PATH = Path(__file__).resolve().parent.parent / "registry.json"


@fixture(scope="module")
def gadget_cfg():
    return RunConfig(suites=("gadget-table",))


@fixture(scope="module")
def gadget_reports(gadget_cfg):
    return HarnessService.run_suites(gadget_cfg)


def test_twelve_suites_are_registered():
    assert len(SUITES) == 12
    assert RunConfig().selected == sorted(SUITES)


def test_minimal_radius():
    assert [minimal_radius(k) for k in range(4)] == [3, 5, 7, 9]


def test_default_config_is_valid():
    assert RunConfig().validate() == RunConfig()


def test_unknown_suite_is_rejected():
    with raises(ConfigurationError):
        RunConfig(suites=("bogus",)).validate()
    with raises(ConfigurationError):
        HarnessService.run_suite(RunConfig(), "bogus")


def test_radius_below_minimum_is_rejected():
    with raises(ConfigurationError):
        RunConfig(stage=2, radius=6).validate()
    with raises(ConfigurationError):
        RunConfig(sib_count=0).validate()


def test_config_hash():
    base = RunConfig()
    assert len(base.config_hash) == 16
    assert base.config_hash == RunConfig().config_hash
    assert RunConfig(seed=1).config_hash != base.config_hash
    assert RunConfig(out_dir="elsewhere").config_hash == base.config_hash
    assert RunConfig(suites=tuple(sorted(SUITES))).config_hash == base.config_hash


def test_gadget_suite_passes(gadget_reports, gadget_cfg):
    assert [r.suite for r in gadget_reports] == ["gadget-table"]
    report = gadget_reports[0]
    assert report.passed
    assert report.cases == 48 * 48
    assert report.details["equal_path_rule_disagreements"] == 264
    assert report.config_hash == gadget_cfg.config_hash


def test_report_bodies_are_deterministic(gadget_reports, gadget_cfg):
    again = HarnessService.run_suites(gadget_cfg)
    assert HarnessService.body_bytes(again) == HarnessService.body_bytes(gadget_reports)


def test_reports_are_written_as_json_lines(gadget_reports, tmp_path):
    cfg = RunConfig(suites=("gadget-table",), out_dir=str(tmp_path))
    ok, message = HarnessService.write_reports(cfg, gadget_reports)
    assert ok, message
    lines = HarnessService.report_path(cfg).read_text().splitlines()
    assert len(lines) == 1
    line = json.loads(lines[0])
    assert line["body"]["suite"] == "gadget-table"
    assert line["body"]["passed"] is True
    assert set(line) == {"body", "wall_time", "timestamp"}


def test_summary_lists_every_suite(gadget_reports):
    text = HarnessService.summary(gadget_reports)
    assert text.startswith("PASS  gadget-table")


def test_worker_count(monkeypatch):
    monkeypatch.delenv("TREE_SIBLINGS_WORKERS", raising=False)
    assert HarnessService.worker_count() == 1
    monkeypatch.setenv("TREE_SIBLINGS_WORKERS", "3")
    assert HarnessService.worker_count() == 3
    monkeypatch.setenv("TREE_SIBLINGS_WORKERS", "many")
    with raises(ConfigurationError):
        HarnessService.worker_count()


@fixture(scope="module")
def main_report():
    return HarnessService.run_suite(RunConfig(registry_path=str(REGISTRY_PATH)), "main-lemma")


def test_main_lemma_passes(main_report):
    assert main_report.cases > 0
    assert main_report.passed, main_report.violations[:3]


def test_embfinite_passes():
    report = HarnessService.run_suite(RunConfig(registry_path=str(REGISTRY_PATH)), "embfinite")
    assert report.cases > 0
    assert report.passed, report.violations[:3]


def test_main_lemma_checks_engine_maps_and_the_control(main_report):
    report = main_report
    assert 1 <= report.details["stage0.engine_maps"] <= ENGINE_MAPS
    assert 1 <= report.details["stage1.engine_maps"] <= ENGINE_MAPS
    assert report.details["negative_control_flagged"] > 0


def test_iso_oracle_covers_every_small_tree():
    report = HarnessService.run_suite(RunConfig(), "iso-oracle")
    assert report.passed, report.violations[:3]
    assert report.details["unlabeled_classes"] == 23
    assert report.cases > 702 + 48 + 3 * 200


def test_all_trees_counts():
    assert [len(all_trees(n)) for n in range(1, 10)] == [1, 1, 1, 2, 3, 6, 11, 23, 47]
