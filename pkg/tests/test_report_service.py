from services.report_service import ReportService


def body(suite, violations=(), config_hash="abc"):
    return {"suite": suite, "cases": 10, "violations": list(violations), "exceptions": [],
            "details": {}, "config_hash": config_hash, "passed": not violations}


def test_empty_history(tmp_db):
    assert ReportService.get_all_reports().empty
    assert ReportService.get_run_summary().empty


def test_save_and_summarise(tmp_db):
    assert ReportService.save_report("run1", body("gadget-table"), 0.5)[0]
    assert ReportService.save_report("run1", body("noniso", [{"s": 0}]), 1.5)[0]
    assert ReportService.save_report("run2", body("noniso", config_hash="def"), 1.0)[0]

    df = ReportService.get_all_reports()
    assert len(df) == 3
    assert ReportService.filter_reports(suite="noniso").shape[0] == 2
    assert ReportService.filter_reports(config_hash="def").shape[0] == 1
    assert ReportService.filter_reports(suite="All", config_hash="All").shape[0] == 3

    summary = ReportService.get_run_summary().set_index("run_id")
    assert summary.loc["run1", "suites"] == 2
    assert summary.loc["run1", "failed"] == 1
    assert summary.loc["run2", "failed"] == 0


def test_registry_snapshot(tmp_db):
    ok, message = ReportService.save_registry_snapshot("registry.json", "[]", 0)
    assert ok, message


def test_excel_export(tmp_db):
    ReportService.save_report("run1", body("gadget-table"), 0.5)
    data = ReportService.export_to_excel(ReportService.get_all_reports())
    assert data[:2] == b"PK"
