"""
Report Service - Handles storage, querying and export of suite reports
"""

import json
import logging
from datetime import datetime
from io import BytesIO
from typing import Optional, Tuple

import pandas as pd

from db_utils import get_connection

logger = logging.getLogger(__name__)


class ReportService:
    """Service for suite report history"""

    @staticmethod
    def save_report(run_id: str, report: dict, wall_time: float) -> Tuple[bool, str]:
        """
        Store one suite report.

        Args:
            run_id: Identifier shared by the suites of one verify run
            report: Deterministic report body (suite, cases, violations, config_hash, ...)
            wall_time: Seconds spent in the suite

        Returns:
            Tuple of (success: bool, message: str)
        """
        try:
            conn = get_connection()
            c = conn.cursor()
            c.execute("""
                INSERT INTO suite_reports (run_id, suite, cases, violations, passed, wall_time,
                                           config_hash, created_at, body)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                run_id,
                report["suite"],
                report["cases"],
                len(report["violations"]),
                int(not report["violations"]),
                wall_time,
                report["config_hash"],
                datetime.now().isoformat(timespec="seconds"),
                json.dumps(report, sort_keys=True),
            ))
            conn.commit()
            conn.close()
            return True, f"Report for {report['suite']} saved"
        except Exception as e:
            return False, f"Error: {str(e)}"

    @staticmethod
    def save_registry_snapshot(path: str, body: str, entries: int) -> Tuple[bool, str]:
        try:
            conn = get_connection()
            c = conn.cursor()
            c.execute("""
                INSERT INTO registry_snapshots (path, entries, created_at, body)
                VALUES (?, ?, ?, ?)
            """, (path, entries, datetime.now().isoformat(timespec="seconds"), body))
            conn.commit()
            conn.close()
            return True, "Registry snapshot saved"
        except Exception as e:
            return False, f"Error: {str(e)}"

    @staticmethod
    def get_all_reports() -> pd.DataFrame:
        """Get all stored suite reports, newest first"""
        try:
            conn = get_connection()
            df = pd.read_sql("""
                SELECT run_id, suite, cases, violations, passed, wall_time, config_hash, created_at
                FROM suite_reports
                ORDER BY id DESC
            """, conn)
            conn.close()
            return df
        except Exception as e:
            logger.error("Error fetching reports: %s", e)
            return pd.DataFrame()

    @staticmethod
    def filter_reports(suite: Optional[str] = None, config_hash: Optional[str] = None) -> pd.DataFrame:
        """Filter reports by suite and/or config hash"""
        try:
            df = ReportService.get_all_reports()
            if df.empty:
                return df

            if suite and suite != "All":
                df = df[df["suite"] == suite]

            if config_hash and config_hash != "All":
                df = df[df["config_hash"] == config_hash]

            return df
        except Exception as e:
            logger.error("Error filtering reports: %s", e)
            return pd.DataFrame()

    @staticmethod
    def get_run_summary() -> pd.DataFrame:
        """Pass/fail counts and total wall time per run"""
        try:
            df = ReportService.get_all_reports()
            if df.empty:
                return df

            summary = df.groupby(["run_id", "config_hash"]).agg(
                suites=("suite", "count"),
                passed=("passed", "sum"),
                violations=("violations", "sum"),
                wall_time=("wall_time", "sum"),
                created_at=("created_at", "max"),
            ).reset_index()
            summary["failed"] = summary["suites"] - summary["passed"]
            return summary.sort_values("created_at", ascending=False).reset_index(drop=True)
        except Exception as e:
            logger.error("Error creating run summary: %s", e)
            return pd.DataFrame()

    @staticmethod
    def export_to_excel(df: pd.DataFrame, sheet_name: str = "Reports") -> bytes:
        """
        Export a report table to Excel.

        Args:
            df: Table to export
            sheet_name: Worksheet name

        Returns:
            Excel file contents
        """
        output = BytesIO()
        with pd.ExcelWriter(output, engine="xlsxwriter") as writer:
            df.to_excel(writer, index=False, sheet_name=sheet_name)
        return output.getvalue()
