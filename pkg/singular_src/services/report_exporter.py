"""
Report Exporter Service - writes solver outputs as CSV, JSON and Markdown.
Float columns use 17 significant digits so identical runs give identical files.
"""
import csv
import json
import logging
import os
import re
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import residual
from singular_src.services.errors import SingularityError
from singular_src.services.states import CheckReport, EigenPair, GridFunction, ProblemSpec

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ["r", "u", "du", "residual"]
EIGEN_COLUMNS = ["lambda1", "iterations", "residual"]
CHECK_COLUMNS = ["check", "passed", "measured", "expected", "tolerance"]


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


class ReportExporter:
    """Service for exporting solver results to files."""

    @staticmethod
    def output_directory(base: str, command: str) -> str:
        """Create and return ``<base>/<command>``."""
        path = os.path.join(base, ReportExporter.sanitize_filename(command))
        os.makedirs(path, exist_ok=True)
        return path

    @staticmethod
    def profile_rows(problem: ProblemSpec, profile: GridFunction) -> List[List[str]]:
        """
        Rows ``r,u,du,residual``: du by centered differences (one-sided at the
        ends), residual from the pointwise evaluator (empty where u <= 0 inside).
        """
        du = np.gradient(profile.values, profile.nodes)
        try:
            res = residual(problem, profile).values
        except SingularityError as e:
            logger.warning(f"residual column left empty: {e}")
            res = [None] * profile.size
        return [[_fmt(r), _fmt(u), _fmt(d), _fmt(q)]
                for r, u, d, q in zip(profile.nodes, profile.values, du, res)]

    @staticmethod
    def write_csv(path: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        logger.info(f"wrote {path}")
        return path

    @staticmethod
    def write_profile_csv(path: str, problem: ProblemSpec, profile: GridFunction) -> str:
        return ReportExporter.write_csv(path, PROFILE_COLUMNS, ReportExporter.profile_rows(problem, profile))

    @staticmethod
    def write_eigen_csv(path: str, pairs: Sequence[EigenPair]) -> str:
        rows = [[pair.lambda1, pair.iterations, pair.residual] for pair in pairs]
        return ReportExporter.write_csv(path, EIGEN_COLUMNS, rows)

    @staticmethod
    def check_row(check: CheckReport) -> List[str]:
        return [
            check.check_name,
            "" if check.passed is None else _fmt(check.passed),
            ";".join(_fmt(v) for v in check.measured),
            ";".join(_fmt(v) for v in check.expected),
            _fmt(check.tolerance),
        ]

    @staticmethod
    def write_checks_csv(path: str, checks: Sequence[CheckReport]) -> str:
        return ReportExporter.write_csv(path, CHECK_COLUMNS, [ReportExporter.check_row(c) for c in checks])

    @staticmethod
    def write_summary_json(path: str, payload: Dict[str, Any]) -> str:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_finite(payload), f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
        logger.info(f"wrote {path}")
        return path

    @staticmethod
    def export_checks_markdown(checks: Sequence[CheckReport], title: str = "Verification",
                               metadata: Optional[Dict[str, Any]] = None) -> str:
        """
        Render a check battery as markdown.

        Args:
            checks: Check reports in execution order
            title: Document title
            metadata: Key/value pairs for the front matter

        Returns:
            Markdown text
        """
        md = f"# {title}\n\n"

        if metadata:
            md += "---\n"
            for key, value in metadata.items():
                md += f"{key}: {value}\n"
            md += "---\n\n"

        md += "| check | verdict | measured | expected | tolerance |\n"
        md += "|---|---|---|---|---|\n"
        for check in checks:
            verdict = "info" if check.passed is None else ("pass" if check.passed else "FAIL")
            measured = ", ".join(f"{v:.6g}" for v in check.measured)
            expected = ", ".join(f"{v:.6g}" for v in check.expected)
            md += f"| {check.check_name} | {verdict} | {measured} | {expected} | {check.tolerance:g} |\n"

        details = [c for c in checks if c.detail]
        if details:
            md += "\n## Details\n\n"
            for check in details:
                md += f"- **{check.check_name}**: {check.detail}\n"
        return md

    @staticmethod
    def write_markdown(path: str, markdown: str) -> str:
        with open(path, "w", encoding="utf-8") as f:
            f.write(markdown)
        logger.info(f"wrote {path}")
        return path

    @staticmethod
    def sanitize_filename(filename: str) -> str:
        """
        Sanitize a filename for safe file export.

        Args:
            filename: Original filename

        Returns:
            Sanitized filename
        """
        sanitized = re.sub(r'[<>:"/\\|?*]', '', filename)
        sanitized = sanitized[:200]
        return sanitized.replace(' ', '_')


def prepare_output(directory: Optional[str], command: str) -> str:
    """Convenience function: output folder of a command, created on demand."""
    return ReportExporter.output_directory(directory or settings.OUTPUT_DIR, command)


def check_summary(checks: Sequence[CheckReport]) -> List[Dict[str, Any]]:
    """Check reports as plain dicts for summary.json."""
    return [check.model_dump(exclude={"context"}) for check in checks]


def _finite(value: Any) -> Any:
    """Non-finite floats become strings so the file stays strict JSON."""
    if isinstance(value, dict):
        return {str(k): _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    if isinstance(value, (float, np.floating)) and not np.isfinite(value):
        return str(float(value))
    return value


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if hasattr(value, "model_dump"):
        return value.model_dump()
    return str(value)
