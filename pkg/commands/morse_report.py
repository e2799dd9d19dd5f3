"""
morse-report: the full cone Morse report for a Morse dataset.
"""
import logging

from core.morse_core import inequality_report
from data.data_service import DataService

logger = logging.getLogger(__name__)


def cmd_morse_report(config, data_service=None):
    """
    Load, validate and report on ``config.params["input"]``.

    Returns:
        tuple: (payload dict, CSV rows)

    Raises:
        SchemaError, BoundaryNotSquareZero, LeibnizViolation: invalid input
        InequalityViolated: some inequality failed (the report is attached)
    """
    service = data_service or DataService()
    data = service.load_morse_data(config.params["input"])
    report = inequality_report(data, raise_on_violation=True)
    logger.info(f"Report for '{data.name}': {len(report.records())} records, all hold")
    return morse_report_payload(report), report.to_rows()


def morse_report_payload(report):
    return {"command": "morse-report", "report": report.to_dict()}
