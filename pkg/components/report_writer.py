"""
Report rendering for the command line.
"""
import logging
import sys

import pandas as pd

from data.file_io import FileIO, dumps_csv, dumps_json

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["dataset", "name", "source", "degree", "relation", "lhs", "rhs", "slack", "holds"]


def render(payload, rows, output_format, columns=None):
    """
    Render a command result.

    Args:
        payload (dict): full report, used for JSON output
        rows (list): flat records, used for CSV output
        output_format (str): "json" or "csv"
        columns (list): CSV column order (default: record columns)

    Returns:
        str
    """
    if output_format == "json":
        return dumps_json(payload)
    frame = pd.DataFrame(rows, columns=columns or RECORD_COLUMNS)
    return dumps_csv(frame)


def emit(text, out=None, file_io=None):
    """Write ``text`` to ``out`` or stdout."""
    if out:
        (file_io or FileIO(".")).write_text(text, out)
        return
    sys.stdout.write(text)
    sys.stdout.flush()
