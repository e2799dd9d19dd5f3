"""
File I/O utility for conemorse.

Reads Morse datasets and writes reports. JSON is written with sorted keys,
two-space indentation and a trailing newline so identical reports are
byte-identical; CSV goes through pandas.
"""
import io
import json
import logging
import os

import pandas as pd

from core.errors import SchemaError

logger = logging.getLogger(__name__)


def dumps_json(data):
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dumps_csv(df):
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


class FileIO:
    """
    Utility for reading and writing local files.
    """

    def __init__(self, base_dir):
        """
        Initialize the file I/O utility.

        Args:
            base_dir (str): Base directory for relative paths
        """
        self.base_dir = base_dir
        logger.debug(f"Initialized FileIO with base directory: {base_dir}")

    def _resolve(self, filepath):
        if not os.path.isabs(filepath):
            filepath = os.path.join(self.base_dir, filepath)
        return filepath

    def exists(self, filepath):
        return os.path.exists(self._resolve(filepath))

    def read_json(self, filepath, default=None):
        """
        Read a JSON file.

        Args:
            filepath (str): Path to the JSON file (relative or absolute)
            default: Value to return if the file doesn't exist

        Returns:
            dict: JSON data or default if the file doesn't exist

        Raises:
            SchemaError: the file exists but is not valid JSON
        """
        filepath = self._resolve(filepath)
        if not os.path.exists(filepath):
            logger.warning(f"File not found: {filepath}")
            return default

        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            logger.error(f"Error reading JSON file {filepath}: {e}")
            raise SchemaError(f"{filepath} is not valid JSON: {e}")
        logger.info(f"Read JSON file: {filepath}")
        return data

    def write_text(self, text, filepath):
        filepath = self._resolve(filepath)
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        logger.info(f"Wrote file: {filepath}")
        return True

    def write_json(self, data, filepath):
        """
        Write data to a JSON file in canonical form.

        Args:
            data: JSON-serialisable data
            filepath (str): Path to the JSON file (relative or absolute)

        Returns:
            bool: True if successful
        """
        return self.write_text(dumps_json(data), filepath)

    def read_csv(self, filepath, default=None):
        filepath = self._resolve(filepath)
        if not os.path.exists(filepath):
            logger.warning(f"File not found: {filepath}")
            return default
        df = pd.read_csv(filepath)
        logger.info(f"Read CSV file: {filepath}")
        return df

    def write_csv(self, df, filepath):
        """
        Write a pandas DataFrame to a CSV file without its index.

        Returns:
            bool: True if successful
        """
        return self.write_text(dumps_csv(df), filepath)

    def list_json(self, directory):
        """Names (without extension) of the JSON files in ``directory``, sorted."""
        directory = self._resolve(directory)
        if not os.path.isdir(directory):
            logger.warning(f"Directory not found: {directory}")
            return []
        return sorted(os.path.splitext(name)[0] for name in os.listdir(directory)
                      if name.endswith('.json'))
