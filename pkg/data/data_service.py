"""
Data service for conemorse.

One entry point for Morse datasets, wherever they come from:
- a JSON file given by path
- a bundled dataset given by name (``data/datasets/<name>.json``)
- in test mode, datasets built in memory from their closed forms
"""
import logging
import math
import os

from config.settings import get_settings
from core.errors import SchemaError
from core.morse_core import CriticalPoint, DeRhamData, MorseData
from data.file_io import FileIO
from data.morse_schema import parse_morse_data, serialize_morse_data

logger = logging.getLogger(__name__)

BUNDLED = ("s2_height", "s2_quadratic", "t2_perfect_dtheta")


class DataService:
    """
    Unified access to Morse datasets.
    """

    def __init__(self, base_dir=None, data_dir=None, test_mode=False):
        """
        Initialize the data service.

        Args:
            base_dir (str): Base directory for relative paths (default: cwd)
            data_dir (str): Directory of bundled datasets (default: CONEMORSE_DATA_DIR)
            test_mode (bool): If True, build bundled datasets in memory
        """
        self.base_dir = base_dir or os.getcwd()
        self.data_dir = data_dir or get_settings().data_dir
        self.test_mode = test_mode
        self.file_io = FileIO(self.base_dir)
        logger.debug(f"DataService: base_dir={self.base_dir}, data_dir={self.data_dir}, test_mode={test_mode}")

    def list_datasets(self):
        if self.test_mode:
            return list(BUNDLED)
        return self.file_io.list_json(self.data_dir)

    def resolve(self, source):
        """Path of ``source``: an existing file, or the bundled dataset of that name."""
        if self.file_io.exists(source):
            return self.file_io._resolve(source)
        bundled = os.path.join(self.data_dir, f"{source}.json")
        if os.path.exists(bundled):
            return bundled
        raise SchemaError(f"no such file or bundled dataset: '{source}'")

    def load_morse_data(self, source, validate=True):
        """
        Load, parse and (optionally) validate a Morse dataset.

        Args:
            source (str): path to a JSON file or the name of a bundled dataset
            validate (bool): also check d o d = 0 and the Leibniz rule

        Returns:
            MorseData

        Raises:
            SchemaError: unreadable or malformed input
            BoundaryNotSquareZero, LeibnizViolation: from validation
        """
        if self.test_mode and source in BUNDLED:
            data = self._get_test_morse_data(source)
        else:
            path = self.resolve(source)
            raw = self.file_io.read_json(path)
            name = os.path.splitext(os.path.basename(path))[0]
            data = parse_morse_data(raw, name=name)
            logger.info(f"Loaded dataset '{name}' with {len(data.points)} critical points")
        if validate:
            data.validate()
        return data

    def save_morse_data(self, data, filepath):
        return self.file_io.write_json(serialize_morse_data(data), filepath)

    def _get_test_morse_data(self, name):
        """Bundled datasets rebuilt from their closed forms."""
        if name == "s2_quadratic":
            # imported here: the geometry stack is only needed for this dataset
            from geometry.forms import family_s
            from geometry.sphere_lab import analytic_morse_data
            return analytic_morse_data(family_s(0.3), name=name)
        if name == "s2_height":
            return MorseData(
                dimension=2,
                points=(CriticalPoint("S", 0), CriticalPoint("N", 2)),
                flow_counts={},
                psi_degree=2,
                psi_integrals={("N", "S"): 4 * math.pi},
                de_rham=DeRhamData((1, 0, 1), (1, 0, 0)),
                name=name,
            )
        if name == "t2_perfect_dtheta":
            # f = cos(theta1) + cos(theta2); each moduli space of index difference
            # one is a pair of flow lines, and dtheta1 integrates to 2*pi over
            # those running around the first circle
            return MorseData(
                dimension=2,
                points=(CriticalPoint("min", 0), CriticalPoint("a", 1),
                        CriticalPoint("b", 1), CriticalPoint("max", 2)),
                flow_counts={},
                psi_degree=1,
                psi_integrals={("a", "min"): 2 * math.pi, ("b", "min"): 0.0,
                               ("max", "a"): 0.0, ("max", "b"): 2 * math.pi},
                de_rham=DeRhamData((1, 2, 1), (1, 1, 0)),
                name=name,
            )
        raise SchemaError(f"no test dataset '{name}'")
