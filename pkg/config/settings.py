"""
Runtime configuration for conemorse.

Settings come from the environment, optionally seeded from a ``.env`` file
in the working directory:

    CONEMORSE_THREADS     worker threads for flow classification (default 1)
    CONEMORSE_LOG_LEVEL   logging level name (default WARNING)
    CONEMORSE_DATA_DIR    directory of bundled Morse datasets
"""
import logging
import os
import sys
from dataclasses import dataclass, field

from dotenv import load_dotenv

from core.errors import ConeMorseError, VALIDATION_EXIT

DEFAULT_DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                                "data", "datasets")
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class ConfigError(ConeMorseError, ValueError):
    exit_code = VALIDATION_EXIT


@dataclass(frozen=True)
class Settings:
    threads: int = 1
    log_level: str = "WARNING"
    data_dir: str = DEFAULT_DATA_DIR


def get_settings(env_file=".env"):
    """
    Read settings from the environment.

    Raises:
        ConfigError: CONEMORSE_THREADS is not a positive integer or the log
            level is unknown
    """
    load_dotenv(env_file)
    raw_threads = os.getenv("CONEMORSE_THREADS", "1")
    try:
        threads = int(raw_threads)
    except ValueError:
        raise ConfigError(f"CONEMORSE_THREADS must be an integer, got '{raw_threads}'")
    if threads < 1:
        raise ConfigError(f"CONEMORSE_THREADS must be at least 1, got {threads}")
    level = os.getenv("CONEMORSE_LOG_LEVEL", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"unknown CONEMORSE_LOG_LEVEL '{level}'")
    data_dir = os.getenv("CONEMORSE_DATA_DIR", DEFAULT_DATA_DIR)
    return Settings(threads=threads, log_level=level, data_dir=data_dir)


def configure_logging(level="WARNING"):
    """Log to stderr so that stdout carries only the report."""
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


@dataclass(frozen=True)
class RunConfig:
    """
    One CLI invocation.

    ``params`` holds the command-specific parameters; together with
    ``output_format`` and ``seed`` it fully determines the report bytes.
    """
    command: str
    params: dict = field(default_factory=dict)
    output_format: str = "json"
    out: str = None
    seed: int = None
    threads: int = 1

    COMMANDS = ("s2-example", "morse-report", "randcheck")
    FORMATS = ("json", "csv")

    def __post_init__(self):
        if self.command not in self.COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'")
        if self.output_format not in self.FORMATS:
            raise ConfigError(f"unknown output format '{self.output_format}'")
        if self.command == "randcheck" and self.seed is None:
            raise ConfigError("randcheck needs a seed")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
