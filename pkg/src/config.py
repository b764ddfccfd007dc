"""Environment-driven defaults and logging setup."""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()  # Loads PROXSPLIT_* overrides from .env if present

DEFAULT_OUTDIR = Path(os.getenv("PROXSPLIT_OUTDIR", "out"))
DEFAULT_SEED = int(os.getenv("PROXSPLIT_SEED", "0"))
DEFAULT_VERBOSITY = int(os.getenv("PROXSPLIT_VERBOSITY", "1"))

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbosity: int = DEFAULT_VERBOSITY) -> None:
    """Route library logs to stderr; silent runs only show warnings."""
    level = logging.WARNING if verbosity <= 0 else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
