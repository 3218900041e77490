import json
import logging
from pathlib import Path
from typing import Any

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def read_file(file_path):
    """Read the contents of a file and return it as a string."""
    return Path(file_path).read_text(encoding="utf-8")


def write_file(file_path, content):
    """Write the given content to a file, creating parent directories."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")
    return path


def dump_json(data: Any) -> str:
    """Serialize with sorted keys and a trailing newline so repeated runs are byte-identical."""
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_json(file_path) -> Any:
    return json.loads(read_file(file_path))


def configure_logging(verbose: bool = False) -> None:
    """Send log records to stderr; stdout stays reserved for data."""
    root = logging.getLogger("categorytrees")
    root.handlers.clear()
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
