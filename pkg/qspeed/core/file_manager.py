"""
Handles result files and observable matrices for qspeed
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ..errors import ConfigError
from .quantum import Operator

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """CSV cell text: 17 significant digits for reals, empty for missing values"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


class FileManager:
    """Writes result files atomically into one output directory"""

    def __init__(self, output_dir: Path):
        """
        Initialize the file manager

        Args:
            output_dir: Directory receiving every file; created on first write.
        """
        self.output_dir = Path(output_dir)

    def write_text(self, name: str, content: str) -> Path:
        """
        Write a file by way of a temporary sibling and an atomic rename

        Args:
            name: File name relative to the output directory.
            content: Text to write; newlines are written as-is.

        Returns:
            The path of the written file.
        """
        target = self.output_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(content)
            os.replace(tmp_name, target)
        except Exception as e:
            Path(tmp_name).unlink(missing_ok=True)
            raise IOError(f"Error writing to file {target}: {e}")
        logger.info("Wrote %s", target)
        return target

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
        return self.write_text(name, buffer.getvalue())

    def write_json(self, name: str, data: Any) -> Path:
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_matrix(path: Path, key: str = "observable.matrix_file") -> Operator:
    """
    Read a Hermitian observable from a whitespace-separated text matrix

    Entries use Python complex syntax (``0.5``, ``1+2j``). Lines starting
    with ``#`` are ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(key, f"matrix file not found: {path}")
    try:
        entries = np.loadtxt(path, dtype=complex, comments="#", ndmin=2)
    except ValueError as e:
        raise ConfigError(key, f"cannot parse matrix file {path}: {e}")
    try:
        return Operator(entries)
    except ValueError as e:
        raise ConfigError(key, f"{path}: {e}")
