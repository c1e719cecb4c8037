"""CSV artifacts with JSON provenance sidecars."""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Fixed 17-significant-digit text for floats, plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    if value is None:
        return ""
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    return value


class ArtifactWriter:
    """Writes run outputs into one directory, each CSV with a sidecar."""

    def __init__(self, directory: str, config_hash: str, fmt: str = "csv"):
        """
        Initialize the writer.

        Args:
            directory: Output directory, created on first write
            config_hash: Hash of the run configuration embedded in every sidecar
            fmt: "csv" or "json", the format used by write_table
        """
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown table format {fmt!r}")
        self.directory = Path(directory)
        self.config_hash = config_hash
        self.fmt = fmt
        self.written: List[Path] = []

    def path(self, name: str) -> Path:
        return self.directory / name

    def _ensure_directory(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                  sidecar: Optional[Dict[str, Any]] = None) -> Path:
        """
        Write a CSV file and its sidecar.

        Args:
            name: File name, e.g. "metric.csv"
            columns: Header
            rows: Row values in column order
            sidecar: Extra fields for the sidecar

        Returns:
            Path of the CSV file
        """
        self._ensure_directory()
        target = self.path(name)
        count = 0
        with open(target, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise ValueError(f"{name}: row has {len(row)} values for {len(columns)} columns")
                writer.writerow([format_value(v) for v in row])
                count += 1
        self.written.append(target)
        self.write_sidecar(name, dict(sidecar or {}, columns=list(columns), rows=count))
        logger.info(f"Wrote {count} rows to {target}")
        return target

    def write_table(self, base: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                    sidecar: Optional[Dict[str, Any]] = None) -> Path:
        """Write a table as ``<base>.csv``, or ``<base>.rows.json`` in json format."""
        if self.fmt == "csv":
            return self.write_csv(f"{base}.csv", columns, rows, sidecar)
        self._ensure_directory()
        target = self.path(f"{base}.rows.json")
        records = [
            {c: _jsonable(v) for c, v in zip(columns, row)} for row in rows
        ]
        with open(target, "w") as f:
            json.dump(records, f, indent=2)
        self.written.append(target)
        self.write_sidecar(f"{base}.json", dict(sidecar or {}, columns=list(columns), rows=len(records)))
        logger.info(f"Wrote {len(records)} rows to {target}")
        return target

    def write_text(self, name: str, lines: Iterable[Sequence[Any]], sep: str = " ",
                   sidecar: Optional[Dict[str, Any]] = None) -> Path:
        """
        Write whitespace-separated plot data with no header.

        The sidecar is ``<name>.json`` so that ``region.dat`` and ``region.csv``
        keep separate provenance files.
        """
        self._ensure_directory()
        target = self.path(name)
        count = 0
        with open(target, "w") as f:
            for line in lines:
                f.write(sep.join(format_value(v) for v in line) + "\n")
                count += 1
        self.written.append(target)
        self.write_sidecar(f"{name}.json", dict(sidecar or {}, rows=count))
        logger.info(f"Wrote {target}")
        return target

    def write_sidecar(self, name: str, fields: Dict[str, Any]) -> Path:
        """Write ``<stem>.json`` next to ``name``."""
        from .. import __version__

        self._ensure_directory()
        target = self.path(Path(name).stem + ".json")
        data = {k: _jsonable(v) for k, v in fields.items()}
        data["config_hash"] = self.config_hash
        data["g2flow_version"] = __version__
        with open(target, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True)
        self.written.append(target)
        logger.debug(f"Saved sidecar {target}")
        return target

    def load_sidecar(self, name: str) -> Optional[Dict[str, Any]]:
        """
        Read a sidecar back.

        Args:
            name: The CSV name or the sidecar name

        Returns:
            The stored fields, or None if missing or unreadable
        """
        target = self.path(Path(name).stem + ".json")
        if not target.exists():
            return None
        try:
            with open(target, "r") as f:
                data = json.load(f)
            logger.info(f"Loaded sidecar from {target}")
            return data
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error loading sidecar {target}: {e}")
            return None
