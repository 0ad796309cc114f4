import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import metadata, resources

import numpy as np
import pandas as pd

from utils import __version__
from utils.errors import ConfigInvalid
from utils.exact_field import ExactScalar

logger = logging.getLogger(__name__)

VERSIONED_PACKAGES = ("numpy", "scipy", "pandas", "sympy")


def to_jsonable(value):
    """Plain JSON types; exact scalars become strings, complex numbers [re, im]."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (Fraction, ExactScalar)):
        return str(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def canonical_json(payload):
    """Sorted keys, shortest round-trip floats, no NaN."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)


def payload_hash(payload):
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def load_schema(name):
    """Bundled JSON schema, e.g. load_schema("run_report")."""
    text = resources.files("utils").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def package_versions():
    versions = {"densitylab": __version__, "python": platform.python_version()}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


@dataclass
class RunReport:
    config: dict
    results: object
    versions: dict = field(default_factory=package_versions)
    wall_time: float = None
    rows: list = field(default_factory=list)

    @property
    def payload_sha256(self):
        return payload_hash(self.results)

    def to_dict(self):
        report = {
            "config": self.config,
            "results": self.results,
            "versions": self.versions,
            "payload_sha256": self.payload_sha256,
        }
        if self.wall_time is not None:
            report["wall_time"] = self.wall_time
        return report


class ExportManager:
    """Deterministic JSON/CSV emission for run reports."""

    def __init__(self):
        self.supported_formats = ["json", "csv"]

    def export_report(self, report, format_type="json"):
        """
        Serialize a RunReport.

        Args:
            report: RunReport
            format_type: 'json' for the full report, 'csv' for its result rows

        Returns:
            bytes
        """
        if format_type == "json":
            return self._export_json(report)
        elif format_type == "csv":
            return self._export_csv(report.rows)
        else:
            raise ConfigInvalid(f"Unsupported format: {format_type}")

    def _export_json(self, report):
        return (canonical_json(report.to_dict()) + "\n").encode("utf-8")

    def _export_csv(self, rows):
        """RFC 4180 with a header row and CRLF line endings."""
        if not rows:
            raise ConfigInvalid("This command produced no tabular rows for CSV output")
        df = pd.DataFrame([{k: _csv_cell(v) for k, v in row.items()} for row in rows])
        buffer = io.StringIO()
        df.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\r\n")
        return buffer.getvalue().encode("utf-8")

    def write(self, data, path):
        """Write to a path atomically (temp file + rename), or to stdout for '-'."""
        if path in (None, "-"):
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
            return
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        handle, temp_path = tempfile.mkstemp(prefix=".densitylab-", dir=directory)
        try:
            with os.fdopen(handle, "wb") as temp:
                temp.write(data)
                temp.flush()
                os.fsync(temp.fileno())
            os.replace(temp_path, path)
        except BaseException:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise
        logger.info("Wrote %d bytes to %s", len(data), path)


def _csv_cell(value):
    if isinstance(value, (list, tuple, set, frozenset)):
        return ";".join(str(to_jsonable(v)) for v in value)
    if isinstance(value, (Fraction, ExactScalar)):
        return str(value)
    return value
