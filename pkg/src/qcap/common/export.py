import json
import math
from dataclasses import fields, is_dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np
import pandas as pd

from qcap.common.errors import ChannelFormatError
from qcap.common.logger import logger
from qcap.common.utils import is_unbounded

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "schema"


def matrix_to_json(matrix: np.ndarray) -> list:
    """Complex matrix as nested rows of [re, im] pairs."""
    matrix = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def vector_to_json(vector: np.ndarray) -> list:
    vector = np.asarray(vector, dtype=complex).ravel()
    return [[float(z.real), float(z.imag)] for z in vector]


def _entry(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise ChannelFormatError(f"{where}: expected [re, im] pair, got {value!r}")


def matrix_from_json(data, where: str = "matrix") -> np.ndarray:
    """Parse nested [re, im] rows, ``where`` names the field in errors."""
    if not isinstance(data, list) or not data or not isinstance(data[0], list):
        raise ChannelFormatError(f"{where}: expected a non-empty list of rows")
    width = len(data[0])
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != width:
            raise ChannelFormatError(f"{where}[{i}]: expected a row of {width} entries")
        rows.append([_entry(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex)


def vector_from_json(data, where: str = "vector") -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise ChannelFormatError(f"{where}: expected a non-empty list of amplitudes")
    return np.array([_entry(v, f"{where}[{i}]") for i, v in enumerate(data)])


def _float(value: float):
    if math.isfinite(value):
        return value
    if is_unbounded(value):
        return "+inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def to_jsonable(obj: Any) -> Any:
    """Convert reports, numpy values and sentinels into plain JSON values.

    Objects with a ``to_dict`` method are converted through it, other
    dataclasses field by field. Non-finite floats become strings, the
    UNBOUNDED sentinel is written as "+inf".
    """
    if hasattr(obj, "to_dict") and not isinstance(obj, (type, pd.DataFrame)):
        return to_jsonable(obj.to_dict())
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, pd.DataFrame):
        return [to_jsonable(r) for r in obj.to_dict(orient="records")]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj if is_unbounded(obj) else float(obj))
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return matrix_to_json(obj) if obj.ndim == 2 else vector_to_json(obj)
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


class ReportEncoder(json.JSONEncoder):
    def default(self, obj):
        converted = to_jsonable(obj)
        if converted is obj:
            return super().default(obj)
        return converted


def dump_json(obj: Any, indent: Optional[int] = 2) -> str:
    """Deterministic JSON text: sorted keys, no NaN literals."""
    return json.dumps(
        to_jsonable(obj), cls=ReportEncoder, sort_keys=True, indent=indent, allow_nan=False
    )


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    with open(SCHEMA_DIR / f"{name}.schema.json", "r") as f:
        return json.load(f)


def validate_document(document: Any, schema_name: str) -> Any:
    """Validate a JSON document against a shipped schema.

    Args:
        document: parsed JSON value.
        schema_name (str): schema file stem under ``qcap/schema``.

    Returns:
        The document, unchanged.

    Raises:
        ChannelFormatError: with the path of the first offending field.
    """
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    error = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if error is not None:
        where = "/".join(str(p) for p in error.absolute_path) or "<root>"
        raise ChannelFormatError(f"{schema_name}: field '{where}': {error.message}")
    return document


def export_table(df: pd.DataFrame, csv_path: Optional[str] = None) -> pd.DataFrame:
    """Write a result table to CSV when a path is given."""
    if csv_path:
        logger.info(f"Exporting DataFrame to {csv_path}")
        df.to_csv(csv_path, index=False)
    return df
