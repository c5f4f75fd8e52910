import json
import re
from dataclasses import dataclass

import numpy as np
import pandas as pd
import pytest

from qcap.common.errors import ChannelFormatError
from qcap.common.export import (
    dump_json,
    export_table,
    matrix_from_json,
    matrix_to_json,
    to_jsonable,
    validate_document,
    vector_from_json,
)
from qcap.common.utils import UNBOUNDED, SmoothingMethod
from qcap.quantum.channel import amplitude_damping


@dataclass
class Sample:
    value: float
    method: SmoothingMethod


def test_matrix_json_accepts_numbers_and_pairs():
    m = matrix_from_json([[1, [0, -1]], [[0, 1], 0.5]])
    assert m.dtype == complex
    assert m[0, 1] == -1j
    assert m[1, 1] == 0.5
    assert np.allclose(matrix_from_json(matrix_to_json(m)), m)
    assert np.allclose(vector_from_json([[0.6, 0], [0, 0.8]]), [0.6, 0.8j])


@pytest.mark.parametrize(
    "data, where",
    [
        ([], "rho"),
        ([[1, 0], [0]], "rho[1]"),
        ([[1, [0, 1, 2]], [0, 1]], "rho[0][1]"),
        ([[1, "a"], [0, 1]], "rho[0][1]"),
    ],
)
def test_matrix_json_errors_name_the_field(data, where):
    with pytest.raises(ChannelFormatError, match="^" + re.escape(where)):
        matrix_from_json(data, "rho")


def test_to_jsonable_sentinels_and_numpy():
    doc = to_jsonable(
        {
            "bound": UNBOUNDED,
            "floor": -UNBOUNDED,
            "overflow": float("inf"),
            "low": float("-inf"),
            "missing": float("nan"),
            "count": np.int64(3),
            "flag": np.bool_(True),
            "sample": Sample(0.5, SmoothingMethod.oracle),
            "real": np.array([1.0, 2.0]),
        }
    )
    assert doc["bound"] == "+inf"
    assert doc["floor"] == "-inf"
    assert doc["overflow"] == "inf"
    assert doc["low"] == "-inf"
    assert doc["missing"] == "nan"
    assert doc["count"] == 3 and isinstance(doc["count"], int)
    assert doc["flag"] is True
    assert doc["sample"] == {"value": 0.5, "method": "oracle"}
    assert doc["real"] == [1.0, 2.0]


def test_dump_json_is_sorted_and_strict():
    text = dump_json({"b": 1, "a": UNBOUNDED, "channel": amplitude_damping(0.5)})
    doc = json.loads(text)
    assert list(doc) == ["a", "b", "channel"]
    assert doc["a"] == "+inf"
    assert doc["channel"]["in_dim"] == 2
    assert len(doc["channel"]["kraus"]) == 2


def test_validate_document():
    channel = {"in_dim": 1, "out_dim": 1, "kraus": [[[1.0]]]}
    assert validate_document(channel, "channel") is channel
    with pytest.raises(ChannelFormatError, match="in_dim"):
        validate_document({"in_dim": 0, "out_dim": 1, "kraus": [[[1.0]]]}, "channel")
    with pytest.raises(ChannelFormatError, match="<root>"):
        validate_document({"in_dim": 1}, "channel")


def test_export_table(tmp_path):
    df = pd.DataFrame({"n": [1, 2], "gamma_lo": [-0.5, -0.25]})
    path = tmp_path / "windows.csv"
    assert export_table(df, str(path)) is df
    assert pd.read_csv(path).equals(df)
    assert export_table(df) is df


if __name__ == "__main__":  # pragma: no cover
    pytest.main([__file__])
