import json
import math

import numpy as np
import pytest

from qresource.errors import ValidationError
from qresource.io import atomic_write, dumps_report, load_matrix, matrix_from_dict, matrix_to_dict, save_matrix, table_to_csv
from qresource.linalg import ebit, random_density


def test_matrix_round_trip(tmp_path):
    rho = random_density(3, np.random.default_rng(0))
    path = tmp_path / "rho.json"
    save_matrix(path, rho)
    assert np.allclose(load_matrix(path), rho, atol=1e-15)
    assert matrix_to_dict(ebit())["dim"] == 4


@pytest.mark.parametrize(
    "obj,needle",
    [
        ([1, 2], "'dim' and 'data'"),
        ({"dim": 0, "data": []}, "positive integer"),
        ({"dim": 2, "data": [[1, 0]] * 3}, "dim² = 4"),
        ({"dim": 2, "data": [[1, 0], [0, 0], [0, 0], "x"]}, "[re, im]"),
        ({"dim": 2, "data": [[1, 0], [1, 0], [0, 0], [0, 0]]}, "Hermitian"),
    ],
)
def test_matrix_from_dict_rejects(obj, needle):
    with pytest.raises(ValidationError) as exc:
        matrix_from_dict(obj)
    assert needle.lower() in str(exc.value).lower()


def test_load_matrix_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_matrix(bad)
    with pytest.raises(ValidationError, match="cannot read"):
        load_matrix(tmp_path / "missing.json")
    neg = tmp_path / "neg.json"
    neg.write_text(json.dumps(matrix_to_dict(np.diag([1.5, -0.5]))))
    with pytest.raises(ValidationError):
        load_matrix(neg)
    assert load_matrix(neg, state=False).shape == (2, 2)


def test_dumps_report_is_deterministic():
    report = {"b": np.float64(1 / 3), "a": [np.int64(2), math.inf, -math.inf, math.nan], "m": np.eye(2, dtype=complex)}
    text = dumps_report(report)
    assert text == dumps_report(dict(reversed(list(report.items()))))
    back = json.loads(text)
    assert back["a"] == [2, "inf", "-inf", "nan"]
    assert back["b"] == 0.333333333333
    assert back["m"]["dim"] == 2


def test_atomic_write_and_csv(tmp_path):
    path = tmp_path / "out.txt"
    atomic_write(path, "one")
    atomic_write(path, "two")
    assert path.read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
    with pytest.raises(ValidationError):
        atomic_write(tmp_path / "no" / "such" / "dir.txt", "x")
    csv = table_to_csv(["n", "g"], [{"n": 1, "g": 0.5, "extra": 3}])
    assert csv == "n,g\n1,0.5\n"
