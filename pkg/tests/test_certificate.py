import json

import numpy as np
import pytest

from tiltlab.certificate import Certificate, dumps, jsonable


def test_margin_sign_decides_the_verdict():
    assert Certificate.from_margin("k", 0.0, {}, None, {}).passed
    bad = Certificate.from_margin("k", -1e-300, {}, None, {})
    assert not bad.passed and bad.witness == {}


def test_failing_certificate_needs_a_witness():
    with pytest.raises(ValueError):
        Certificate("k", "fail", -1.0)
    with pytest.raises(ValueError):
        Certificate("k", "maybe", 1.0)


def test_json_is_sorted_and_encodes_non_finite_values():
    cert = Certificate("k", "pass", np.inf, {"tau": np.float64(2.0), "n": np.int64(3)},
                       {"x": np.array([1.0, -np.inf])}, {"ok": np.bool_(True)})
    text = cert.to_json()
    data = json.loads(text)
    assert data["margin"] == "inf" and data["witness"]["x"] == [1.0, "-inf"]
    assert data["constants"] == {"n": 3, "tau": 2.0} and data["sweep"]["ok"] is True
    assert list(data) == sorted(data) and text.endswith("\n")


def test_dumps_is_byte_stable():
    obj = {"b": (1, float("nan")), "a": {"z": 1.5, "y": [np.float32(0.25)]}}
    assert dumps(obj) == dumps(jsonable(obj))
    assert dumps(obj).index('"a"') < dumps(obj).index('"b"')


def test_with_sweep_merges():
    c = Certificate("k", "pass", 1.0, sweep={"a": 1}).with_sweep(b=2)
    assert c.sweep == {"a": 1, "b": 2}
