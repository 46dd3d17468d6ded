"""Record types and their canonical JSON forms."""

import json
import math

import numpy as np
import pytest

from boltzlab.reports import InequalityVerdict, NormReport, OracleReport, dumps_canonical, to_jsonl


def test_verdict_margin_rule():
    v = InequalityVerdict(name="demo", lhs=1.0, rhs=2.0)
    assert v.margin == 1.0
    assert v.passed
    # a small overshoot is forgiven exactly up to slack * |rhs|
    tight = InequalityVerdict(name="demo", lhs=2.09, rhs=2.0, slack=0.05)
    assert tight.passed
    broken = InequalityVerdict(name="demo", lhs=2.11, rhs=2.0, slack=0.05)
    assert not broken.passed


def test_verdict_nan_fails():
    v = InequalityVerdict(name="demo", lhs=math.nan, rhs=1.0)
    assert not v.passed


def test_verdict_slack_gate():
    with pytest.raises(ValueError):
        InequalityVerdict(name="demo", lhs=0.0, rhs=1.0, slack=-0.1)


def test_verdict_record_fields():
    v = InequalityVerdict(
        name="demo",
        lhs=np.float64(1.0),
        rhs=np.float64(3.0),
        fitted_constants={"C": np.float64(2.5)},
        provenance={"grid": {"d": 2}},
    )
    rec = v.to_record()
    assert rec["pass"] is True
    assert rec["margin"] == 2.0
    parsed = json.loads(v.to_json())
    assert parsed["fitted_constants"]["C"] == 2.5


def test_canonical_json_is_key_sorted_and_stable():
    a = dumps_canonical({"b": 1, "a": {"z": np.int64(2), "y": 3.0}})
    assert a == '{"a":{"y":3.0,"z":2},"b":1}'
    assert dumps_canonical(json.loads(a)) == a


def test_to_jsonl_order_preserved():
    lines = to_jsonl([{"k": 1}, {"k": 2}])
    assert lines == '{"k":1}\n{"k":2}\n'


def test_norm_report_sign_gate():
    NormReport(kind="moment", value=-1.0)  # signed moments are fine
    with pytest.raises(ValueError):
        NormReport(kind="lp_k", value=-1.0)


def test_oracle_report_relative_error():
    r = OracleReport(target="demo", oracle_value=2.0, fast_value=2.02)
    assert r.rel_error == pytest.approx(0.02 / 2.02, rel=1e-10)
    exact = OracleReport(target="demo", oracle_value=0.0, fast_value=0.0)
    assert exact.rel_error == 0.0
    assert json.loads(exact.to_json())["record"] == "oracle"
