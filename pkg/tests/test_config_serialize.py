import json
import math

import numpy as np
import pytest

from frameforge.config import RunConfig
from frameforge.errors import ConfigError
from frameforge.report import Report
from frameforge.serialize import (FormatError, _csv_text, dumps, export_result, plain, read_json, report_from_json,
                                  result_from_json, result_to_json)


def test_parse_and_roundtrip():
    cfg = RunConfig.parse("K = 3\neta = 0.2, 0.1, 0.05  # comment\nw0 = gauss:0.05\nq_list = 4, 6\n")
    assert cfg.K == 3 and cfg.eta == (0.2, 0.1, 0.05) and cfg.q_list == (4.0, 6.0)
    assert RunConfig.parse(cfg.dumps()) == cfg


@pytest.mark.parametrize("text", [
    "K = 0", "K = two", "nonsense = 1", "K = 2\nK = 3", "just words", "q_list = 2",
    "regime = loose", "eta = 0.2", "N_cap = 2.5", "= 3",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        RunConfig.parse(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "nope.cfg")


def test_plain_values():
    assert plain({"a": (1, np.float64(2.5)), "b": 1 + 2j, "c": math.inf}) == {"a": [1, 2.5], "b": [1.0, 2.0], "c": "inf"}
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_result_json_roundtrip_bytes(desk_result):
    d = result_to_json(desk_result)
    text = dumps(d)
    again = result_from_json(json.loads(text))
    assert dumps(result_to_json(again)) == text


def test_report_values_roundtrip(desk_result):
    rep = desk_result.report
    back = report_from_json(json.loads(dumps(rep.to_json())))
    for a, b in zip(rep.checks, back.checks):
        assert a.name == b.name and a.status == b.status
        for x, y in ((a.value, b.value), (a.bound, b.bound)):
            assert x == y or abs(x - y) <= 1e-15 * abs(x)


def test_tampered_results_rejected(desk_result):
    d = json.loads(dumps(result_to_json(desk_result)))
    bad = dict(d, format="other")
    with pytest.raises(FormatError):
        result_from_json(bad)
    bad = json.loads(json.dumps(d))
    bad["gamma"] = bad["gamma"][:1]
    with pytest.raises(FormatError):
        result_from_json(bad)
    bad = json.loads(json.dumps(d))
    bad["steps"][0]["nu"] = bad["steps"][0]["nu"] + 1
    with pytest.raises(FormatError):
        result_from_json(bad)
    bad = json.loads(json.dumps(d))
    bad["Lambda"][0]["m"] += 1
    with pytest.raises(FormatError):
        result_from_json(bad)


def test_read_json_errors(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        read_json(p)
    with pytest.raises(FormatError):
        read_json(tmp_path / "missing.json")


def test_csv_is_rfc4180():
    text = _csv_text(["a", "b"], [[1, 'say "hi", ok'], [0.1, 2]])
    assert text == 'a,b\r\n1,"say ""hi"", ok"\r\n0.1,2\r\n'


def test_export_result_files(desk_result, tmp_path):
    files = export_result(desk_result, tmp_path)
    names = sorted(f.name for f in files)
    assert names == ["grid.csv", "lambda.csv", "residuals.csv", "summary.csv"]
    rows = (tmp_path / "lambda.csv").read_bytes().decode("utf-8").split("\r\n")
    assert len([r for r in rows if r]) == 1 + len(desk_result.points)
    assert rows[0] == "j,lam,k,m,n,scalar_re,scalar_im"


def test_report_verdict_and_waivers():
    rep = Report()
    rep.add("a", 1.0, 2.0)
    rep.add("b", 3.0, 2.0, waived=True)
    assert rep.passed
    rep.add("c", float("nan"), 1.0)
    assert not rep.passed and [c.name for c in rep.failures] == ["c"]
