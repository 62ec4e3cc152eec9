"""Command line: reports, exit codes, policy resolution and determinism."""

import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from summatrix import TruncationPolicy
from summatrix.cli import build_parser, resolve_policy, run
from summatrix.report import schema

SCHEMA = schema()
FAST = ["--rows-scanned", "128", "--terms", "512", "--cols", "16"]


def call(capsys, *argv, environ=None):
    code = run(list(argv), environ or {})
    out, err = capsys.readouterr()
    doc = json.loads(out) if out.strip().startswith("{") else None
    if doc is not None:
        jsonschema.validate(doc, SCHEMA)
        assert doc["exit_code"] == code
    return code, doc, out, err


def cli(*argv, env=None):
    return subprocess.run([sys.executable, "-m", "summatrix", *argv], capture_output=True,
                          text=True, env=env, timeout=300)


def test_check_regular_pass(capsys):
    code, doc, _, _ = call(capsys, "check", "--matrix", "catalog:cesaro")
    assert code == 0
    assert doc["verdict"] == "pass"
    assert doc["command"] == {"name": "check", "argv": ["check", "--matrix", "catalog:cesaro"]}


def test_check_bounded_fail_with_flag(capsys):
    code, doc, _, _ = call(capsys, "check", "--matrix", "catalog:example6", "--mode", "bounded")
    assert code == 1
    assert [f["entry"] for f in doc["discrepancy_flags"]] == ["example6"]


def test_check_expr_matrix(capsys):
    code, doc, _, _ = call(capsys, "check", "--matrix", "expr:(i+j)", "--mode", "bounded", *FAST)
    assert code == 1


def test_transform_and_operator_form(capsys):
    code, doc, _, _ = call(capsys, "transform", "--matrix", "catalog:cesaro", "--sequence", "expr:(-1)^k")
    assert code == 0
    assert doc["result"]["transform"]["limit"]["value"]["re"] == pytest.approx(0, abs=1e-8)
    code, doc, _, _ = call(capsys, "transform", "--matrix", "catalog:cesaro", "--sequence",
                           "expr:5+2^(-k)?limit=5", "--operator-form")
    assert code == 0


def test_transform_operator_form_needs_limit(capsys):
    code, _, _, err = call(capsys, "transform", "--matrix", "catalog:cesaro", "--sequence",
                           "expr:(-1)^k", "--operator-form")
    assert code == 3 and "limit required" in err


def test_power_verify_t1ii(capsys):
    code, doc, _, _ = call(capsys, "power", "--kind", "type2", "--matrix", "catalog:cesaro",
                           "--g", "catalog-series:ratio", "--z", "1", "verify-t1ii")
    assert code == 0
    assert doc["result"]["equivalence"]["consistent"] == "agree"


def test_power_hypothesis_violated_exit(capsys):
    code, doc, _, _ = call(capsys, "power", "--kind", "type2", "--matrix", "catalog:cesaro",
                           "--g", "catalog-series:osc", "--z", "1", "verify-t1ii")
    assert code == 2
    assert doc["result"]["equivalence"]["consistent"] == "hypothesis-violated"


def test_power_monotone(capsys):
    code, doc, _, _ = call(capsys, "power", "--kind", "row", "--matrix", "catalog:example5?b=0.5",
                           "--moduli", "0.5,1,1.5,1.9,2.1,3", "monotone", *FAST)
    assert code == 0


def test_power_missing_series_is_usage_error(capsys):
    code, _, out, err = call(capsys, "power", "--kind", "type2", "--matrix", "catalog:cesaro",
                             "--z", "0.5", "check")
    assert code == 3 and out == "" and "requires --g" in err


def test_radius_report(capsys):
    code, doc, _, _ = call(capsys, "radius", "--matrix", "catalog:example5?b=0.5", "--rows", "4", *FAST)
    assert code == 0
    rad = doc["result"]["radius"]
    assert 1.98 <= rad["lower"] <= rad["upper"] <= 2.0001
    assert len(doc["result"]["row_radii"]["listed"]) == 4


def test_prop6_command(capsys):
    code, doc, _, _ = call(capsys, "prop6", "--p", "catalog-series:exp", "--sequence", "expr:1", "--z", "1")
    assert code == 0


def test_catalog_list(capsys):
    code, doc, _, _ = call(capsys, "catalog", "list")
    assert code == 0
    assert "example5" in [m["name"] for m in doc["catalog"]["matrices"]]


@pytest.mark.parametrize("argv, needle", [
    (["check", "--matrix", "catalog:nope"], "unknown matrix"),
    (["check", "--matrix", "catalog:example5?b=-1"], "b > 0"),
    (["power", "--kind", "row", "--matrix", "catalog:cesaro", "--z", "1+2q", "check"], "scalar"),
    (["check", "--matrix", "file:x"], "scheme"),
    (["check", "--matrix", "catalog:cesaro", "--eps", "-1"], "eps"),
    (["check"], ""),
    (["frobnicate"], ""),
])
def test_usage_errors(capsys, argv, needle):
    code, doc, _, err = call(capsys, *argv)
    assert code == 3 and doc is None
    assert needle in err


def test_parse_error_message(capsys):
    code, _, _, err = call(capsys, "check", "--matrix", "expr:1/(")
    assert code == 3
    assert "parse error in '1/('" in err
    assert "offset 3 (column 4)" in err


def test_policy_from_env_file_then_flags(tmp_path):
    path = tmp_path / "policy.json"
    path.write_text(json.dumps({"rows": 256, "eps": 1e-6}))
    args = build_parser().parse_args(["check", "--matrix", "catalog:cesaro", "--eps", "1e-7"])
    pol = resolve_policy(args, {"SUMMATRIX_POLICY": str(path)})
    assert pol == TruncationPolicy(rows=256, eps=1e-7)


def test_policy_env_bad_key(capsys, tmp_path):
    path = tmp_path / "policy.json"
    path.write_text(json.dumps({"rowz": 1}))
    code, _, _, err = call(capsys, "check", "--matrix", "catalog:cesaro",
                           environ={"SUMMATRIX_POLICY": str(path)})
    assert code == 3 and "unknown policy keys" in err


def test_policy_echoed_in_report(capsys):
    _, doc, _, _ = call(capsys, "check", "--matrix", "catalog:cesaro", *FAST)
    assert doc["policy"]["rows"] == 128 and doc["policy"]["terms"] == 512


def test_csv_output(capsys):
    code = run(["check", "--matrix", "catalog:cesaro", "--format", "csv"], {})
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert code == 0
    assert rows[0] == ["path", "status", "value"]
    assert rows[1] == ["verdict", "pass", "0"]
    assert ["result.report.regular", "pass", ""] in rows


def test_out_file_written_atomically(capsys, tmp_path):
    target = tmp_path / "report.json"
    target.write_text("old")
    code = run(["check", "--matrix", "catalog:cesaro", "--out", str(target)], {})
    assert code == 0 and capsys.readouterr().out == ""
    doc = json.loads(target.read_text())
    jsonschema.validate(doc, SCHEMA)
    assert list(tmp_path.iterdir()) == [target]


def test_timing_only_on_request(capsys):
    _, doc, _, _ = call(capsys, "check", "--matrix", "catalog:cesaro", *FAST)
    assert "timing" not in doc
    _, doc, _, _ = call(capsys, "check", "--matrix", "catalog:cesaro", "--timing", *FAST)
    assert doc["timing"]["seconds"] >= 0


def test_non_finite_values_serialized_as_strings(capsys):
    _, doc, out, _ = call(capsys, "radius", "--matrix", "catalog:example4", "--rows", "2", *FAST)
    assert doc["result"]["row_radii"]["listed"] == ["inf", "inf"]
    assert "Infinity" not in out and "NaN" not in out


def test_entry_point_and_determinism_across_workers():
    argv = ["check", "--matrix", "catalog:example6", "--mode", "bounded"]
    one = cli(*argv, "--workers", "1")
    again = cli(*argv, "--workers", "1")
    eight = cli(*argv, "--workers", "8")
    assert one.returncode == again.returncode == eight.returncode == 1
    assert one.stdout == again.stdout == eight.stdout
    assert one.stdout.endswith("}\n")


def test_version_flag():
    res = cli("--version")
    assert res.returncode == 0 and res.stdout.startswith("summatrix ")
