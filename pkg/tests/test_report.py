from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from isolab.blocks import BlockPartition
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.checks import LinearConstraints
from isolab.flow import integrate_flow, loop_path, straight_path
from isolab.report import (
    build_report,
    dumps,
    dumps_report,
    input_digest,
    to_plain,
    trajectory_fields,
    write_report,
    write_trajectory_csv,
)
from isolab.utils.lab_log import LabLog

from conftest import RandomSystem


def test_to_plain_converts_numpy_and_complex() -> None:
    value = {"A": np.array([[1 + 2j, 0.5]]), "n": np.int64(3), "ok": np.bool_(True), "status": CheckStatus.WARN}

    assert to_plain(value) == {"A": [[[1.0, 2.0], [0.5, 0.0]]], "n": 3, "ok": True, "status": "WARN"}


def test_dumps_uses_full_precision_and_null_for_nan() -> None:
    text = dumps({"x": 0.1, "bad": float("nan"), "z": 1j})

    assert '"x": 0.10000000000000001' in text
    assert '"bad": null' in text
    assert json.loads(text)["z"] == [0.0, 1.0]


def test_dumps_keeps_insertion_order() -> None:
    assert list(json.loads(dumps({"b": 1, "a": 2}))) == ["b", "a"]


def test_input_digest_ignores_key_order() -> None:
    first = input_digest({"a": 1.0, "b": [1j, 2]})
    second = input_digest({"b": [1j, 2], "a": 1.0})

    assert first == second
    assert len(first) == 64
    assert input_digest({"a": 1.0 + 1e-15}) != input_digest({"a": 1.0})


def test_report_verdict_and_exit_code(random_system: RandomSystem, quiet_log: LabLog) -> None:
    check = LinearConstraints(random_system((2, 1)), quiet_log)
    passed = (check, CheckResult(CheckStatus.PASS, "ok"))
    warned = (check, CheckResult(CheckStatus.WARN, "loose"))
    failed = (check, CheckResult(CheckStatus.FAIL, "bad", {"r": 1.0}, 1e-9))

    assert build_report("check", {}, [passed, warned]).exit_code == 0
    report = build_report("check", {"preset": "x"}, [passed, failed], {"n": 3}, elapsed=0.25)

    assert report.verdict == CheckStatus.FAIL
    assert report.exit_code == 1
    doc = json.loads(dumps_report(report))
    assert doc["schema"] == "isolab.report/1"
    assert doc["verdict"] == "FAIL"
    assert doc["checks"][1] == {
        "name": "linear_constraints",
        "status": "FAIL",
        "message": "bad",
        "residuals": {"r": 1.0},
        "tolerance": 1e-9,
        "diagnostics": {},
    }
    assert doc["results"] == {"n": 3}
    assert doc["timing"] == {"elapsed_s": 0.25}


def test_write_report_creates_parent_directories(tmp_path: Path) -> None:
    path = tmp_path / "out" / "report.json"

    write_report(build_report("example", {}, []), path)

    assert json.loads(path.read_text(encoding="utf-8"))["verdict"] == "PASS"


def test_trajectory_csv_of_an_open_path() -> None:
    part = BlockPartition((1, 1))
    flow = integrate_flow(np.array([[0.1, 0.2], [0.3, 0.4]]), straight_path((0.0, 1.0), (0.0, 2.0), part))
    out = io.StringIO()

    write_trajectory_csv(flow, out)

    rows = list(csv.reader(io.StringIO(out.getvalue())))
    assert rows[0] == trajectory_fields(flow)
    assert rows[0][:5] == ["t", "lambda0_re", "lambda0_im", "lambda1_re", "lambda1_im"]
    assert "closure" not in rows[0]
    assert len(rows) == len(flow.samples) + 1
    assert float(rows[-1][0]) == pytest.approx(1.0)


def test_trajectory_csv_reports_closure_on_the_last_row(random_system: RandomSystem, tmp_path: Path) -> None:
    sys = random_system((1, 1))
    flow = integrate_flow(sys.A, loop_path(sys.lam.array, [(0.1, 0.0), (0.0, 0.1j)], sys.partition))
    path = tmp_path / "traj.csv"

    write_trajectory_csv(flow, path)

    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert all(row["closure"] == "" for row in rows[:-1])
    assert float(rows[-1]["closure"]) <= 1e-8
