from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from isolab.blocks import BlockPartition, Lambda
from isolab.check import Check
from isolab.check_engine import CheckEngine
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.checks import (
    CausticCertificates,
    Curl,
    FlowInvariants,
    LinearConstraints,
    LoopClosure,
    MonodromyRelations,
    ReferenceMatch,
    SeriesCertificates,
    StrongIsomonodromy,
    VringScan,
)
from isolab.errors import StratumError
from isolab.flow import integrate_flow, loop_path, straight_path
from isolab.monodromy import frozen_flow
from isolab.pfaffian import CoalescedSystem, CurlReport
from isolab.presets import caustic_example, four_d_omega, three_d_example
from isolab.showcase import PARTITION_3D, ThreeDExample, example3d_system
from isolab.utils.lab_log import LabLog, LabLogImpl

from conftest import RandomSystem


class RecordingLog(LabLog):
    def __init__(self) -> None:
        self.lines: list[tuple[str, str]] = []

    def info(self, message: str) -> None:
        self.lines.append(("INFO", message))

    def info_from(self, source: Any, message: str) -> None:
        self.info(f"[{source}]: {message}")

    def warn(self, message: str) -> None:
        self.lines.append(("WARN", message))

    def warn_from(self, source: Any, message: str) -> None:
        self.warn(f"[{source}]: {message}")

    def error(self, message: str) -> None:
        self.lines.append(("ERROR", message))

    def error_from(self, source: Any, message: str) -> None:
        self.error(f"[{source}]: {message}")


class FixedCheck(Check):
    def __init__(self, status: CheckStatus, parent: Check | None = None) -> None:
        self.status = status
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        return CheckResult(self.status, self.status.value.lower())

    def description(self) -> str:
        return "Returns a fixed status"


class RaisingCheck(Check):
    def run(self, verbose: bool = False) -> CheckResult:
        raise StratumError("eigenvalues coalesce")

    def description(self) -> str:
        return "Always raises"


def test_check_names_and_paths() -> None:
    outer = FixedCheck(CheckStatus.PASS)
    inner = RaisingCheck()
    inner.parent = outer

    assert outer.get_name() == "fixed_check"
    assert inner.get_path() == "fixed_check.raising_check"
    assert repr(inner) == "fixed_check.raising_check"


def test_result_from_residuals() -> None:
    passed = CheckResult.from_residuals("spectrum", {"drift": 1e-12}, 1e-9)
    failed = CheckResult.from_residuals("spectrum", {"drift": 1e-3, "nan": float("nan")}, 1e-9)

    assert passed.status == CheckStatus.PASS
    assert repr(passed) == "[PASS] spectrum"
    assert failed.status == CheckStatus.FAIL
    assert failed.message == "spectrum; failing: drift, nan"
    assert failed.tolerance == 1e-9


def test_engine_records_raising_checks_as_failures() -> None:
    log = RecordingLog()
    engine = CheckEngine(log)
    engine.add_check(FixedCheck(CheckStatus.PASS))
    engine.add_check(FixedCheck(CheckStatus.WARN))
    engine.add_check(RaisingCheck())

    outcomes = engine.run_checks()

    assert repr(engine) == "CheckEngine(checks=3)"
    assert [r.status for _, r in outcomes] == [CheckStatus.PASS, CheckStatus.WARN, CheckStatus.FAIL]
    assert "StratumError" in outcomes[2][1].message
    assert log.lines[-1] == ("INFO", "[CheckEngine(checks=3)]: Summary: 1 passed, 1 failed, 1 warned")
    assert ("ERROR", "[raising_check]: Result: [FAIL] StratumError: eigenvalues coalesce") in log.lines


@pytest.mark.parametrize(
    ("statuses", "expected"),
    [
        ([], CheckStatus.PASS),
        ([CheckStatus.PASS, CheckStatus.WARN], CheckStatus.WARN),
        ([CheckStatus.WARN, CheckStatus.FAIL, CheckStatus.PASS], CheckStatus.FAIL),
    ],
)
def test_verdict_ranks_fail_over_warn(statuses: list[CheckStatus], expected: CheckStatus) -> None:
    outcomes = [(FixedCheck(s), CheckResult(s, "")) for s in statuses]

    assert CheckEngine.verdict(outcomes) == expected


def test_quiet_log_drops_info(capsys: pytest.CaptureFixture[str]) -> None:
    log = LabLogImpl(quiet=True)

    log.info("hidden")
    log.warn("shown")

    err = capsys.readouterr().err
    assert "hidden" not in err
    assert "shown" in err and "WARN" in err


def test_pointwise_checks_pass_on_a_random_system(random_system: RandomSystem, quiet_log: LabLog) -> None:
    sys = random_system((2, 1, 1))

    assert LinearConstraints(sys, quiet_log).run().status == CheckStatus.PASS
    assert Curl(sys, quiet_log).run().status == CheckStatus.PASS
    assert SeriesCertificates(sys, quiet_log).run().status == CheckStatus.PASS


def test_single_block_has_no_curl(quiet_log: LabLog) -> None:
    sys = CoalescedSystem(Lambda((0.0,), BlockPartition((2,))), np.eye(2))

    assert Curl(sys, quiet_log).run().status == CheckStatus.PASS


def test_monodromy_relations_pass(random_system: RandomSystem, quiet_log: LabLog) -> None:
    result = MonodromyRelations(random_system((1, 1)), quiet_log).run()

    assert result.status == CheckStatus.PASS, result.residuals


def test_three_d_flow_checks(quiet_log: LabLog) -> None:
    spec = three_d_example()
    flow = integrate_flow(spec.system.A, spec.path)

    assert FlowInvariants(flow, quiet_log).run().status == CheckStatus.PASS
    assert LoopClosure(flow, quiet_log).run().status == CheckStatus.WARN
    assert ReferenceMatch("A(2)", flow.final.A, spec.expected_A, quiet_log).run().status == CheckStatus.PASS
    assert StrongIsomonodromy(flow, quiet_log, template=spec.system).run().status == CheckStatus.PASS


def test_frozen_flow_fails_the_audit(three_d: ThreeDExample, quiet_log: LabLog) -> None:
    sys = example3d_system(three_d, 1.0)
    flow = frozen_flow(sys.A, straight_path((1.0, 0.0), (2.0, 0.0), PARTITION_3D))

    assert StrongIsomonodromy(flow, quiet_log, template=sys).run().status == CheckStatus.FAIL


def test_loop_closure_on_a_closed_path(random_system: RandomSystem, quiet_log: LabLog) -> None:
    sys = random_system((1, 1, 1))
    path = loop_path(sys.lam.array, [(0.2, 0.0, 0.0), (0.0, 0.2j, 0.0)], sys.partition)

    result = LoopClosure(integrate_flow(sys.A, path), quiet_log).run()

    assert result.status == CheckStatus.PASS
    assert result.residuals["closure"] <= 1e-8


def test_reference_match_fails_on_a_wrong_answer(quiet_log: LabLog) -> None:
    result = ReferenceMatch("A", np.eye(2), 2 * np.eye(2), quiet_log).run()

    assert result.status == CheckStatus.FAIL
    assert result.residuals["relative_error"] == pytest.approx(0.5)


def test_caustic_checks(quiet_log: LabLog) -> None:
    model = caustic_example().caustic
    assert model is not None

    certificates = CausticCertificates(model, quiet_log, u=(1.0,)).run()
    scan = VringScan(model, quiet_log).run()

    assert certificates.status == CheckStatus.PASS, certificates.residuals
    assert scan.status == CheckStatus.PASS
    assert len(scan.residuals) == 4


def test_curl_reports_richardson_ratios_as_diagnostics(quiet_log: LabLog) -> None:
    result = Curl(four_d_omega().system, quiet_log).run()

    assert result.status == CheckStatus.PASS, result.message
    assert set(result.residuals) == {"omega_curl", "d_curl"}
    assert 3.5 <= result.diagnostics["richardson_ratio"] <= 4.5
    assert result.diagnostics["d_richardson_ratio"] is None
    assert "d_richardson_ratio undefined" in result.message


@pytest.mark.parametrize(("ratio", "expected"), [(4.1, CheckStatus.PASS), (2.0, CheckStatus.WARN), (None, CheckStatus.PASS)])
def test_curl_grades_the_richardson_ratio(
    monkeypatch: pytest.MonkeyPatch,
    random_system: RandomSystem,
    quiet_log: LabLog,
    ratio: float | None,
    expected: CheckStatus,
) -> None:
    report = CurlReport(h=1e-5, max_residual=1e-10, dcurl_residual=0.0, ratio=ratio)
    monkeypatch.setattr("isolab.checks.curl.curl_residual", lambda *args, **kwargs: report)

    result = Curl(random_system((1, 1)), quiet_log).run()

    assert result.status == expected
    assert result.diagnostics["richardson_ratio"] == ratio


def test_curl_failure_is_not_softened_by_the_ratio(
    monkeypatch: pytest.MonkeyPatch, random_system: RandomSystem, quiet_log: LabLog
) -> None:
    report = CurlReport(h=1e-5, max_residual=1e-3, dcurl_residual=0.0, ratio=2.0)
    monkeypatch.setattr("isolab.checks.curl.curl_residual", lambda *args, **kwargs: report)

    result = Curl(random_system((1, 1)), quiet_log).run()

    assert result.status == CheckStatus.FAIL
    assert "outside [3.5, 4.5]" in result.message
