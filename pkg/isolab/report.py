"""Machine-readable reports and plot-ready trajectories."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from isolab.check import Check
from isolab.check_engine import CheckEngine
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.flow import FlowResult

SCHEMA = "isolab.report/1"


def to_plain(value: Any) -> Any:
    """Convert numpy and complex values into JSON-ready Python objects.

    Complex numbers become ``[re, im]``; arrays become nested lists.
    """
    if isinstance(value, CheckStatus):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


def _encode(value: Any, indent: int, depth: int) -> str:
    if isinstance(value, float):
        return format(value, ".17g") if math.isfinite(value) else "null"
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(v, (Mapping, list)) for v in value):
            return "[" + ", ".join(_encode(v, indent, depth + 1) for v in value) + "]"
        pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
        return "[\n" + ",\n".join(inner + _encode(v, indent, depth + 1) for v in value) + "\n" + pad + "]"
    return json.dumps(value, ensure_ascii=False)


def dumps(value: Any, indent: int = 2) -> str:
    """JSON with insertion-ordered keys and floats at 17 significant digits.

    Non-finite floats are written as null.
    """
    return _encode(to_plain(value), indent, 0)


def input_digest(inputs: Any) -> str:
    """SHA-256 of the canonical (sorted-key, compact) serialization of ``inputs``."""
    canonical = json.dumps(_canonical(to_plain(inputs)), sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _canonical(value: Any) -> Any:
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, Mapping):
        return {k: _canonical(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_canonical(v) for v in value]
    return value


@dataclass(frozen=True)
class CheckEntry:
    name: str
    status: CheckStatus
    message: str
    residuals: dict[str, float]
    tolerance: float | None
    diagnostics: dict[str, float | None] = field(default_factory=dict)

    @classmethod
    def from_outcome(cls, check: Check, result: CheckResult) -> CheckEntry:
        return cls(
            check.get_path(), result.status, result.message, dict(result.residuals), result.tolerance, dict(result.diagnostics)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status.value,
            "message": self.message,
            "residuals": dict(self.residuals),
            "tolerance": self.tolerance,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass
class Report:
    """Outcome of one CLI command."""

    command: str
    inputs_digest: str
    checks: list[CheckEntry]
    verdict: CheckStatus
    results: dict[str, Any] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)
    schema: str = SCHEMA

    @property
    def exit_code(self) -> int:
        """0 unless a check failed; WARN does not fail a run."""
        return 1 if self.verdict == CheckStatus.FAIL else 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": self.schema,
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "verdict": self.verdict.value,
            "checks": [entry.to_dict() for entry in self.checks],
            "results": self.results,
            "timing": self.timing,
        }


def build_report(
    command: str,
    inputs: Any,
    outcomes: Sequence[tuple[Check, CheckResult]],
    results: Mapping[str, Any] | None = None,
    elapsed: float | None = None,
) -> Report:
    """Assemble a report from engine outcomes.

    Args:
        command: The CLI subcommand.
        inputs: Everything the command consumed; hashed into ``inputs_digest``.
        outcomes: The (check, result) pairs of a CheckEngine run.
        results: Extra computed values (final A, spectra, budgets).
        elapsed: Wall-clock seconds, stored under ``timing``.

    Returns:
        Report: The assembled report.
    """
    return Report(
        command=command,
        inputs_digest=input_digest(inputs),
        checks=[CheckEntry.from_outcome(check, result) for check, result in outcomes],
        verdict=CheckEngine.verdict(list(outcomes)),
        results=dict(results or {}),
        timing={} if elapsed is None else {"elapsed_s": elapsed},
    )


def dumps_report(report: Report) -> str:
    return dumps(report.to_dict()) + "\n"


def write_report(report: Report, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report), encoding="utf-8")


def trajectory_fields(flow: FlowResult) -> list[str]:
    """Column names: t, λ re/im pairs, vec(A) re/im (row-major), then the monitors."""
    s = flow.path.partition.s
    n = flow.path.partition.n
    fields = ["t"]
    for a in range(s):
        fields += [f"lambda{a}_re", f"lambda{a}_im"]
    for i in range(n):
        for j in range(n):
            fields += [f"A{i}_{j}_re", f"A{i}_{j}_im"]
    fields += list(flow.monitors.columns())
    if flow.monitors.closure is not None:
        fields.append("closure")
    return fields


def _trajectory_rows(flow: FlowResult) -> list[list[str]]:
    columns = flow.monitors.columns()
    last = len(flow.samples) - 1
    rows = []
    for k, sample in enumerate(flow.samples):
        row = [format(sample.t, ".17g")]
        for lam in np.asarray(sample.lam):
            row += [format(lam.real, ".17g"), format(lam.imag, ".17g")]
        for entry in np.asarray(sample.A).ravel():
            row += [format(entry.real, ".17g"), format(entry.imag, ".17g")]
        row += [format(values[k], ".17g") for values in columns.values()]
        if flow.monitors.closure is not None:
            row.append(format(flow.monitors.closure, ".17g") if k == last else "")
        rows.append(row)
    return rows


def write_trajectory_csv(flow: FlowResult, out: Path | TextIO) -> None:
    """Write the sampled trajectory of a flow as CSV.

    The closure column, present for closed paths, is filled on the last row only.
    """
    if isinstance(out, Path):
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="") as f:
            write_trajectory_csv(flow, f)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(trajectory_fields(flow))
    writer.writerows(_trajectory_rows(flow))
