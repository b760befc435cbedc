from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from isolab.blocks import BlockPartition
from isolab.errors import DegenerateMetricError, SpecError
from isolab.flow import ExplicitD, TDerivedD, ZeroD
from isolab.presets import PRESETS, T_EVALUATORS
from isolab.system_spec import parse_complex, parse_path, parse_system_spec, read_document


def _doc(**extra: Any) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "partition": [1, 1],
        "lambda": [0.0, 1.0],
        "A": [[0.1, [0.2, 0.1]], [0.3, 0.4]],
    }
    doc.update(extra)
    return doc


def _field_of(doc: dict[str, Any]) -> str:
    with pytest.raises(SpecError) as info:
        parse_system_spec(doc, PRESETS, T_EVALUATORS)
    return info.value.field


@pytest.mark.parametrize(("raw", "expected"), [(2, 2 + 0j), (0.5, 0.5 + 0j), ([1, -2], 1 - 2j)])
def test_parse_complex(raw: Any, expected: complex) -> None:
    assert parse_complex(raw, "x") == expected


@pytest.mark.parametrize("raw", [True, "1", [1, 2, 3], [1, "2"], None])
def test_parse_complex_rejects(raw: Any) -> None:
    with pytest.raises(SpecError) as info:
        parse_complex(raw, "A[0][1]")

    assert info.value.field == "A[0][1]"


def test_minimal_document() -> None:
    spec = parse_system_spec(_doc(name="two"))

    assert spec.name == "two"
    assert spec.system.A[0, 1] == 0.2 + 0.1j
    assert isinstance(spec.dspec, ZeroD)
    assert spec.path is None


@pytest.mark.parametrize(
    ("section", "end"),
    [
        ({"end": [0.0, 2.0]}, [0.0, 2.0]),
        ({"kind": "translation", "shift": [0, 1]}, [1j, 1 + 1j]),
        ({"kind": "scaling", "factor": 3}, [0.0, 3.0]),
        ({"kind": "polyline", "points": [[0, 2], [1, 2]]}, [1.0, 2.0]),
    ],
)
def test_path_kinds(section: dict[str, Any], end: list[complex]) -> None:
    path = parse_path(section, np.array([0.0, 1.0]), BlockPartition((1, 1)))

    assert path.points[-1] == pytest.approx(np.array(end, dtype=complex))


def test_loop_path_is_closed() -> None:
    path = parse_path({"kind": "loop", "directions": [[0.1, 0], [0, [0, 0.1]]]}, np.array([0.0, 1.0]), BlockPartition((1, 1)))

    assert path.closed


@pytest.mark.parametrize(
    ("extra", "field"),
    [
        ({"colour": "red"}, "colour"),
        ({"path": {"kind": "spiral"}}, "path.kind"),
        ({"path": {"end": [0.0, 2.0], "speed": 1}}, "path.speed"),
        ({"tolerances": {"eig_sep_tol": "tight"}}, "tolerances.eig_sep_tol"),
        ({"lambda": [0.0, 0.0]}, "lambda"),
        ({"partition": [0, 2]}, "partition"),
        ({"A": [[0.1, 0.2]]}, "A"),
        ({"dspec": {"kind": "magic"}}, "dspec.kind"),
        ({"dspec": {"kind": "explicit", "blocks": [[[0, 1], [0, 0]], [[0, 0], [0, 0]]]}}, "dspec.blocks[0]"),
        ({"dspec": {"kind": "t-derived", "evaluator": "nope"}}, "dspec.evaluator"),
        ({"T": [[1, 1], [0, 1]]}, "T"),
        ({"J": [[1, 0], [0, 1]]}, "J"),
    ],
)
def test_invalid_documents_name_the_field(extra: dict[str, Any], field: str) -> None:
    assert _field_of(_doc(**extra)) == field


def test_missing_keys_are_reported() -> None:
    doc = _doc()
    del doc["A"]

    assert _field_of(doc) == "A"


def test_explicit_and_t_derived_dspecs() -> None:
    explicit = parse_system_spec(
        _doc(dspec={"kind": "explicit", "blocks": [[[1, 0], [0, 0]], [[0, 0], [0, 2]]]}), PRESETS, T_EVALUATORS
    )
    derived = parse_system_spec(
        {
            "partition": [1, 2],
            "lambda": [1.0, 0.0],
            "A": [[0, 1, 2], [1, 0, 1], [0.5, 0.25, 0]],
            "dspec": {"kind": "t-derived", "evaluator": "3d-example", "params": {"A32": 0.25}},
        },
        PRESETS,
        T_EVALUATORS,
    )

    assert isinstance(explicit.dspec, ExplicitD)
    assert isinstance(derived.dspec, TDerivedD)


def test_preset_with_overrides() -> None:
    spec = parse_system_spec(
        {"preset": "3d-example", "tolerances": {"ode_rtol": 1e-10}, "path": {"end": [1.5, 0.0]}}, PRESETS
    )

    assert spec.name == "3d-example"
    assert spec.tolerances.ode_rtol == 1e-10
    assert spec.path is not None
    assert spec.path.points[-1] == pytest.approx(np.array([1.5, 0.0]))


def test_preset_rejects_system_keys() -> None:
    assert _field_of({"preset": "3d-example", "A": [[0]]}) == "A"
    assert _field_of({"preset": "missing"}) == "preset"


def test_caustic_document() -> None:
    spec = parse_system_spec({"caustic": {"m": 3, "eta11": 0.3, "eta12": [1.0, 0.1], "coupling": [[0.2], [0.1]], "u": [1.0]}})

    assert spec.caustic is not None
    assert spec.caustic.m == 3
    assert spec.system.partition.sizes == (2, 1)
    assert spec.caustic_point == (0.0, (1.0,))
    assert spec.T is not None


def test_caustic_document_with_degenerate_metric() -> None:
    with pytest.raises(DegenerateMetricError) as info:
        parse_system_spec({"caustic": {"m": 3, "eta11": 0.3, "eta12": 0.0}})

    assert info.value.field == "caustic.eta12"


def test_read_toml_and_json(tmp_path: Path) -> None:
    toml_path = tmp_path / "sys.toml"
    toml_path.write_text('partition = [1, 1]\nlambda = [0.0, 1.0]\nA = [[0.1, [0.2, 0.1]], [0.3, 0.4]]\n', encoding="utf-8")
    json_path = tmp_path / "sys.json"
    json_path.write_text(json.dumps(_doc()), encoding="utf-8")

    assert read_document(toml_path) == read_document(json_path)


@pytest.mark.parametrize(("name", "text"), [("bad.json", "{"), ("bad.toml", "a = "), ("list.json", "[1]")])
def test_read_document_errors(tmp_path: Path, name: str, text: str) -> None:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")

    with pytest.raises(SpecError):
        read_document(path)


def test_read_document_missing_file(tmp_path: Path) -> None:
    with pytest.raises(SpecError):
        read_document(tmp_path / "absent.json")
