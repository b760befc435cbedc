"""Input documents: a system, its path, gauge terms and tolerances, in TOML or JSON.

Complex numbers are written as ``[re, im]`` pairs; a bare number is real.
"""

from __future__ import annotations

import dataclasses
import json
import tomllib
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from isolab.blocks import BlockPartition, Lambda, Matrix, block_diagonal_part, block_inverse, max_norm
from isolab.caustic import CausticModel, MetricModel, caustic_restricted_system
from isolab.errors import SpecError, StratumError
from isolab.flow import (
    DeformationPath,
    DSpec,
    ExplicitD,
    TDerivedD,
    ZeroD,
    loop_path,
    scaling_path,
    straight_path,
    translation_path,
)
from isolab.pfaffian import CoalescedSystem
from isolab.tolerances import Tolerances

TEvaluator = Callable[[Mapping[str, Any]], Callable[[npt.NDArray[np.complex128]], npt.ArrayLike]]

TOP_LEVEL_KEYS = {"name", "preset", "partition", "lambda", "A", "T", "J", "dspec", "path", "expected_A", "tolerances", "caustic"}
PATH_KEYS = {"kind", "end", "shift", "factor", "directions", "points"}
DSPEC_KEYS = {"kind", "blocks", "evaluator", "params", "step"}
CAUSTIC_KEYS = {"m", "eta11", "eta12", "coupling", "tail", "v12", "c", "h", "t1", "u"}
PRESET_KEYS = {"name", "preset", "path", "expected_A", "tolerances"}


@dataclass(frozen=True)
class SystemSpec:
    """A validated input: everything one CLI command needs.

    ``frozen`` marks the negative control whose "flow" keeps A fixed.
    """

    name: str
    system: CoalescedSystem
    dspec: DSpec = field(default_factory=ZeroD)
    path: DeformationPath | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    T: Matrix | None = None
    J: Matrix | None = None
    expected_A: Matrix | None = None
    caustic: CausticModel | None = None
    caustic_point: tuple[complex, tuple[complex, ...]] = (0.0, ())
    frozen: bool = False
    document: dict[str, Any] = field(default_factory=dict)

    def with_tolerances(self, tolerances: Tolerances) -> SystemSpec:
        return dataclasses.replace(self, tolerances=tolerances)

    def with_path(self, path: DeformationPath) -> SystemSpec:
        return dataclasses.replace(self, path=path)


def parse_complex(value: Any, where: str) -> complex:
    """A number or an ``[re, im]`` pair."""
    if isinstance(value, bool):
        raise SpecError("expected a number or [re, im]", where)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise SpecError("expected a number or [re, im]", where)


def parse_vector(value: Any, where: str, size: int | None = None) -> npt.NDArray[np.complex128]:
    if not isinstance(value, (list, tuple)):
        raise SpecError("expected a list", where)
    out = np.array([parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=np.complex128)
    if size is not None and out.size != size:
        raise SpecError(f"expected {size} entries, got {out.size}", where)
    return out


def parse_matrix(value: Any, where: str, n: int) -> Matrix:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise SpecError(f"expected {n} rows", where)
    return np.array([parse_vector(row, f"{where}[{i}]", n) for i, row in enumerate(value)], dtype=np.complex128)


def _reject_unknown(section: Mapping[str, Any], known: set[str], where: str) -> None:
    for key in section:
        if key not in known:
            raise SpecError(f"unknown key '{key}'", f"{where}.{key}" if where else key)


def _section(doc: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = doc.get(key, {})
    if not isinstance(value, Mapping):
        raise SpecError("expected a table", key)
    return value


def parse_partition(value: Any) -> BlockPartition:
    if not isinstance(value, list) or not value or not all(isinstance(p, int) and not isinstance(p, bool) for p in value):
        raise SpecError("expected a non-empty list of positive integers", "partition")
    try:
        return BlockPartition(tuple(value))
    except ValueError as exc:
        raise SpecError(str(exc), "partition") from exc


def parse_path(section: Mapping[str, Any], start: npt.ArrayLike, part: BlockPartition) -> DeformationPath:
    """A path starting at ``start``; kinds: straight, translation, scaling, loop, polyline."""
    _reject_unknown(section, PATH_KEYS, "path")
    kind = section.get("kind", "straight")
    s = part.s
    try:
        if kind == "straight":
            return straight_path(start, parse_vector(section.get("end"), "path.end", s), part)
        if kind == "translation":
            return translation_path(start, parse_complex(section.get("shift"), "path.shift"), part)
        if kind == "scaling":
            return scaling_path(start, parse_complex(section.get("factor"), "path.factor"), part)
        if kind == "loop":
            raw = section.get("directions")
            if not isinstance(raw, list) or not raw:
                raise SpecError("expected a non-empty list of directions", "path.directions")
            dirs = [parse_vector(d, f"path.directions[{i}]", s) for i, d in enumerate(raw)]
            return loop_path(start, dirs, part)
        if kind == "polyline":
            raw = section.get("points")
            if not isinstance(raw, list) or not raw:
                raise SpecError("expected a non-empty list of points", "path.points")
            pts = [np.asarray(start)] + [parse_vector(p, f"path.points[{i}]", s) for i, p in enumerate(raw)]
            return DeformationPath(tuple(tuple(p) for p in pts), part)
    except ValueError as exc:
        raise SpecError(str(exc), "path") from exc
    raise SpecError(f"unknown path kind '{kind}'", "path.kind")


def parse_dspec(
    section: Mapping[str, Any], part: BlockPartition, evaluators: Mapping[str, TEvaluator]
) -> DSpec:
    """``zero``, ``explicit`` (constant 𝒟_j arrays) or ``t-derived`` (a named T evaluator)."""
    _reject_unknown(section, DSPEC_KEYS, "dspec")
    kind = section.get("kind", "zero")
    if kind == "zero":
        return ZeroD()
    if kind == "explicit":
        raw = section.get("blocks")
        if not isinstance(raw, list) or len(raw) != part.s:
            raise SpecError(f"expected {part.s} matrices", "dspec.blocks")
        blocks = [parse_matrix(D, f"dspec.blocks[{j}]", part.n) for j, D in enumerate(raw)]
        for j, D in enumerate(blocks):
            if max_norm(D - block_diagonal_part(D, part)):
                raise SpecError("𝒟 must be block-diagonal", f"dspec.blocks[{j}]")
        return ExplicitD(blocks)
    if kind == "t-derived":
        name = section.get("evaluator")
        if name not in evaluators:
            raise SpecError(f"unknown T evaluator '{name}'; available: {', '.join(evaluators)}", "dspec.evaluator")
        params = section.get("params", {})
        if not isinstance(params, Mapping):
            raise SpecError("expected a table", "dspec.params")
        try:
            T = evaluators[name](params)
        except (TypeError, ValueError) as exc:
            raise SpecError(str(exc), "dspec.params") from exc
        return TDerivedD(T, float(section.get("step", 1e-6)))
    raise SpecError(f"unknown dspec kind '{kind}'", "dspec.kind")


def parse_caustic(section: Mapping[str, Any]) -> tuple[CausticModel, tuple[complex, tuple[complex, ...]]]:
    """The caustic model and the point (t₁, u₃..u_n) where it is certified."""
    _reject_unknown(section, CAUSTIC_KEYS, "caustic")

    def series(key: str) -> npt.NDArray[np.complex128]:
        raw = section.get(key)
        if raw is None:
            raise SpecError("missing metric coefficients", f"caustic.{key}")
        if isinstance(raw, list):
            return parse_vector(raw, f"caustic.{key}")
        return np.array([parse_complex(raw, f"caustic.{key}")])

    m = section.get("m", 3)
    if isinstance(m, bool) or not isinstance(m, int):
        raise SpecError("expected an integer", "caustic.m")
    coupling = section.get("coupling", [[], []])
    if not isinstance(coupling, list) or len(coupling) != 2:
        raise SpecError("expected two rows", "caustic.coupling")
    C = np.array([parse_vector(r, f"caustic.coupling[{i}]") for i, r in enumerate(coupling)])
    k = C.shape[1]
    tail = None if "tail" not in section else parse_matrix(section["tail"], "caustic.tail", k)
    v12 = None if "v12" not in section else parse_complex(section["v12"], "caustic.v12")
    c = tuple(parse_vector(section.get("c", [1.0, 1.0]), "caustic.c", 2))
    h = None if "h" not in section else tuple(parse_vector(section["h"], "caustic.h", k))
    try:
        model = CausticModel(m, MetricModel(series("eta11"), series("eta12")), C, tail, v12, c, h)
    except ValueError as exc:
        raise SpecError(str(exc), "caustic") from exc
    t1 = parse_complex(section.get("t1", 0.0), "caustic.t1")
    u = tuple(parse_vector(section.get("u", list(range(3, k + 3))), "caustic.u", k))
    model.require_nondegenerate(t1)
    return model, (t1, u)


def parse_system_spec(
    doc: Mapping[str, Any],
    presets: Mapping[str, Callable[[], SystemSpec]] | None = None,
    evaluators: Mapping[str, TEvaluator] | None = None,
) -> SystemSpec:
    """Validate a document and build the SystemSpec it describes.

    With ``preset`` the named preset is the base; ``path``, ``tolerances``
    and ``expected_A`` may still be overridden.

    Raises:
        SpecError: On unknown keys, malformed values or violated structure,
            with the offending field path.
    """
    _reject_unknown(doc, TOP_LEVEL_KEYS, "")
    presets = presets or {}
    evaluators = evaluators or {}
    tol = Tolerances.from_mapping(_section(doc, "tolerances"))

    if "preset" in doc:
        name = doc["preset"]
        if name not in presets:
            raise SpecError(f"unknown preset '{name}'; available: {', '.join(presets)}", "preset")
        _reject_unknown(doc, PRESET_KEYS, "")
        base = presets[name]()
        overrides = {key: getattr(tol, key) for key in _section(doc, "tolerances")}
        spec = dataclasses.replace(base, tolerances=base.tolerances.replace(**overrides), document=dict(doc))
        if "path" in doc:
            spec = spec.with_path(parse_path(_section(doc, "path"), spec.system.lam.array, spec.system.partition))
        if "expected_A" in doc:
            spec = dataclasses.replace(spec, expected_A=parse_matrix(doc["expected_A"], "expected_A", spec.system.n))
        return spec

    caustic, point = (None, (0.0, ())) if "caustic" not in doc else parse_caustic(_section(doc, "caustic"))
    if "partition" not in doc and caustic is not None:
        restricted = caustic_restricted_system(caustic, point[0], point[1], tol.eig_sep_tol)
        return SystemSpec(
            name=str(doc.get("name", "caustic")),
            system=restricted.system,
            tolerances=tol,
            T=restricted.T,
            caustic=caustic,
            caustic_point=point,
            document=dict(doc),
        )

    for key in ("partition", "lambda", "A"):
        if key not in doc:
            raise SpecError("missing required key", key)
    part = parse_partition(doc["partition"])
    lam_values = parse_vector(doc["lambda"], "lambda", part.s)
    try:
        lam = Lambda(tuple(lam_values), part)
    except ValueError as exc:
        raise SpecError(str(exc), "lambda") from exc
    try:
        lam.require_separated(tol.eig_sep_tol)
    except StratumError as exc:
        raise SpecError(str(exc), "lambda") from exc
    A = parse_matrix(doc["A"], "A", part.n)
    if not np.all(np.isfinite(A)):
        raise SpecError("A must be finite", "A")

    T = None if "T" not in doc else parse_matrix(doc["T"], "T", part.n)
    J = None if "J" not in doc else parse_matrix(doc["J"], "J", part.n)
    if J is not None and T is None:
        raise SpecError("J needs T", "J")
    if T is not None:
        if max_norm(T - block_diagonal_part(T, part)):
            raise SpecError("T must be block-diagonal", "T")
        if abs(np.linalg.det(T)) < 1e-14 * max(max_norm(T), 1.0) ** part.n:
            raise SpecError("T must be invertible", "T")
        if J is not None:
            actual = block_inverse(T, part) @ block_diagonal_part(A, part) @ T
            if max_norm(actual - J) > 1e-9 * max(max_norm(J), 1.0):
                raise SpecError("T⁻¹A_D T differs from J", "J")

    dspec = parse_dspec(_section(doc, "dspec"), part, evaluators)
    path = None if "path" not in doc else parse_path(_section(doc, "path"), lam.array, part)
    expected = None if "expected_A" not in doc else parse_matrix(doc["expected_A"], "expected_A", part.n)
    return SystemSpec(
        name=str(doc.get("name", "system")),
        system=CoalescedSystem(lam, A),
        dspec=dspec,
        path=path,
        tolerances=tol,
        T=T,
        J=J,
        expected_A=expected,
        caustic=caustic,
        caustic_point=point,
        document=dict(doc),
    )


def read_document(path: Path) -> dict[str, Any]:
    """Parse ``.toml`` with tomllib, anything else as JSON."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        if path.suffix == ".toml":
            return tomllib.loads(text)
        doc = json.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SpecError(f"{path}: expected a top-level object")
    return doc


def load_system_spec(
    path: Path,
    presets: Mapping[str, Callable[[], SystemSpec]] | None = None,
    evaluators: Mapping[str, TEvaluator] | None = None,
) -> SystemSpec:
    return parse_system_spec(read_document(path), presets, evaluators)
