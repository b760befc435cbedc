from __future__ import annotations

import dataclasses
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from isolab.errors import SpecError


@dataclass(frozen=True)
class Tolerances:
    """Every numerical knob of the lab, with its documented default."""

    eig_sep_tol: float = 1e-8
    cluster_tol: float | None = None
    int_tol: float = 1e-7
    jordan_tol: float = 1e-9
    jordan_cond_max: float = 1e8
    constraint_tol: float = 1e-12
    curl_tol: float = 1e-7
    fd_step: float = 1e-5
    levelt_K: int = 12
    infinity_K: int = 8
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-13
    monitor_fail: float = 1e-6
    closure_tol: float = 1e-8
    audit_tol: float = 1e-6
    tau_min_margin: float = 0.05
    match_scale: float = 1e3
    eval_scale: float = 1.0
    stokes_points: int = 5
    annulus_points: int = 8

    def replace(self, **overrides: Any) -> Tolerances:
        """Return a copy with the given fields replaced.

        Args:
            **overrides: Field names and their new values.

        Returns:
            Tolerances: The modified copy.
        """
        return dataclasses.replace(self, **overrides)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], field: str = "tolerances") -> Tolerances:
        """Build tolerances from a document section, rejecting unknown keys.

        Args:
            values: Mapping of field name to value.
            field: Field path used in diagnostics.

        Returns:
            Tolerances: Defaults overridden by ``values``.
        """
        known = {f.name: f for f in dataclasses.fields(cls)}
        parsed: dict[str, Any] = {}
        for key, value in values.items():
            if key not in known:
                raise SpecError(f"unknown tolerance '{key}'", f"{field}.{key}")
            if value is None:
                parsed[key] = None
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SpecError("expected a number", f"{field}.{key}")
            if key.endswith("_K") or key.endswith("_points"):
                if int(value) != value or value < 1:
                    raise SpecError("expected a positive integer", f"{field}.{key}")
                parsed[key] = int(value)
            else:
                if value <= 0:
                    raise SpecError("expected a positive number", f"{field}.{key}")
                parsed[key] = float(value)
        return cls(**parsed)
