from __future__ import annotations

import numpy as np
import pytest

from isolab.blocks import max_norm
from isolab.caustic import (
    CausticModel,
    MetricModel,
    caustic_coords,
    caustic_coords_inverse,
    caustic_psi,
    caustic_restricted_system,
    caustic_V,
    caustic_v11_limit,
    psi_log_derivative,
    restricted_limit_residual,
    t1_certificate,
    vring_scan,
    vring_value,
)
from isolab.errors import DegenerateMetricError, PoleError, StratumError
from isolab.pfaffian import check_linear_constraints


def _model(m: int = 3, metric: MetricModel | None = None) -> CausticModel:
    return CausticModel(m, metric or MetricModel.constant(0.3, 1.0), np.array([[0.2], [0.1]]))


@pytest.mark.parametrize(("m", "expected"), [(2, 0.0), (3, 1j / 6), (4, 1j / 4)])
def test_vring_value(m: int, expected: complex) -> None:
    assert vring_value(m) == pytest.approx(expected)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_coordinate_map_and_its_inverse(m: int) -> None:
    u1, u2 = caustic_coords(0.2, 0.01, m)

    assert (u1 + u2) / 2 == pytest.approx(0.2)
    assert caustic_coords_inverse(u1, u2, m) == pytest.approx((0.2, 0.01))


def test_metric_series_in_t2() -> None:
    metric = MetricModel(np.array([1.0, 2.0]), np.array([3.0]))

    assert metric.values(0.7, 0.5) == pytest.approx((2.0, 3.0))
    assert metric.derivative(0.7, 0.5, "t2") == pytest.approx((2.0, 0.0))
    assert metric.derivative(0.7, 0.5, "t1") == pytest.approx((0.0, 0.0))


def test_model_validation() -> None:
    metric = MetricModel.constant(0.3, 1.0)
    with pytest.raises(ValueError):
        CausticModel(1, metric)
    with pytest.raises(ValueError):
        CausticModel(3, metric, np.array([[0.2], [0.1]]), tail=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        CausticModel(3, metric, np.array([[0.2], [0.1]]), h=(0.0,))

    model = _model()
    assert model.n == 3
    assert model.partition.sizes == (2, 1)
    assert model.v12 == pytest.approx(1j / 6)


@pytest.mark.parametrize(("m", "metric"), [(3, MetricModel.constant(0.3, 0.0)), (2, MetricModel.constant(1.0, 1.0))])
def test_degenerate_metric_is_rejected(m: int, metric: MetricModel) -> None:
    with pytest.raises(DegenerateMetricError) as info:
        caustic_v11_limit(_model(m, metric))

    assert info.value.field == "caustic.eta12"


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_v11_limit_spectrum(m: int) -> None:
    block = caustic_v11_limit(_model(m))
    iv = 1j * vring_value(m)

    eig = np.sort_complex(np.linalg.eigvals(block))

    assert np.abs(eig - np.sort_complex(np.array([iv, -iv]))).max() < 1e-12
    assert abs(np.trace(block)) < 1e-13


def test_v11_limit_vanishes_for_m_two() -> None:
    assert max_norm(caustic_v11_limit(_model(2))) == 0.0


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("t2", [1e-3, 1e-2, 1e-1])
def test_psi_certificates(m: int, t2: float) -> None:
    psi = caustic_psi(_model(m), 0.1, t2, (1.0,))

    assert psi.gram_residual <= 1e-10
    assert psi.diagonal_residual <= 1e-10
    assert psi.Psi[2, 2] == 1.0


def test_psi_is_singular_on_the_caustic() -> None:
    with pytest.raises(PoleError):
        caustic_psi(_model(3), 0.0, 0.0)
    with pytest.raises(PoleError):
        psi_log_derivative(_model(3), 0.0, 0.0, "t2")


def test_psi_needs_one_u_per_extra_block() -> None:
    with pytest.raises(ValueError):
        caustic_psi(_model(3), 0.0, 0.01, (1.0, 2.0))
    with pytest.raises(ValueError):
        psi_log_derivative(_model(3), 0.0, 0.01, "t3")


@pytest.mark.parametrize("t2", [1e-2, 1e-1])
def test_conjugated_residue_is_skew(t2: float) -> None:
    V, residual = caustic_V(_model(3), 0.1, t2, (1.0,))

    assert residual <= 1e-10 * max(1.0, max_norm(V))


def test_restricted_system_on_the_caustic() -> None:
    model = _model(3)

    restricted = caustic_restricted_system(model, 0.0, (1.0,))

    iv = 1j * model.v12
    assert max_norm(restricted.J[:2, :2] - np.diag([iv, -iv])) < 1e-12
    result = check_linear_constraints(restricted.form, 1e-12)
    assert max(result.residuals.values()) / result.scale <= 1e-12
    assert restricted_limit_residual(model, 0.0, (1.0,)) <= 1e-9 * max(1.0, max_norm(restricted.system.A))


def test_restricted_system_needs_separated_points() -> None:
    with pytest.raises(StratumError):
        caustic_restricted_system(_model(3), 1.0, (1.0,))


def test_t1_certificate_with_a_varying_metric() -> None:
    metric = MetricModel(np.array([[0.3, 0.2]]), np.array([[1.0, 0.5]]))

    cert = t1_certificate(_model(3, metric), 0.1)

    assert cert.equation_residual <= 1e-8
    assert cert.constraint_residual <= 1e-10


def test_vring_scan_marks_only_the_expected_value() -> None:
    v = vring_value(3)
    candidates = [v, v + 0.05, v - 0.05, 0.0]

    report = vring_scan(_model(3), candidates)

    assert report.bounded == (True, False, False, False)
    assert report.exponents[1] < -0.75
    assert len(report.limits) == 4


def test_vring_scan_for_m_two() -> None:
    report = vring_scan(_model(2), [0.0, 0.05])

    assert report.bounded == (True, False)


def test_vring_scan_needs_a_grid() -> None:
    with pytest.raises(ValueError):
        vring_scan(_model(3), [0.0], grid=(1e-2,))
