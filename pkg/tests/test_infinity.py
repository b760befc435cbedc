from __future__ import annotations

import numpy as np
import pytest

from isolab.blocks import BlockPartition, Lambda, max_norm
from isolab.errors import StratumError, UnsupportedStructureError
from isolab.infinity import (
    choose_admissible_tau,
    formal_series,
    sector_solution,
    stokes_rays,
)
from isolab.pfaffian import CoalescedSystem
from isolab.showcase import ThreeDExample, example3d_system

from conftest import RandomSystem


def _two_points() -> Lambda:
    return Lambda((0.0, 1.0), BlockPartition((1, 1)))


def test_stokes_rays_of_two_points() -> None:
    geom = stokes_rays(_two_points())

    lam = _two_points().array

    assert [(ray.i, ray.j) for ray in geom.rays] == [(0, 1), (1, 0)]
    assert [ray.theta for ray in geom.rays] == pytest.approx([np.pi / 2, 3 * np.pi / 2])
    for ray in geom.rays:
        w = (lam[ray.i] - lam[ray.j]) * np.exp(1j * ray.theta)
        assert abs(w.real) < 1e-15
        assert w.imag < 0


def test_admissible_direction_bisects_the_widest_gap() -> None:
    geom = choose_admissible_tau([stokes_rays(_two_points())])

    assert geom.tau == pytest.approx(0.0)
    assert geom.margin == pytest.approx(np.pi / 2)
    lo, hi = geom.sector(1)
    assert lo == pytest.approx(-np.pi / 4)
    assert hi == pytest.approx(np.pi + np.pi / 4)


def test_admissible_direction_over_several_samples() -> None:
    part = BlockPartition((1, 1))
    geoms = [stokes_rays(Lambda((0.0, v), part)) for v in (1.0, 1.0j)]

    geom = choose_admissible_tau(geoms, preferred=0.0)

    assert geom.margin == pytest.approx(np.pi / 4)
    for ray in geom.rays:
        d = (ray.theta - geom.tau) % np.pi
        assert min(d, np.pi - d) >= geom.margin - 1e-12


def test_admissible_direction_needs_enough_margin() -> None:
    with pytest.raises(StratumError):
        choose_admissible_tau([stokes_rays(_two_points())], min_margin=2.0)


def test_single_block_has_no_rays() -> None:
    geom = choose_admissible_tau([stokes_rays(Lambda((0.0,), BlockPartition((2,))))], preferred=0.3)

    assert geom.rays == ()
    assert geom.tau == 0.3


def test_block_diagonal_residue_gives_exact_formal_solution() -> None:
    part = BlockPartition((2, 1))
    A = np.zeros((3, 3), dtype=complex)
    A[:2, :2] = [[0.3, 0.1], [0.2, -0.1]]
    A[2, 2] = 0.25
    sys = CoalescedSystem(Lambda((0.0, 1.0), part), A)

    fd = formal_series(sys, K=6)

    assert fd.exact
    assert fd.certificate.passed()
    geom = choose_admissible_tau([stokes_rays(sys.lam)])
    Y = sector_solution(sys, geom, fd, 0)
    assert Y.block_methods == ("exact", "exact")
    assert Y.eps_init == 0.0


def test_formal_series_certificate_on_a_generic_system(random_system: RandomSystem) -> None:
    sys = random_system((1, 2))

    fd = formal_series(sys, K=8)

    assert not fd.exact
    assert fd.certificate.passed(slack=0.5)
    assert fd.certificate.slope >= 8 + 0.5
    assert max_norm(fd.F[0] - np.eye(3)) == 0.0


def test_partial_resonance_shifts_the_integer_exponents(three_d: ThreeDExample) -> None:
    sys = example3d_system(three_d, 1.0)

    fd = formal_series(sys, K=8)

    pairs = fd.jordanization.resonant_pairs
    assert [(p.i, p.j, p.ell) for p in pairs] == [(2, 1, 1)]
    assert fd.D[1] - fd.D[2] == 1
    assert fd.certificate.passed(slack=0.5)


def test_partial_resonance_in_a_jordan_block_is_unsupported() -> None:
    part = BlockPartition((1, 3))
    A = np.zeros((4, 4), dtype=complex)
    A[1:, 1:] = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]
    A[0, 1] = A[1, 0] = 0.2

    with pytest.raises(UnsupportedStructureError):
        formal_series(CoalescedSystem(Lambda((0.0, 1.0), part), A))


def test_resonant_gap_beyond_the_truncation_is_unsupported() -> None:
    part = BlockPartition((1, 2))
    A = np.zeros((3, 3), dtype=complex)
    A[1:, 1:] = np.diag([5.5, 0.5])

    with pytest.raises(UnsupportedStructureError):
        formal_series(CoalescedSystem(Lambda((0.0, 1.0), part), A), K=3)
