from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
import pytest

from isolab.blocks import BlockPartition, Lambda
from isolab.pfaffian import CoalescedSystem
from isolab.showcase import ThreeDExample
from isolab.utils.lab_log import LabLogImpl

RandomSystem = Callable[..., CoalescedSystem]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def quiet_log() -> LabLogImpl:
    return LabLogImpl(quiet=True)


@pytest.fixture
def three_d() -> ThreeDExample:
    """ρ = 1/2: A₂₃ = 1, A₃₂ = 1/4, c = (1, 0, 0, 1)."""
    return ThreeDExample(A23=1.0, A32=0.25)


@pytest.fixture
def random_system(rng: np.random.Generator) -> RandomSystem:
    """Factory for systems with well separated λ and a complex Gaussian A."""

    def make(sizes: Sequence[int], scale: float = 0.3, spread: float = 1.0) -> CoalescedSystem:
        part = BlockPartition(tuple(sizes))
        lam = spread * np.exp(2j * np.pi * np.arange(part.s) / part.s) if part.s > 1 else np.zeros(1)
        A = scale * (rng.standard_normal((part.n, part.n)) + 1j * rng.standard_normal((part.n, part.n)))
        return CoalescedSystem(Lambda(tuple(lam), part), A)

    return make
