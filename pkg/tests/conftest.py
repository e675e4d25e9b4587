import pytest

from sphereflow import DomainSpec, build_basis


@pytest.fixture(scope="session")
def basis9():
    """Default 1D basis at level 9 (modes k = 1..10)."""
    return build_basis(DomainSpec.for_level(1, [1.0], 9))


@pytest.fixture(scope="session")
def basis7():
    """Small 1D basis at level 7 with an oversampled grid, used by the
    quadrature-sensitive identity checks."""
    return build_basis(DomainSpec(1, (1.0,), (32,), 7))


@pytest.fixture(scope="session")
def basis2d():
    """Small 2D basis."""
    return build_basis(DomainSpec.for_level(2, [1.0, 1.0], 6))
