import pytest

from nhfp import floquet
from nhfp.model import DriveParams
from nhfp.nhfp_base import zone_momentum_grid


@pytest.fixture(scope="session")
def lossy_params() -> DriveParams:
    return DriveParams()


@pytest.fixture(scope="session")
def hermitian_params() -> DriveParams:
    return DriveParams(gamma0=0.0)


@pytest.fixture(scope="session")
def lossy_bands(lossy_params):
    return floquet.band_structure(lossy_params, zone_momentum_grid(128))


@pytest.fixture(scope="session")
def hermitian_bands(hermitian_params):
    return floquet.band_structure(hermitian_params, zone_momentum_grid(128))
