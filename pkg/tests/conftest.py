import pytest

from vdwrelax.thermo import REDUCED_VDW
from vdwrelax.phase_diagram import build_dome


@pytest.fixture(scope="session")
def params():
    return REDUCED_VDW


@pytest.fixture(scope="session")
def dome(params):
    return build_dome(params)
