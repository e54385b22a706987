import numpy as np
import pytest

from flatpwa.miencoding import build_admissible_union, validate_big_m_override
from flatpwa.plants import aircraft, pmsm, uav
from flatpwa.relupwa import ReluNetwork, enumerate_cells


def _data(name):
    from pathlib import Path
    import flatpwa
    return Path(flatpwa.__file__).parent / "data" / name


@pytest.fixture(scope="session")
def aircraft_net():
    return ReluNetwork.load(_data("aircraft_net.json"))


@pytest.fixture(scope="session")
def uav_net():
    return ReluNetwork.load(_data("uav_net.json"))


@pytest.fixture(scope="session")
def pmsm_net():
    return ReluNetwork.load(_data("pmsm_net.json"))


@pytest.fixture(scope="session")
def aircraft_plant():
    return aircraft.make_plant()


@pytest.fixture(scope="session")
def uav_plant():
    return uav.make_plant()


@pytest.fixture(scope="session")
def pmsm_plant():
    return pmsm.make_plant()


@pytest.fixture(scope="session")
def aircraft_cells(aircraft_net, aircraft_plant):
    return enumerate_cells(aircraft_net, aircraft_plant.net_workspace)


@pytest.fixture(scope="session")
def aircraft_union(aircraft_cells):
    return build_admissible_union(aircraft_cells, u_max=5.0, eps=0.1897)


@pytest.fixture(scope="session")
def aircraft_bigm(aircraft_union, aircraft_plant):
    return validate_big_m_override(aircraft_union, aircraft_plant.net_workspace,
                                   5000.0)


@pytest.fixture(scope="session")
def uav_cells(uav_net, uav_plant):
    return enumerate_cells(uav_net, uav_plant.net_workspace)


@pytest.fixture(scope="session")
def pmsm_cells(pmsm_net, pmsm_plant):
    return enumerate_cells(pmsm_net, pmsm_plant.net_workspace)


# the cell of the published big-M appendix: the fully-active aircraft cell
# with tightened output rows, printed to three decimals
PAPER_THETA2 = np.array([
    [7.212, 1.076],
    [-7.212, -1.076],
    [7.094, -0.035],
    [-4.200, 0.021],
])
PAPER_THETA2_RHS = np.array([3.571, 4.049, 1.427, 0.852])


@pytest.fixture(scope="session")
def paper_cell2():
    from flatpwa.polytope import HPolytope
    return HPolytope(PAPER_THETA2, PAPER_THETA2_RHS)
