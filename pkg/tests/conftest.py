import pytest

from evorest.driver import DriverClient
from evorest.executor import InProcessTransport
from evorest.schema import parse_schema
from evorest.simsut import SimService, load_fixture


class SimRig:
    """A sim SUT wired to a driver client over the in-process transport."""

    def __init__(self, fixture_name: str):
        self.spec = load_fixture(fixture_name)
        self.service = SimService(self.spec)
        self.transport = InProcessTransport(self.service)
        self.driver = DriverClient("http://sim-sut.local", self.transport)

    def schema(self):
        self.driver.start_sut()
        _, _, text = self.transport.request(
            "GET", self.driver.get_info().swagger_json_url, [], None, 1000
        )
        return parse_schema(text)


@pytest.fixture
def crud_rig():
    return SimRig("crud-chain")


@pytest.fixture
def needle_rig():
    return SimRig("needle")


@pytest.fixture
def faulty_rig():
    return SimRig("faulty")


class TickClock:
    """Deterministic clock: advances a fixed amount per reading."""

    def __init__(self, step=0.001):
        self.now = 0.0
        self.step = step

    def __call__(self):
        self.now += self.step
        return self.now


@pytest.fixture
def tick_clock():
    return TickClock()
