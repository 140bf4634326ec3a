import pytest

from microcrowd.clock import ManualClock
from microcrowd.scheduler import SchedulerConfig
from microcrowd.service import Orchestrator, ServiceConfig


@pytest.fixture
def make_orch(tmp_path):
    """Factory for orchestrators on a throwaway log with a manual clock."""

    counter = {"n": 0}

    def build(log_name: str | None = None, **scheduler_overrides) -> Orchestrator:
        counter["n"] += 1
        name = log_name or f"events-{counter['n']}.log"
        config = ServiceConfig(
            log_path=str(tmp_path / name),
            clock_mode="manual",
            scheduler=SchedulerConfig(**scheduler_overrides),
        )
        return Orchestrator(config, clock=ManualClock(start_millis=1_000_000))

    return build


DOUBLE_ENDPOINT = {
    "method": "POST",
    "path": "/double",
    "name": "doubleNumber",
    "description": "Doubles the supplied number.",
    "requestSchema": [["n", "number"]],
    "responseSchema": [["result", "number"]],
}


@pytest.fixture
def double_spec():
    return {"name": "doubler", "endpoints": [DOUBLE_ENDPOINT]}
