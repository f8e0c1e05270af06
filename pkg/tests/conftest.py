import json

import pytest

from taskads.engine import ReservationPolicy
from taskads.model import CampaignConfig
from taskads.service import PlatformService
from taskads.sim import default_dataset
from taskads.storage import MemoryStore, manifest_to_state


class ManualClock:
    """Test clock: starts at t=0 and only moves when told to."""

    def __init__(self, start: float = 0.0):
        self.t = start

    def __call__(self) -> float:
        return self.t

    def advance(self, dt: float) -> None:
        self.t += dt


def manifest_text(n_classes: int = 5, per_class: int = 10) -> str:
    lines = []
    for c in range(n_classes):
        cls = f"Class{c}"
        for i in range(per_class):
            gold = "yes" if i < per_class // 2 else "no"
            lines.append(
                json.dumps(
                    {
                        "item_id": f"{cls.lower()}-{i}",
                        "media_ref": f"img://{cls.lower()}/{i}",
                        "class_name": cls,
                        "gold": gold,
                    }
                )
            )
    return "\n".join(lines) + "\n"


@pytest.fixture
def clock():
    return ManualClock()


@pytest.fixture
def service(clock):
    return PlatformService(MemoryStore(), policy=ReservationPolicy(ttl=120.0), clock=clock, rng_seed=7)


@pytest.fixture
def published_campaign(service):
    """50-item gold dataset, K=3, batch_size=5, published."""
    dataset_id = service.upload_dataset(manifest_text(), name="gold-50")
    campaign_id = service.create_campaign(
        dataset_id,
        CampaignConfig(prompt_template="Does this image contain a {class}?", required_engagements=3, batch_size=5),
    )
    service.publish(campaign_id)
    return campaign_id


def gold_dataset_text() -> str:
    """The built-in 50-image benchmark dataset as manifest text."""
    from taskads.model import serialize_manifest

    return serialize_manifest(default_dataset())


def answer_batch(service, doc, choice="Yes", elapsed=3.3):
    """Submit the same choice for every task in a served batch."""
    return service.submit_responses(
        doc["batch_id"],
        [{"assignment_id": t["assignment_id"], "choice": choice, "elapsed": elapsed} for t in doc["tasks"]],
    )


__all__ = ["ManualClock", "manifest_text", "manifest_to_state", "gold_dataset_text", "answer_batch"]
