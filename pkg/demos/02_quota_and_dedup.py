"""Show the two serving guarantees: engagement quotas and never-twice.

A tiny campaign (5 items, K=2) makes the mechanics visible: reservations
count toward the quota, expired reservations flow back, and no user is ever
served an item they already completed.
"""

import json

from taskads import CampaignConfig, PlatformService
from taskads.engine import ReservationPolicy
from taskads.storage import MemoryStore

clock = [0.0]
service = PlatformService(
    MemoryStore(), policy=ReservationPolicy(ttl=60.0), clock=lambda: clock[0], rng_seed=42
)

manifest = "\n".join(
    json.dumps({"item_id": f"img-{i}", "media_ref": f"img://{i}", "class_name": "Dog"})
    for i in range(5)
)
dataset_id = service.upload_dataset(manifest, name="tiny")
campaign_id = service.create_campaign(
    dataset_id,
    CampaignConfig(prompt_template="Is there a {class}?", required_engagements=2, batch_size=5),
)
service.publish(campaign_id)

batch_a = service.serve_batch("alice")
print("alice reserved:", [t["item_id"] for t in batch_a["tasks"]])
acks = service.submit_responses(
    batch_a["batch_id"],
    [{"assignment_id": t["assignment_id"], "choice": "Yes", "elapsed": 1.2} for t in batch_a["tasks"]],
)
print("alice answered:", sum(a["accepted"] for a in acks), "items")

# one engagement left per item; bob reserves all of them
batch_b = service.serve_batch("bob")
print("bob reserved:  ", [t["item_id"] for t in batch_b["tasks"]])

# reservations count toward K, so a third user gets nothing right now
print("carol gets:", service.serve_batch("carol"))

# bob walks away; his reservations expire and carol can label
clock[0] += 120.0
batch_c = service.serve_batch("carol")
print("after bob's TTL, carol reserved:", [t["item_id"] for t in batch_c["tasks"]])

# never-twice: alice completed everything once, so she is done for good
print("alice again:", service.serve_batch("alice"))

counts = service.engine.item_counts(campaign_id)
print("per-item completed/required:", {k: v for k, v in sorted(counts.items())})
