"""Durability: kill the service mid-campaign and rebuild from the event log.

Every accepted mutation is appended (and flushed) to a line-delimited log
before it is acknowledged, so a fresh instance over the same directory
recovers the exact state: counts, reservations, user history.
"""

import tempfile
from pathlib import Path

from taskads import CampaignConfig, PlatformService
from taskads.model import serialize_manifest
from taskads.sim import default_dataset
from taskads.storage import FileStore

root = Path(tempfile.mkdtemp()) / "store"

service = PlatformService(FileStore(root))
dataset_id = service.upload_dataset(serialize_manifest(default_dataset()))
campaign_id = service.create_campaign(
    dataset_id, CampaignConfig(prompt_template="Contains a {class}?", required_engagements=3)
)
service.publish(campaign_id)

for user in ("u1", "u2"):
    doc = service.serve_batch(user)
    service.submit_responses(
        doc["batch_id"],
        [{"assignment_id": t["assignment_id"], "choice": "Yes", "elapsed": 2.0} for t in doc["tasks"]],
    )
before = service.progress(campaign_id)
print(f"before crash: {before.responses_total} responses at version {service.version}")
print(f"event log: {sum(1 for _ in open(root / 'events.jsonl'))} lines")

# no shutdown, no flushing courtesy: the object is simply dropped
del service

revived = PlatformService(FileStore(root))
after = revived.progress(campaign_id)
revived.check_invariants()
print(f"after restart: {after.responses_total} responses at version {revived.version}")
assert after.responses_total == before.responses_total

# u1's history survived: they are never re-served what they completed
doc = revived.serve_batch("u1")
print("u1 re-served items overlap with completed:",
      bool({t['item_id'] for t in doc['tasks']} & {
          a.item_id for a in revived.engine.assignments.values()
          if a.user_id == 'u1' and a.state.value == 'Completed'}))

revived.compact()
print(f"after compaction: snapshot written, log truncated "
      f"({sum(1 for _ in open(root / 'events.jsonl'))} lines)")
