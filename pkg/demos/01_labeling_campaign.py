"""Walk through a full labeling campaign against an in-process service.

Uploads the built-in 50-image gold dataset, publishes a K=3 campaign, lets a
handful of simulated app users label everything through the SDK, then pulls
the progress report and the consolidated export.
"""

import json

from taskads import CampaignConfig, PlatformService
from taskads.model import serialize_manifest
from taskads.sdk import AdMode, AdSlotContext, Answer, InProcessTransport, TaskAdClient
from taskads.sim import default_dataset

service = PlatformService()

dataset_id = service.upload_dataset(serialize_manifest(default_dataset()), name="benchmark-50")
print("dataset:", json.dumps(service.dataset_summary(dataset_id), indent=2))

campaign_id = service.create_campaign(
    dataset_id,
    CampaignConfig(
        prompt_template="Does this image contain a {class}?",
        required_engagements=3,
        batch_size=5,
    ),
)
service.publish(campaign_id)
print("campaign published:", campaign_id)

# Three app users answer every batch they are served. A real host app would
# wire presentation_hook to its UI; here it always answers "Yes" quickly.
for user in ("ana", "ben", "chloe"):
    client = TaskAdClient(InProcessTransport(service), user_id=user)
    batches = 0
    while True:
        outcome = client.show_task_ad(
            AdSlotContext(
                user_id=user,
                mode=AdMode.NON_OPTIONAL,
                presentation_hook=lambda prompt, options, task: Answer("Yes", 2.1),
            )
        )
        if outcome.n_answered == 0:
            break
        batches += 1
    print(f"{user}: answered {batches} batches; cache holds {len(client.cache.entries)} items")

report = service.progress(campaign_id)
print(f"progress: {report.items_complete}/{report.items_total} items complete, "
      f"{report.responses_total} responses, verdicts {report.verdict_histogram}")

print("first three export records:")
for line in service.export(campaign_id)[:3]:
    print(" ", line)
