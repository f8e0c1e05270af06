"""Append-only event log with snapshot compaction.

Every accepted state change is one JSON line; recovery loads the latest
snapshot (if any) and replays the tail of the log through the engine. An
event is flushed (and by default fsynced) before the operation is
acknowledged, so an accepted response survives a crash by construction.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from .engine import DisseminationEngine, ReservationPolicy, batch_from_doc
from .model import (
    Assignment,
    AssignmentState,
    Campaign,
    CampaignConfig,
    CampaignStatus,
    DatasetManifest,
    LabelItem,
    Response,
    WorkerIdentity,
)


class MemoryStore:
    """Keeps the event history in memory; snapshots replace the history."""

    def __init__(self) -> None:
        self._snapshot: Optional[dict] = None
        self._events: list[dict] = []

    def append(self, event: dict) -> None:
        self._events.append(event)

    def load(self) -> tuple[Optional[dict], list[dict]]:
        return self._snapshot, list(self._events)

    def compact(self, snapshot: dict) -> None:
        self._snapshot = snapshot
        self._events = []

    def close(self) -> None:
        pass


class FileStore:
    """Log + snapshot as files under one directory.

    The log is line-delimited JSON. fsync-per-event is on by default; turn it
    off for bulk desk-scale runs where process-level durability is enough.
    """

    def __init__(self, root: str | Path, *, fsync: bool = True):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_path = self.root / "events.jsonl"
        self.snapshot_path = self.root / "snapshot.json"
        self._fsync = fsync
        self._fh = open(self.log_path, "a", encoding="utf-8")

    def append(self, event: dict) -> None:
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())

    def load(self) -> tuple[Optional[dict], list[dict]]:
        snapshot = None
        if self.snapshot_path.exists():
            snapshot = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
        events = []
        if self.log_path.exists():
            with open(self.log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        events.append(json.loads(line))
                    except json.JSONDecodeError:
                        break  # torn tail write from a crash; everything acked is intact
        return snapshot, events

    def compact(self, snapshot: dict) -> None:
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(snapshot, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.snapshot_path)
        self._fh.close()
        self._fh = open(self.log_path, "w", encoding="utf-8")
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


# -- engine state (de)serialization -----------------------------------------


def _item_to_state(item: LabelItem) -> dict:
    return {
        "item_id": item.item_id,
        "media_ref": item.media_ref,
        "class_name": item.class_name,
        "gold": item.gold,
    }


def manifest_to_state(m: DatasetManifest) -> dict:
    return {
        "dataset_id": m.dataset_id,
        "name": m.name,
        "created_at": m.created_at,
        "items": [_item_to_state(it) for it in m.items],
    }


def manifest_from_state(doc: dict) -> DatasetManifest:
    return DatasetManifest(
        dataset_id=doc["dataset_id"],
        name=doc["name"],
        created_at=doc["created_at"],
        items=tuple(
            LabelItem(d["item_id"], d["media_ref"], d["class_name"], d.get("gold"))
            for d in doc["items"]
        ),
    )


def campaign_to_state(c: Campaign) -> dict:
    return {
        "campaign_id": c.campaign_id,
        "dataset_id": c.dataset_id,
        "status": c.status.value,
        "config": {
            "prompt_template": c.config.prompt_template,
            "options": list(c.config.options),
            "required_engagements": c.config.required_engagements,
            "batch_size": c.config.batch_size,
            "time_budget": c.config.time_budget,
            "reward_points": c.config.reward_points,
        },
    }


def campaign_from_state(doc: dict) -> Campaign:
    cfg = doc["config"]
    return Campaign(
        campaign_id=doc["campaign_id"],
        dataset_id=doc["dataset_id"],
        status=CampaignStatus(doc["status"]),
        config=CampaignConfig(
            prompt_template=cfg["prompt_template"],
            options=tuple(cfg["options"]),
            required_engagements=cfg["required_engagements"],
            batch_size=cfg["batch_size"],
            time_budget=cfg["time_budget"],
            reward_points=cfg["reward_points"],
        ),
    )


def engine_to_state(engine: DisseminationEngine) -> dict:
    """Full persistent state of the engine at one version."""
    from .engine import batch_to_doc

    with engine._lock:
        return {
            "datasets": [manifest_to_state(m) for m in engine.datasets.values()],
            "campaigns": [campaign_to_state(c) for c in engine.campaigns.values()],
            "workers": [
                {"user_id": w.user_id, "created_at": w.created_at}
                for w in engine.workers.values()
            ],
            "assignments": [
                {
                    "assignment_id": a.assignment_id,
                    "campaign_id": a.campaign_id,
                    "item_id": a.item_id,
                    "user_id": a.user_id,
                    "reserved_at": a.reserved_at,
                    "expires_at": a.expires_at,
                    "state": a.state.value,
                }
                for a in engine.assignments.values()
            ],
            "responses": [
                {
                    "assignment_id": aid,
                    "choice": engine.responses[aid].choice,
                    "elapsed": engine.responses[aid].elapsed,
                    "submitted_at": engine.responses[aid].submitted_at,
                }
                for aid in engine.response_order
            ],
            "extra_engagements": {
                cid: {iid: st.extra for iid, st in items.items() if st.extra}
                for cid, items in engine._items.items()
            },
            "batches": [batch_to_doc(b, b.user_id) for b in engine._batches.values()],
            "aseq": engine._aseq,
            "bseq": engine._bseq,
        }


def engine_from_state(state: dict, *, policy: ReservationPolicy, rng_seed: Optional[int] = None) -> DisseminationEngine:
    engine = DisseminationEngine(policy=policy, rng_seed=rng_seed)
    for doc in state["datasets"]:
        engine.add_dataset(manifest_from_state(doc))
    for doc in state["campaigns"]:
        campaign = campaign_from_state(doc)
        # add_campaign builds item bookkeeping; status restored directly below.
        engine.add_campaign(Campaign(campaign.campaign_id, campaign.dataset_id, campaign.config))
        engine.campaigns[campaign.campaign_id] = campaign
    for doc in state["workers"]:
        engine.workers[doc["user_id"]] = WorkerIdentity(doc["user_id"], doc["created_at"])
    for cid, extras in state.get("extra_engagements", {}).items():
        for iid, extra in extras.items():
            engine._items[cid][iid].extra = extra
    for doc in state.get("batches", []):
        if not doc.get("no_tasks"):
            engine._batches[doc["batch_id"]] = batch_from_doc(doc)
    for doc in state["assignments"]:
        a = Assignment(
            assignment_id=doc["assignment_id"],
            campaign_id=doc["campaign_id"],
            item_id=doc["item_id"],
            user_id=doc["user_id"],
            reserved_at=doc["reserved_at"],
            expires_at=doc["expires_at"],
            state=AssignmentState(doc["state"]),
        )
        engine.assignments[a.assignment_id] = a
        item_state = engine._items[a.campaign_id][a.item_id]
        user_state = engine._user_state(a.campaign_id, a.user_id)
        if a.state is AssignmentState.IN_FLIGHT:
            item_state.inflight.add(a.assignment_id)
            user_state.inflight.add(a.item_id)
        elif a.state is AssignmentState.COMPLETED:
            item_state.completed += 1
            user_state.done.add(a.item_id)
    for doc in state["responses"]:
        engine.responses[doc["assignment_id"]] = Response(
            assignment_id=doc["assignment_id"],
            choice=doc["choice"],
            elapsed=doc["elapsed"],
            submitted_at=doc["submitted_at"],
        )
        engine.response_order.append(doc["assignment_id"])
    engine._aseq = state["aseq"]
    engine._bseq = state["bseq"]
    return engine
