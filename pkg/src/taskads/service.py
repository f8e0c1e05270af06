"""The platform service: practitioner and client operations over one store.

This is the transport-agnostic core; `taskads.httpapi` exposes the same
operations as a JSON HTTP API. Every mutating call appends an event to the
store before acknowledging, and a fresh service instance rebuilds its entire
state from the store, so quota and never-twice guarantees survive restarts.

Responses are append-only: nothing here can mutate or delete a recorded
response. Client-facing payloads never contain gold labels or other users'
responses.
"""

from __future__ import annotations

import threading
import time
from typing import Iterable, Optional, Sequence

from .consolidate import ProgressReport, UnknownCampaign, build_progress, export_records
from .engine import (
    DisseminationEngine,
    EngineError,
    ReservationPolicy,
    batch_from_doc,
    batch_to_doc,
)
from .model import (
    Campaign,
    CampaignConfig,
    CampaignStatus,
    DomainError,
    Response,
    new_id,
    validate_manifest,
)
from .storage import (
    MemoryStore,
    campaign_to_state,
    engine_from_state,
    engine_to_state,
    manifest_from_state,
    manifest_to_state,
)


class ServiceError(DomainError):
    pass


class UnknownBatch(ServiceError):
    def __init__(self, batch_id: str):
        super().__init__(f"unknown batch {batch_id!r}")


class ValidationFailed(ServiceError):
    """Wraps a domain validation error for the upload surface."""

    def __init__(self, cause: DomainError):
        self.cause = cause
        self.line = getattr(cause, "line", None)
        super().__init__(str(cause))


class PlatformService:
    def __init__(
        self,
        store=None,
        *,
        policy: ReservationPolicy = ReservationPolicy(),
        clock=time.time,
        rng_seed: Optional[int] = None,
        compact_every: int = 10_000,
    ):
        self.store = store if store is not None else MemoryStore()
        self.clock = clock
        self.policy = policy
        self._lock = threading.RLock()
        self._compact_every = compact_every
        self._events_since_compact = 0
        self.version = 0
        self.engine = DisseminationEngine(policy=policy, rng_seed=rng_seed)
        self._recover()

    # -- persistence ---------------------------------------------------------

    def _recover(self) -> None:
        snapshot, events = self.store.load()
        if snapshot is not None:
            self.engine = engine_from_state(snapshot["engine"], policy=self.policy)
            self.version = snapshot["version"]
        for event in events:
            self._apply(event)
            self.version += 1

    def _log(self, event: dict) -> None:
        self.store.append(event)
        self.version += 1
        self._events_since_compact += 1
        if self._events_since_compact >= self._compact_every:
            self.compact()

    def compact(self) -> None:
        """Fold the log into a snapshot; log restarts empty."""
        with self._lock:
            self.store.compact(self.snapshot_state())
            self._events_since_compact = 0

    def snapshot_state(self) -> dict:
        """Full persistent state at the current version."""
        with self._lock:
            return {"version": self.version, "engine": engine_to_state(self.engine)}

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "dataset":
            self.engine.add_dataset(manifest_from_state(event["manifest"]))
        elif kind == "campaign":
            from .storage import campaign_from_state

            self.engine.add_campaign(campaign_from_state(event["campaign"]))
        elif kind == "status":
            self.engine.set_status(event["campaign_id"], CampaignStatus(event["target"]))
        elif kind == "worker":
            self.engine.add_worker(event["user_id"], event["now"])
        elif kind == "batch":
            self.engine.apply_batch(batch_from_doc(event["doc"]))
        elif kind == "response":
            response = Response(
                assignment_id=event["assignment_id"],
                choice=event["choice"],
                elapsed=event["elapsed"],
                submitted_at=event["submitted_at"],
            )
            self.engine.record_completion(event["assignment_id"], response, event["now"])
        elif kind == "expire":
            self.engine.expire_stale(event["now"])
        elif kind == "reopen":
            self.engine.reopen_item(event["campaign_id"], event["item_id"], event["extra"])
        else:
            raise ServiceError(f"unknown event type {kind!r}")

    # -- practitioner operations ----------------------------------------------

    def upload_dataset(self, manifest_text: str, *, name: str = "unnamed") -> str:
        """Validate and persist a line-delimited manifest; returns dataset_id.

        Identical re-uploads create new datasets on purpose; deduplication is
        a console concern.
        """
        with self._lock:
            now = self.clock()
            try:
                manifest = validate_manifest(manifest_text, name=name, created_at=now)
            except DomainError as exc:
                raise ValidationFailed(exc) from exc
            self.engine.add_dataset(manifest)
            self._log({"type": "dataset", "manifest": manifest_to_state(manifest)})
            return manifest.dataset_id

    def dataset_summary(self, dataset_id: str) -> dict:
        with self._lock:
            if dataset_id not in self.engine.datasets:
                from .engine import UnknownDataset

                raise UnknownDataset(dataset_id)
            m = self.engine.datasets[dataset_id]
            return {
                "dataset_id": m.dataset_id,
                "name": m.name,
                "created_at": m.created_at,
                "items_total": len(m.items),
                "class_histogram": m.class_histogram(),
                "gold_items": sum(1 for it in m.items if it.gold is not None),
            }

    def create_campaign(self, dataset_id: str, config: CampaignConfig) -> str:
        with self._lock:
            campaign = Campaign(campaign_id=new_id("cmp"), dataset_id=dataset_id, config=config)
            self.engine.add_campaign(campaign)  # raises UnknownDataset
            self._log({"type": "campaign", "campaign": campaign_to_state(campaign)})
            return campaign.campaign_id

    def publish(self, campaign_id: str) -> CampaignStatus:
        return self._set_status(campaign_id, CampaignStatus.PUBLISHED)

    def unpublish(self, campaign_id: str) -> CampaignStatus:
        return self._set_status(campaign_id, CampaignStatus.UNPUBLISHED)

    def _set_status(self, campaign_id: str, target: CampaignStatus) -> CampaignStatus:
        with self._lock:
            campaign = self.engine.set_status(campaign_id, target)
            self._log({"type": "status", "campaign_id": campaign_id, "target": target.value})
            return campaign.status

    def campaign_overview(self, campaign_id: Optional[str] = None) -> list[dict]:
        with self._lock:
            if campaign_id is None:
                ids = sorted(self.engine.campaigns)
            else:
                self.engine._campaign(campaign_id)
                ids = [campaign_id]
            return [campaign_to_state(self.engine.campaigns[cid]) for cid in ids]

    def progress(self, campaign_id: str) -> ProgressReport:
        with self._lock:
            try:
                counts = self.engine.item_counts(campaign_id)
            except EngineError:
                raise UnknownCampaign(campaign_id) from None
            return build_progress(
                campaign_id,
                counts,
                self.engine.responses_for(campaign_id),
                generated_at=self.clock(),
            )

    def export(self, campaign_id: str, *, include_detail: bool = False) -> Iterable[str]:
        with self._lock:
            counts = self.engine.item_counts(campaign_id)
            responses = self.engine.responses_for(campaign_id)
            campaign = self.engine.campaigns[campaign_id]
            manifest = self.engine.datasets[campaign.dataset_id]
            gold = {it.item_id: it.gold for it in manifest.items}
            return list(export_records(counts, responses, gold, include_detail=include_detail))

    def reopen_item(self, campaign_id: str, item_id: str, extra: int = 1) -> int:
        with self._lock:
            required = self.engine.reopen_item(campaign_id, item_id, extra)
            self._log({"type": "reopen", "campaign_id": campaign_id, "item_id": item_id, "extra": extra})
            return required

    # -- client operations -----------------------------------------------------

    def serve_batch(
        self,
        user_id: str,
        campaign_id: Optional[str] = None,
        *,
        seed: Optional[int] = None,
    ) -> dict:
        """Reserve and return a batch document for a user.

        Lazily expires stale reservations first, so abandoned slots flow back
        into the pool. Returns `{"no_tasks": true}` when nothing is eligible.
        Gold labels never appear in the response.
        """
        with self._lock:
            now = self.clock()
            expired = self.engine.expire_stale(now)
            if expired:
                self._log({"type": "expire", "now": now})
            if user_id not in self.engine.workers:
                self.engine.add_worker(user_id, now)
                self._log({"type": "worker", "user_id": user_id, "now": now})
            campaign_filter: Optional[Sequence[str]] = None if campaign_id is None else [campaign_id]
            batch = self.engine.select_batch(campaign_filter, user_id, now, seed=seed)
            if batch is not None and not batch.empty:
                self._log({"type": "batch", "doc": batch_to_doc(batch, user_id)})
            return batch_to_doc(batch, user_id)

    def submit_responses(self, batch_id: str, responses: Sequence[dict]) -> list[dict]:
        """Record responses for a served batch; each is acked individually."""
        with self._lock:
            if self.engine.batch(batch_id) is None:
                raise UnknownBatch(batch_id)
            now = self.clock()
            acks = []
            for rec in responses:
                aid = rec["assignment_id"]
                try:
                    response = Response(
                        assignment_id=aid,
                        choice=rec["choice"],
                        elapsed=float(rec["elapsed"]),
                        submitted_at=now,
                    )
                    delta = self.engine.record_completion(aid, response, now)
                except (EngineError, DomainError) as exc:
                    acks.append(
                        {
                            "assignment_id": aid,
                            "accepted": False,
                            "code": type(exc).__name__,
                            "error": str(exc),
                        }
                    )
                    continue
                self._log(
                    {
                        "type": "response",
                        "assignment_id": aid,
                        "choice": response.choice,
                        "elapsed": response.elapsed,
                        "submitted_at": response.submitted_at,
                        "now": now,
                    }
                )
                acks.append(
                    {
                        "assignment_id": aid,
                        "accepted": True,
                        "item_id": delta.item_id,
                        "campaign_id": delta.campaign_id,
                        "item_complete": delta.item_complete,
                        "campaign_complete": delta.campaign_complete,
                    }
                )
            return acks

    def expire_stale(self) -> int:
        with self._lock:
            now = self.clock()
            n = self.engine.expire_stale(now)
            if n:
                self._log({"type": "expire", "now": now})
            return n

    def check_invariants(self) -> None:
        self.engine.check_invariants()

    def close(self) -> None:
        self.store.close()
