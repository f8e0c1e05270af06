"""Task dissemination: eligibility, atomic reservation, quotas, expiry.

The engine is the authoritative in-memory model of who may label what. It
enforces the two core guarantees:

* never-twice: a user never receives or completes the same item twice
  within a campaign;
* quota: an item stops being served once it has collected its required
  number of engagements (in-flight reservations count toward the quota
  unless the policy overcommits).

All mutating operations are serialized through a single lock, so reservation
is an atomic check-and-reserve and the guarantees hold under concurrent
serving, submission and expiry. Persistence is layered on top (see
``taskads.service``); the engine itself only needs ``now`` passed in, which
keeps it clock-agnostic and replayable.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (
    Assignment,
    AssignmentState,
    Campaign,
    CampaignStatus,
    DatasetManifest,
    DomainError,
    Response,
    WorkerIdentity,
    render_prompt,
    transition,
)


class EngineError(DomainError):
    pass


class CampaignNotPublished(EngineError):
    def __init__(self, campaign_id: str, status: CampaignStatus):
        self.campaign_id = campaign_id
        super().__init__(f"campaign {campaign_id} is {status.value}, not Published")


class UnknownCampaign(EngineError):
    def __init__(self, campaign_id: str):
        super().__init__(f"unknown campaign {campaign_id!r}")


class UnknownDataset(EngineError):
    def __init__(self, dataset_id: str):
        super().__init__(f"unknown dataset {dataset_id!r}")


class UnknownAssignment(EngineError):
    def __init__(self, assignment_id: str):
        super().__init__(f"unknown assignment {assignment_id!r}")


class UnknownItem(EngineError):
    def __init__(self, item_id: str):
        super().__init__(f"unknown item {item_id!r}")


class AlreadyCompleted(EngineError):
    def __init__(self, assignment_id: str):
        super().__init__(f"assignment {assignment_id} already completed")


class ReservationExpired(EngineError):
    def __init__(self, assignment_id: str):
        super().__init__(f"reservation for assignment {assignment_id} has expired")


class InvalidChoice(EngineError):
    def __init__(self, choice: str, options: Sequence[str]):
        super().__init__(f"choice {choice!r} not among campaign options {list(options)}")


@dataclass(frozen=True)
class ReservationPolicy:
    ttl: float = 120.0  # 4x the 30 s task budget; reclaims abandoned ad slots
    overcommit: bool = False  # False: in-flight reservations count toward the quota

    def __post_init__(self) -> None:
        if self.ttl <= 0:
            raise DomainError("reservation ttl must be > 0")


@dataclass(frozen=True)
class BatchTask:
    assignment_id: str
    item_id: str
    media_ref: str
    prompt: str
    options: tuple[str, ...]


@dataclass(frozen=True)
class TaskBatch:
    batch_id: str
    campaign_id: str
    user_id: str
    tasks: tuple[BatchTask, ...]
    issued_at: float
    time_budget: float
    expires_at: float

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def empty(self) -> bool:
        return not self.tasks


@dataclass(frozen=True)
class CompletionDelta:
    """Progress change caused by one accepted response."""

    campaign_id: str
    item_id: str
    user_id: str
    completed_responses: int
    required: int
    item_complete: bool
    campaign_complete: bool


@dataclass
class _ItemState:
    completed: int = 0
    inflight: set = field(default_factory=set)  # assignment_ids
    extra: int = 0  # quota extension from practitioner re-opens


@dataclass
class _UserState:
    done: set = field(default_factory=set)  # item_ids completed
    inflight: set = field(default_factory=set)  # item_ids reserved


class DisseminationEngine:
    def __init__(self, *, policy: ReservationPolicy = ReservationPolicy(), rng_seed: Optional[int] = None):
        self.policy = policy
        self._lock = threading.RLock()
        self._rng = random.Random(rng_seed)
        self.datasets: dict[str, DatasetManifest] = {}
        self.campaigns: dict[str, Campaign] = {}
        self.workers: dict[str, WorkerIdentity] = {}
        self.assignments: dict[str, Assignment] = {}
        self.responses: dict[str, Response] = {}
        self.response_order: list[str] = []  # assignment_ids, append-only
        self._items: dict[str, dict[str, _ItemState]] = {}  # campaign -> item -> state
        self._users: dict[str, dict[str, _UserState]] = {}  # campaign -> user -> state
        self._batches: dict[str, TaskBatch] = {}
        self._aseq = 0
        self._bseq = 0

    # -- registration ------------------------------------------------------

    def add_dataset(self, manifest: DatasetManifest) -> None:
        with self._lock:
            self.datasets[manifest.dataset_id] = manifest

    def add_campaign(self, campaign: Campaign) -> None:
        with self._lock:
            if campaign.dataset_id not in self.datasets:
                raise UnknownDataset(campaign.dataset_id)
            self.campaigns[campaign.campaign_id] = campaign
            manifest = self.datasets[campaign.dataset_id]
            self._items[campaign.campaign_id] = {it.item_id: _ItemState() for it in manifest.items}
            self._users[campaign.campaign_id] = {}

    def add_worker(self, user_id: str, now: float) -> WorkerIdentity:
        with self._lock:
            worker = self.workers.get(user_id)
            if worker is None:
                worker = WorkerIdentity(user_id=user_id, created_at=now)
                self.workers[user_id] = worker
            return worker

    def set_status(self, campaign_id: str, target: CampaignStatus) -> Campaign:
        with self._lock:
            campaign = self._campaign(campaign_id)
            updated = transition(campaign, target)
            self.campaigns[campaign_id] = updated
            if updated.status is CampaignStatus.PUBLISHED:
                self._maybe_complete(campaign_id)
            return self.campaigns[campaign_id]

    def _campaign(self, campaign_id: str) -> Campaign:
        try:
            return self.campaigns[campaign_id]
        except KeyError:
            raise UnknownCampaign(campaign_id) from None

    # -- quota bookkeeping ---------------------------------------------------

    def _required(self, campaign: Campaign, state: _ItemState) -> int:
        return campaign.config.required_engagements + state.extra

    def _slots_left(self, campaign: Campaign, state: _ItemState) -> int:
        used = state.completed if self.policy.overcommit else state.completed + len(state.inflight)
        return self._required(campaign, state) - used

    def _user_state(self, campaign_id: str, user_id: str) -> _UserState:
        users = self._users[campaign_id]
        if user_id not in users:
            users[user_id] = _UserState()
        return users[user_id]

    # -- operations ----------------------------------------------------------

    def eligible_items(self, campaign_id: str, user_id: str, now: float) -> set[str]:
        """Items this user may still label: quota open and never seen by them."""
        with self._lock:
            campaign = self._campaign(campaign_id)
            if campaign.status is not CampaignStatus.PUBLISHED:
                raise CampaignNotPublished(campaign_id, campaign.status)
            user = self._users[campaign_id].get(user_id, _UserState())
            out = set()
            for item_id, state in self._items[campaign_id].items():
                if item_id in user.done or item_id in user.inflight:
                    continue
                if self._slots_left(campaign, state) > 0:
                    out.add(item_id)
            return out

    def _remaining_work(self, campaign_id: str) -> int:
        campaign = self.campaigns[campaign_id]
        return sum(max(0, self._slots_left(campaign, st)) for st in self._items[campaign_id].values())

    def select_batch(
        self,
        campaign_filter: Optional[Sequence[str]],
        user_id: str,
        now: float,
        *,
        seed: Optional[int] = None,
    ) -> Optional[TaskBatch]:
        """Atomically reserve up to batch_size eligible items for a user.

        Returns None when nothing is eligible (the client treats that as a
        no-tasks outcome and hands control straight back to the host app).
        One batch always serves exactly one campaign: the published campaign
        with the most remaining work. Selection favours items with the fewest
        completed responses; ties are broken by a seeded shuffle, so a given
        (state, seed) pair always yields the same batch.
        """
        with self._lock:
            if campaign_filter is None:
                candidates = sorted(self.campaigns)
            else:
                candidates = list(campaign_filter)
            candidates = [
                cid for cid in candidates
                if cid in self.campaigns and self.campaigns[cid].status is CampaignStatus.PUBLISHED
            ]
            if not candidates:
                return None
            candidates.sort(key=lambda cid: (-self._remaining_work(cid), cid))

            rng = random.Random(seed) if seed is not None else self._rng
            for cid in candidates:
                campaign = self.campaigns[cid]
                eligible = self.eligible_items(cid, user_id, now)
                if not eligible:
                    continue
                order = sorted(eligible)
                rng.shuffle(order)
                items = self._items[cid]
                order.sort(key=lambda iid: items[iid].completed)  # stable: ties keep shuffled order
                picked = order[: campaign.config.batch_size]
                return self._reserve(campaign, user_id, picked, now)
            return None

    def _reserve(self, campaign: Campaign, user_id: str, item_ids: Sequence[str], now: float) -> TaskBatch:
        manifest = self.datasets[campaign.dataset_id]
        user = self._user_state(campaign.campaign_id, user_id)
        expires = now + self.policy.ttl
        tasks = []
        for item_id in item_ids:
            self._aseq += 1
            aid = f"a{self._aseq:08d}"
            assignment = Assignment(
                assignment_id=aid,
                campaign_id=campaign.campaign_id,
                item_id=item_id,
                user_id=user_id,
                reserved_at=now,
                expires_at=expires,
            )
            self.assignments[aid] = assignment
            self._items[campaign.campaign_id][item_id].inflight.add(aid)
            user.inflight.add(item_id)
            item = manifest.item(item_id)
            prompt = render_prompt(campaign.config, item)
            tasks.append(BatchTask(aid, item_id, item.media_ref, prompt, campaign.config.options))
        self._bseq += 1
        batch = TaskBatch(
            batch_id=f"b{self._bseq:08d}",
            campaign_id=campaign.campaign_id,
            user_id=user_id,
            tasks=tuple(tasks),
            issued_at=now,
            time_budget=campaign.config.time_budget,
            expires_at=expires,
        )
        self._batches[batch.batch_id] = batch
        return batch

    def apply_batch(self, batch: TaskBatch) -> None:
        """Re-apply a previously recorded reservation (event-log replay)."""
        with self._lock:
            self._campaign(batch.campaign_id)
            user = self._user_state(batch.campaign_id, batch.user_id)
            for task in batch.tasks:
                assignment = Assignment(
                    assignment_id=task.assignment_id,
                    campaign_id=batch.campaign_id,
                    item_id=task.item_id,
                    user_id=batch.user_id,
                    reserved_at=batch.issued_at,
                    expires_at=batch.expires_at,
                )
                self.assignments[task.assignment_id] = assignment
                self._items[batch.campaign_id][task.item_id].inflight.add(task.assignment_id)
                user.inflight.add(task.item_id)
                self._aseq = max(self._aseq, int(task.assignment_id[1:]))
            self._bseq = max(self._bseq, int(batch.batch_id[1:]))
            self._batches[batch.batch_id] = batch

    def record_completion(self, assignment_id: str, response: Response, now: float) -> CompletionDelta:
        """Accept a response for an in-flight assignment.

        Exactly one engagement is counted per accepted response. Late
        submissions are rejected and the reservation expired on the spot, so
        the item immediately re-enters eligibility.
        """
        with self._lock:
            assignment = self.assignments.get(assignment_id)
            if assignment is None:
                raise UnknownAssignment(assignment_id)
            if assignment.state is AssignmentState.COMPLETED:
                raise AlreadyCompleted(assignment_id)
            if assignment.state is AssignmentState.EXPIRED or now > assignment.expires_at:
                self._expire_one(assignment)
                raise ReservationExpired(assignment_id)
            campaign = self._campaign(assignment.campaign_id)
            if response.choice not in campaign.config.options:
                raise InvalidChoice(response.choice, campaign.config.options)

            self.assignments[assignment_id] = Assignment(
                assignment_id=assignment.assignment_id,
                campaign_id=assignment.campaign_id,
                item_id=assignment.item_id,
                user_id=assignment.user_id,
                reserved_at=assignment.reserved_at,
                expires_at=assignment.expires_at,
                state=AssignmentState.COMPLETED,
            )
            state = self._items[assignment.campaign_id][assignment.item_id]
            state.inflight.discard(assignment_id)
            state.completed += 1
            user = self._user_state(assignment.campaign_id, assignment.user_id)
            user.inflight.discard(assignment.item_id)
            user.done.add(assignment.item_id)
            self.responses[assignment_id] = response
            self.response_order.append(assignment_id)

            required = self._required(campaign, state)
            campaign_complete = self._maybe_complete(assignment.campaign_id)
            return CompletionDelta(
                campaign_id=assignment.campaign_id,
                item_id=assignment.item_id,
                user_id=assignment.user_id,
                completed_responses=state.completed,
                required=required,
                item_complete=state.completed >= required,
                campaign_complete=campaign_complete,
            )

    def _maybe_complete(self, campaign_id: str) -> bool:
        campaign = self.campaigns[campaign_id]
        if campaign.status is not CampaignStatus.PUBLISHED:
            return campaign.status is CampaignStatus.COMPLETE
        done = all(
            st.completed >= self._required(campaign, st)
            for st in self._items[campaign_id].values()
        )
        if done:
            self.campaigns[campaign_id] = transition(campaign, CampaignStatus.COMPLETE)
        return done

    def _expire_one(self, assignment: Assignment) -> None:
        if assignment.state is not AssignmentState.IN_FLIGHT:
            return
        self.assignments[assignment.assignment_id] = Assignment(
            assignment_id=assignment.assignment_id,
            campaign_id=assignment.campaign_id,
            item_id=assignment.item_id,
            user_id=assignment.user_id,
            reserved_at=assignment.reserved_at,
            expires_at=assignment.expires_at,
            state=AssignmentState.EXPIRED,
        )
        state = self._items[assignment.campaign_id][assignment.item_id]
        state.inflight.discard(assignment.assignment_id)
        user = self._user_state(assignment.campaign_id, assignment.user_id)
        user.inflight.discard(assignment.item_id)

    def expire_stale(self, now: float) -> int:
        """Expire every in-flight reservation past its TTL; returns the count."""
        with self._lock:
            stale = [
                a for a in self.assignments.values()
                if a.state is AssignmentState.IN_FLIGHT and a.expires_at < now
            ]
            for assignment in stale:
                self._expire_one(assignment)
            return len(stale)

    def reopen_item(self, campaign_id: str, item_id: str, extra: int = 1) -> int:
        """Extend an item's quota (practitioner action on Undecided items)."""
        with self._lock:
            campaign = self._campaign(campaign_id)
            if campaign.status is CampaignStatus.COMPLETE:
                # Complete is terminal; the campaign can no longer serve.
                raise CampaignNotPublished(campaign_id, campaign.status)
            if item_id not in self._items[campaign_id]:
                raise UnknownItem(item_id)
            if extra < 1:
                raise DomainError("extra engagements must be >= 1")
            state = self._items[campaign_id][item_id]
            state.extra += extra
            return self._required(campaign, state)

    # -- queries -------------------------------------------------------------

    def batch(self, batch_id: str) -> Optional[TaskBatch]:
        return self._batches.get(batch_id)

    def item_counts(self, campaign_id: str) -> dict[str, tuple[int, int]]:
        """item_id -> (completed responses, required engagements)."""
        with self._lock:
            campaign = self._campaign(campaign_id)
            return {
                iid: (st.completed, self._required(campaign, st))
                for iid, st in self._items[campaign_id].items()
            }

    def responses_for(self, campaign_id: str) -> list[tuple[str, str, Response]]:
        """(item_id, user_id, response) triples in acceptance order."""
        with self._lock:
            self._campaign(campaign_id)
            out = []
            for aid in self.response_order:
                assignment = self.assignments[aid]
                if assignment.campaign_id == campaign_id:
                    out.append((assignment.item_id, assignment.user_id, self.responses[aid]))
            return out

    def responses_by_user(self, campaign_id: str, user_id: str) -> list[tuple[str, Response]]:
        with self._lock:
            return [
                (item_id, resp)
                for item_id, uid, resp in self.responses_for(campaign_id)
                if uid == user_id
            ]

    def check_invariants(self) -> None:
        """Raise AssertionError if never-twice, quota or conservation is broken."""
        with self._lock:
            seen: dict[tuple[str, str, str], int] = {}
            per_state = {s: 0 for s in AssignmentState}
            for assignment in self.assignments.values():
                per_state[assignment.state] += 1
                if assignment.state is AssignmentState.COMPLETED:
                    key = (assignment.campaign_id, assignment.user_id, assignment.item_id)
                    seen[key] = seen.get(key, 0) + 1
            dupes = {k: n for k, n in seen.items() if n > 1}
            assert not dupes, f"never-twice violated: {dupes}"
            assert sum(per_state.values()) == len(self.assignments)
            for cid, items in self._items.items():
                campaign = self.campaigns[cid]
                for iid, st in items.items():
                    required = self._required(campaign, st)
                    if not self.policy.overcommit:
                        assert st.completed <= required, f"quota exceeded on {cid}/{iid}"
                        assert st.completed + len(st.inflight) <= required, f"overcommit on {cid}/{iid}"
                recomputed = sum(st.completed for st in items.values())
                recorded = sum(
                    1 for aid in self.response_order if self.assignments[aid].campaign_id == cid
                )
                assert recomputed == recorded, f"response conservation broken for {cid}"


def batch_to_doc(batch: Optional[TaskBatch], user_id: str) -> dict:
    """Wire form of a batch. Never includes gold labels or other users' data."""
    if batch is None or batch.empty:
        return {"no_tasks": True, "user_id": user_id, "tasks": []}
    return {
        "no_tasks": False,
        "batch_id": batch.batch_id,
        "campaign_id": batch.campaign_id,
        "user_id": batch.user_id,
        "issued_at": batch.issued_at,
        "expires_at": batch.expires_at,
        "time_budget": batch.time_budget,
        "tasks": [
            {
                "assignment_id": t.assignment_id,
                "item_id": t.item_id,
                "media_ref": t.media_ref,
                "prompt": t.prompt,
                "options": list(t.options),
            }
            for t in batch.tasks
        ],
    }


def batch_from_doc(doc: dict) -> TaskBatch:
    return TaskBatch(
        batch_id=doc["batch_id"],
        campaign_id=doc["campaign_id"],
        user_id=doc["user_id"],
        tasks=tuple(
            BatchTask(t["assignment_id"], t["item_id"], t.get("media_ref", ""), t["prompt"], tuple(t["options"]))
            for t in doc["tasks"]
        ),
        issued_at=doc["issued_at"],
        time_budget=doc["time_budget"],
        expires_at=doc["expires_at"],
    )
