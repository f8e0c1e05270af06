"""Client SDK: run a task ad inside a host app's natural breakpoint.

The host app calls `show_task_ad` and gets control back exactly once, no
matter what fails in between. The flow is: optional opt-in prompt (Rewarded
mode, shown before any network call so a decline costs nothing), fetch a
batch, present each task through the host-supplied hook, submit whatever was
answered, sync the local seen-cache from the acks.

The seen-cache is advisory (the server is authoritative for never-twice) but
guarantees the client never answers an item twice even against a misbehaving
server.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests


class TransportError(Exception):
    pass


class InProcessTransport:
    """Direct calls into a PlatformService instance (no network)."""

    def __init__(self, service):
        self.service = service

    def serve(self, user_id: str, campaign_id: Optional[str] = None, seed: Optional[int] = None) -> dict:
        return self.service.serve_batch(user_id, campaign_id, seed=seed)

    def submit(self, batch_id: str, responses: Sequence[dict]) -> list[dict]:
        return self.service.submit_responses(batch_id, list(responses))


class HttpTransport:
    """JSON API client for a remote platform service."""

    def __init__(self, base_url: str, token: str, *, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._headers = {"Authorization": f"Bearer {token}"}

    def _post(self, path: str, body: dict) -> dict:
        try:
            resp = requests.post(
                f"{self.base_url}{path}", json=body, headers=self._headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"POST {path}: {exc}") from exc
        if resp.status_code >= 400:
            raise TransportError(f"POST {path}: HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def serve(self, user_id: str, campaign_id: Optional[str] = None, seed: Optional[int] = None) -> dict:
        return self._post("/serve", {"user_id": user_id, "campaign_id": campaign_id, "seed": seed})

    def submit(self, batch_id: str, responses: Sequence[dict]) -> list[dict]:
        doc = self._post("/responses", {"batch_id": batch_id, "responses": list(responses)})
        return doc["acks"]


class AdMode(str, Enum):
    REWARDED = "Rewarded"
    NON_OPTIONAL = "NonOptional"


class AdStatus(str, Enum):
    COMPLETED = "Completed"
    SKIPPED = "Skipped"
    NO_TASKS = "NoTasks"
    ABANDONED = "Abandoned"
    ERROR = "Error"


@dataclass(frozen=True)
class PresentedTask:
    assignment_id: str
    item_id: str
    media_ref: str
    prompt: str
    options: tuple[str, ...]


@dataclass(frozen=True)
class Answer:
    choice: str
    elapsed: float


# A hook answers one task: return an Answer, or None to dismiss the ad.
PresentationHook = Callable[[str, Sequence[str], PresentedTask], Optional[Answer]]


@dataclass(frozen=True)
class AdSlotContext:
    user_id: str
    mode: AdMode
    presentation_hook: PresentationHook
    reward_points: int = 0
    time_budget: Optional[float] = None  # seconds for the whole slot; None derives from the batch
    opt_in_hook: Optional[Callable[[int], bool]] = None  # Rewarded: called with reward_points
    campaign_id: Optional[str] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode is AdMode.NON_OPTIONAL and self.opt_in_hook is not None:
            raise ValueError("NonOptional ads cannot offer an opt-in prompt")


@dataclass(frozen=True)
class AdOutcome:
    status: AdStatus
    n_answered: int = 0
    reward_granted: int = 0
    wall_time: float = 0.0
    skipped_seen: int = 0  # tasks suppressed by the local seen-cache
    error: Optional[str] = None


class SeenCache:
    """Locally completed (campaign_id, item_id) pairs, persisted per user."""

    def __init__(self, path: Optional[str | Path] = None, user_id: str = ""):
        self.path = Path(path) if path is not None else None
        self.user_id = user_id
        self.entries: set[tuple[str, str]] = set()
        if self.path is not None and self.path.exists():
            doc = json.loads(self.path.read_text(encoding="utf-8"))
            if doc.get("user_id") == user_id:
                self.entries = {tuple(e) for e in doc["entries"]}

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self.entries

    def add(self, campaign_id: str, item_id: str) -> None:
        self.entries.add((campaign_id, item_id))

    def save(self) -> None:
        if self.path is None:
            return
        doc = {"user_id": self.user_id, "entries": sorted(self.entries)}
        self.path.write_text(json.dumps(doc), encoding="utf-8")


class TaskAdClient:
    """One host-app integration point. One task ad at a time per client."""

    def __init__(
        self,
        transport,
        *,
        cache_path: Optional[str | Path] = None,
        user_id: str = "",
        clock: Callable[[], float] = time.monotonic,
    ):
        self.transport = transport
        self.clock = clock
        self.cache = SeenCache(cache_path, user_id)
        self.metrics = {"invocations": 0, "skips": 0, "no_tasks": 0, "errors": 0, "answers": 0}
        self._busy = threading.Lock()

    def show_task_ad(self, ctx: AdSlotContext) -> AdOutcome:
        """Run one task ad to completion; always returns, never raises."""
        if not self._busy.acquire(blocking=False):
            return AdOutcome(status=AdStatus.ERROR, error="task ad already in progress")
        started = self.clock()
        try:
            self.metrics["invocations"] += 1
            outcome = self._run(ctx, started)
        except Exception as exc:  # control-flow totality: errors become an outcome
            self.metrics["errors"] += 1
            outcome = AdOutcome(
                status=AdStatus.ERROR,
                wall_time=self.clock() - started,
                error=f"{type(exc).__name__}: {exc}",
            )
        finally:
            self._busy.release()
        return outcome

    def _run(self, ctx: AdSlotContext, started: float) -> AdOutcome:
        if ctx.mode is AdMode.REWARDED and ctx.opt_in_hook is not None:
            if not ctx.opt_in_hook(ctx.reward_points):
                # Declined before any network call: zero server-side effects.
                self.metrics["skips"] += 1
                return AdOutcome(status=AdStatus.SKIPPED, wall_time=self.clock() - started)

        try:
            doc = self.transport.serve(ctx.user_id, ctx.campaign_id, ctx.seed)
        except Exception as exc:
            self.metrics["errors"] += 1
            return AdOutcome(
                status=AdStatus.ERROR,
                wall_time=self.clock() - started,
                error=f"serve failed: {exc}",
            )
        if doc.get("no_tasks"):
            self.metrics["no_tasks"] += 1
            return AdOutcome(status=AdStatus.NO_TASKS, wall_time=self.clock() - started)

        campaign_id = doc["campaign_id"]
        tasks = [
            PresentedTask(
                assignment_id=t["assignment_id"],
                item_id=t["item_id"],
                media_ref=t.get("media_ref", ""),
                prompt=t["prompt"],
                options=tuple(t["options"]),
            )
            for t in doc["tasks"]
        ]
        budget = ctx.time_budget if ctx.time_budget is not None else doc["time_budget"] * len(tasks)

        answered: list[dict] = []
        skipped_seen = 0
        spent = 0.0
        dismissed = False
        for task in tasks:
            if (campaign_id, task.item_id) in self.cache:
                skipped_seen += 1  # defence in depth: never answer an item twice
                continue
            if spent >= budget:
                break
            reply = ctx.presentation_hook(task.prompt, task.options, task)
            if reply is None:
                dismissed = True
                break
            spent += reply.elapsed
            answered.append(
                {"assignment_id": task.assignment_id, "choice": reply.choice, "elapsed": reply.elapsed}
            )

        accepted = 0
        if answered:
            try:
                acks = self.transport.submit(doc["batch_id"], answered)
            except Exception as exc:
                self.metrics["errors"] += 1
                return AdOutcome(
                    status=AdStatus.ERROR,
                    wall_time=self.clock() - started,
                    skipped_seen=skipped_seen,
                    error=f"submit failed: {exc}",
                )
            accepted = self.cache_sync(acks)
            self.metrics["answers"] += accepted

        presentable = len(tasks) - skipped_seen
        if dismissed or len(answered) < presentable:
            status = AdStatus.ABANDONED
        else:
            status = AdStatus.COMPLETED
        reward = 0
        if (
            ctx.mode is AdMode.REWARDED
            and status is AdStatus.COMPLETED
            and accepted == len(tasks)
            and accepted > 0
        ):
            reward = ctx.reward_points  # all-or-nothing grant
        return AdOutcome(
            status=status,
            n_answered=accepted,
            reward_granted=reward,
            wall_time=self.clock() - started,
            skipped_seen=skipped_seen,
        )

    def cache_sync(self, acks: Sequence[dict]) -> int:
        """Fold submit acks into the seen-cache; only accepted items enter."""
        accepted = 0
        for ack in acks:
            if ack.get("accepted"):
                accepted += 1
                self.cache.add(ack["campaign_id"], ack["item_id"])
        self.cache.save()
        return accepted
