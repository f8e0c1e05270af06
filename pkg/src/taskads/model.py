"""Shared domain types for labeling campaigns.

Everything here is an immutable value object: datasets and their items,
campaign configuration and the campaign status machine, worker identities,
assignments, responses and consolidated labels. Validation happens at
construction time so the rest of the system can assume well-formed values.

Manifests are line-delimited JSON, one item per line:

    {"item_id": "dog-tp-0", "media_ref": "img://dog/0", "class_name": "Dog", "gold": "yes"}

``gold`` is optional ("yes"/"no"); items without it are truly unlabeled.
Gold values never leave the server side: task batches carry only prompt,
options and ids.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

YES = "Yes"
NO = "No"
NOT_SURE = "Not sure"
UNDECIDED = "Undecided"

DEFAULT_OPTIONS: tuple[str, ...] = (YES, NO, NOT_SURE)

# Placeholder substituted with the item's class name when rendering a prompt.
PROMPT_PLACEHOLDER = "{class}"

MAX_TIME_BUDGET = 30.0


class DomainError(Exception):
    """Base class for domain validation failures."""


class DuplicateItemId(DomainError):
    def __init__(self, item_id: str, line: Optional[int] = None):
        self.item_id = item_id
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate item_id {item_id!r}{where}")


class EmptyDataset(DomainError):
    def __init__(self) -> None:
        super().__init__("manifest contains no items")


class MalformedRecord(DomainError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"malformed record at line {line}: {reason}")


class MissingPlaceholder(DomainError):
    def __init__(self, template: str):
        super().__init__(f"prompt template has no {PROMPT_PLACEHOLDER!r} placeholder: {template!r}")


class MultiplePlaceholders(DomainError):
    def __init__(self, template: str, count: int):
        super().__init__(f"prompt template has {count} placeholders, expected exactly one: {template!r}")


class IllegalTransition(DomainError):
    def __init__(self, current: "CampaignStatus", target: "CampaignStatus"):
        self.current = current
        self.target = target
        super().__init__(f"illegal campaign transition {current.value} -> {target.value}")


class InvalidConfig(DomainError):
    """Raised when a campaign configuration violates an invariant."""


def _utcnow() -> float:
    return time.time()


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


@dataclass(frozen=True)
class LabelItem:
    """One unit of unlabeled data, with optional ground truth."""

    item_id: str
    media_ref: str
    class_name: str
    gold: Optional[str] = None  # YES / NO, absent for truly unlabeled data

    def __post_init__(self) -> None:
        if not self.item_id:
            raise DomainError("item_id must be non-empty")
        if not self.class_name:
            raise DomainError(f"item {self.item_id!r}: class_name must be non-empty")
        if self.gold is not None and self.gold not in (YES, NO):
            raise DomainError(f"item {self.item_id!r}: gold must be {YES!r} or {NO!r}, got {self.gold!r}")


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    name: str
    items: tuple[LabelItem, ...]
    created_at: float = field(default_factory=_utcnow)

    def __post_init__(self) -> None:
        if not self.items:
            raise EmptyDataset()
        seen: set[str] = set()
        for item in self.items:
            if item.item_id in seen:
                raise DuplicateItemId(item.item_id)
            seen.add(item.item_id)

    def item(self, item_id: str) -> LabelItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise KeyError(item_id)

    def class_histogram(self) -> dict[str, int]:
        hist: dict[str, int] = {}
        for it in self.items:
            hist[it.class_name] = hist.get(it.class_name, 0) + 1
        return hist


@dataclass(frozen=True)
class CampaignConfig:
    """Practitioner-tunable parameters of a labeling campaign.

    ``required_engagements`` is the quality threshold: the number of distinct
    workers that must answer each item before its label is consolidated.
    """

    prompt_template: str
    options: tuple[str, ...] = DEFAULT_OPTIONS
    required_engagements: int = 3
    batch_size: int = 5
    time_budget: float = MAX_TIME_BUDGET  # seconds per task in the ad slot
    reward_points: int = 0

    def __post_init__(self) -> None:
        if self.required_engagements < 1:
            raise InvalidConfig("required_engagements must be >= 1")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if not (0 < self.time_budget <= MAX_TIME_BUDGET):
            raise InvalidConfig(f"time_budget must be in (0, {MAX_TIME_BUDGET}] seconds")
        if self.reward_points < 0:
            raise InvalidConfig("reward_points must be >= 0")
        if len(set(self.options)) < 2:
            raise InvalidConfig("options must contain at least 2 distinct entries")
        if len(set(self.options)) != len(self.options):
            raise InvalidConfig("options must not repeat")
        # Fail early: render_prompt would reject the template anyway.
        n = self.prompt_template.count(PROMPT_PLACEHOLDER)
        if n == 0:
            raise MissingPlaceholder(self.prompt_template)
        if n > 1:
            raise MultiplePlaceholders(self.prompt_template, n)


class CampaignStatus(str, Enum):
    DRAFT = "Draft"
    PUBLISHED = "Published"
    UNPUBLISHED = "Unpublished"
    COMPLETE = "Complete"


# Draft -> Published, Published <-> Unpublished, Published -> Complete.
# Complete is terminal.
_ALLOWED_TRANSITIONS: dict[CampaignStatus, frozenset[CampaignStatus]] = {
    CampaignStatus.DRAFT: frozenset({CampaignStatus.PUBLISHED}),
    CampaignStatus.PUBLISHED: frozenset({CampaignStatus.UNPUBLISHED, CampaignStatus.COMPLETE}),
    CampaignStatus.UNPUBLISHED: frozenset({CampaignStatus.PUBLISHED}),
    CampaignStatus.COMPLETE: frozenset(),
}


@dataclass(frozen=True)
class Campaign:
    campaign_id: str
    dataset_id: str
    config: CampaignConfig
    status: CampaignStatus = CampaignStatus.DRAFT


def transition(campaign: Campaign, target: CampaignStatus) -> Campaign:
    """Move a campaign through its status machine, returning a new value."""
    target = CampaignStatus(target)
    if target not in _ALLOWED_TRANSITIONS[campaign.status]:
        raise IllegalTransition(campaign.status, target)
    return replace(campaign, status=target)


@dataclass(frozen=True)
class WorkerIdentity:
    user_id: str
    created_at: float = field(default_factory=_utcnow)


class AssignmentState(str, Enum):
    IN_FLIGHT = "InFlight"
    COMPLETED = "Completed"
    EXPIRED = "Expired"


@dataclass(frozen=True)
class Assignment:
    """A reserved (user, item) pair within a campaign.

    The reservation is what makes never-twice enforceable: a user can hold at
    most one non-expired assignment per item per campaign.
    """

    assignment_id: str
    campaign_id: str
    item_id: str
    user_id: str
    reserved_at: float
    expires_at: float
    state: AssignmentState = AssignmentState.IN_FLIGHT

    def __post_init__(self) -> None:
        if self.expires_at <= self.reserved_at:
            raise DomainError("expires_at must be after reserved_at")


@dataclass(frozen=True)
class Response:
    assignment_id: str
    choice: str
    elapsed: float  # seconds from task display to answer, client-reported
    submitted_at: float

    def __post_init__(self) -> None:
        if self.elapsed <= 0:
            raise DomainError("elapsed must be > 0")


@dataclass(frozen=True)
class ConsolidatedLabel:
    item_id: str
    verdict: str  # YES, NO or UNDECIDED
    vote_counts: dict[str, int]
    complete: bool


def render_prompt(config: CampaignConfig, item: LabelItem) -> str:
    """Substitute the item's class name into the campaign prompt template."""
    n = config.prompt_template.count(PROMPT_PLACEHOLDER)
    if n == 0:
        raise MissingPlaceholder(config.prompt_template)
    if n > 1:
        raise MultiplePlaceholders(config.prompt_template, n)
    return config.prompt_template.replace(PROMPT_PLACEHOLDER, item.class_name)


_GOLD_WIRE = {"yes": YES, "no": NO}
_GOLD_UNWIRE = {YES: "yes", NO: "no"}


def parse_manifest_line(line: str, lineno: int) -> LabelItem:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(lineno, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(rec, dict):
        raise MalformedRecord(lineno, "record must be a JSON object")
    for key in ("item_id", "media_ref", "class_name"):
        if key not in rec:
            raise MalformedRecord(lineno, f"missing field {key!r}")
        if not isinstance(rec[key], str):
            raise MalformedRecord(lineno, f"field {key!r} must be a string")
    gold = None
    if "gold" in rec and rec["gold"] is not None:
        raw = rec["gold"]
        if not isinstance(raw, str) or raw.lower() not in _GOLD_WIRE:
            raise MalformedRecord(lineno, f'gold must be "yes" or "no", got {raw!r}')
        gold = _GOLD_WIRE[raw.lower()]
    try:
        return LabelItem(rec["item_id"], rec["media_ref"], rec["class_name"], gold)
    except DomainError as exc:
        raise MalformedRecord(lineno, str(exc)) from exc


def validate_manifest(
    raw: str | Iterable[str],
    *,
    name: str = "unnamed",
    dataset_id: Optional[str] = None,
    created_at: Optional[float] = None,
) -> DatasetManifest:
    """Parse and validate a line-delimited manifest document.

    Raises MalformedRecord / DuplicateItemId / EmptyDataset, each naming the
    offending line where one exists.
    """
    lines = raw.splitlines() if isinstance(raw, str) else raw
    items: list[LabelItem] = []
    seen: dict[str, int] = {}
    lineno = 0
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        item = parse_manifest_line(line, lineno)
        if item.item_id in seen:
            raise DuplicateItemId(item.item_id, line=lineno)
        seen[item.item_id] = lineno
        items.append(item)
    if not items:
        raise EmptyDataset()
    return DatasetManifest(
        dataset_id=dataset_id or new_id("ds"),
        name=name,
        items=tuple(items),
        created_at=created_at if created_at is not None else _utcnow(),
    )


def serialize_manifest(manifest: DatasetManifest) -> str:
    """Inverse of validate_manifest for the line-delimited record schema."""
    out = []
    for it in manifest.items:
        rec: dict[str, str] = {"item_id": it.item_id, "media_ref": it.media_ref, "class_name": it.class_name}
        if it.gold is not None:
            rec["gold"] = _GOLD_UNWIRE[it.gold]
        out.append(json.dumps(rec, sort_keys=True))
    return "\n".join(out) + "\n"
