"""Response aggregation, participant scoring and campaign progress reports.

Consolidation is a plurality vote over the Yes/No options: "Not sure" (and
any other non-Yes/No option) counts in the vote tally but never toward the
verdict, and a Yes/No tie yields Undecided rather than a fabricated label.
All functions here are pure and operate on snapshots taken by the caller.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import NO, UNDECIDED, YES, ConsolidatedLabel, DomainError


class TooManyResponses(DomainError):
    def __init__(self, got: int, limit: int):
        super().__init__(f"{got} responses exceed the engagement quota {limit}")


class EmptyInput(DomainError):
    def __init__(self) -> None:
        super().__init__("no records to score")


class UnknownCampaign(DomainError):
    def __init__(self, campaign_id: str):
        super().__init__(f"unknown campaign {campaign_id!r}")


@dataclass(frozen=True)
class ParticipantScore:
    user_id: str
    n_labeled: int
    n_correct: int
    success_rate: float
    mean_time: float
    median_time: float


@dataclass(frozen=True)
class ProgressReport:
    campaign_id: str
    items_total: int
    items_complete: int
    responses_total: int
    verdict_histogram: dict[str, int]
    generated_at: float

    def to_doc(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "items_total": self.items_total,
            "items_complete": self.items_complete,
            "responses_total": self.responses_total,
            "verdict_histogram": dict(self.verdict_histogram),
            "generated_at": self.generated_at,
        }


def consolidate(choices: Iterable[str], k: int, *, item_id: str = "") -> ConsolidatedLabel:
    """Aggregate a multiset of choices into a verdict.

    verdict = Yes if Yes-votes > No-votes, No if No-votes > Yes-votes, else
    Undecided. complete is true once exactly k responses are in.
    """
    votes: dict[str, int] = {}
    n = 0
    for choice in choices:
        votes[choice] = votes.get(choice, 0) + 1
        n += 1
    if n > k:
        raise TooManyResponses(n, k)
    yes = votes.get(YES, 0)
    no = votes.get(NO, 0)
    if yes > no:
        verdict = YES
    elif no > yes:
        verdict = NO
    else:
        verdict = UNDECIDED
    return ConsolidatedLabel(item_id=item_id, verdict=verdict, vote_counts=votes, complete=n == k)


def score_participant(
    records: Sequence[tuple[str, str, float]],
    *,
    user_id: str = "",
) -> ParticipantScore:
    """Score one participant from (choice, gold, elapsed) records.

    Correct means the choice equals the gold answer (Yes or No); "Not sure"
    is labeled-but-incorrect. mean_time averages the client-reported elapsed
    seconds over everything the participant labeled.
    """
    if not records:
        raise EmptyInput()
    n = len(records)
    correct = 0
    times = []
    for choice, gold, elapsed in records:
        if gold not in (YES, NO):
            raise DomainError(f"scoring requires gold Yes/No, got {gold!r}")
        if choice == gold:
            correct += 1
        times.append(elapsed)
    return ParticipantScore(
        user_id=user_id,
        n_labeled=n,
        n_correct=correct,
        success_rate=correct / n,
        mean_time=sum(times) / n,
        median_time=statistics.median(times),
    )


def build_progress(
    campaign_id: str,
    item_counts: dict[str, tuple[int, int]],
    responses: Sequence[tuple[str, str, object]],
    *,
    generated_at: float,
) -> ProgressReport:
    """Assemble a progress report from one consistent snapshot.

    item_counts maps item_id -> (completed responses, required engagements);
    responses are (item_id, user_id, response) triples. The verdict histogram
    covers complete items only.
    """
    by_item: dict[str, list[str]] = {}
    for item_id, _user, resp in responses:
        by_item.setdefault(item_id, []).append(resp.choice)  # type: ignore[attr-defined]
    histogram = {YES: 0, NO: 0, UNDECIDED: 0}
    items_complete = 0
    for item_id, (done, required) in item_counts.items():
        if done >= required:
            items_complete += 1
            label = consolidate(by_item.get(item_id, []), done, item_id=item_id)
            histogram[label.verdict] = histogram.get(label.verdict, 0) + 1
    return ProgressReport(
        campaign_id=campaign_id,
        items_total=len(item_counts),
        items_complete=items_complete,
        responses_total=sum(done for done, _ in item_counts.values()),
        verdict_histogram=histogram,
        generated_at=generated_at,
    )


def export_records(
    item_counts: dict[str, tuple[int, int]],
    responses: Sequence[tuple[str, str, object]],
    gold: Optional[dict[str, Optional[str]]] = None,
    *,
    include_detail: bool = False,
) -> Iterable[str]:
    """Line-delimited export: one consolidated record per item.

    Each line is `{item_id, verdict, vote_counts, n_responses, complete}`;
    with gold available, a `gold_match` field is added for decided items.
    Detail mode appends per-response records `{user_id, choice, elapsed,
    submitted_at}` under the item.
    """
    by_item: dict[str, list[tuple[str, object]]] = {}
    for item_id, user_id, resp in responses:
        by_item.setdefault(item_id, []).append((user_id, resp))
    for item_id in sorted(item_counts):
        done, required = item_counts[item_id]
        choices = [r.choice for _u, r in by_item.get(item_id, [])]  # type: ignore[attr-defined]
        label = consolidate(choices, max(done, required), item_id=item_id)
        rec: dict = {
            "item_id": item_id,
            "verdict": label.verdict,
            "vote_counts": label.vote_counts,
            "n_responses": done,
            "complete": done >= required,
        }
        if gold is not None and gold.get(item_id) is not None and label.verdict != UNDECIDED:
            rec["gold_match"] = label.verdict == gold[item_id]
        if include_detail:
            rec["responses"] = [
                {
                    "user_id": user_id,
                    "choice": resp.choice,  # type: ignore[attr-defined]
                    "elapsed": resp.elapsed,  # type: ignore[attr-defined]
                    "submitted_at": resp.submitted_at,  # type: ignore[attr-defined]
                }
                for user_id, resp in by_item.get(item_id, [])
            ]
        yield json.dumps(rec, sort_keys=True)
