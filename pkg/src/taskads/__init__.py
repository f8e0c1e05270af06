"""taskads: micro-task data labeling through in-app ad slots.

A labeling campaign is a dataset plus a prompt template and an engagement
quota. The platform serves small task batches to app users at natural
breakpoints (interstitial-style "task ads"), dedupes per user, consolidates
responses into labels, and ships with a desk-scale experiment simulator and
the statistics to analyze it (Levene, Welch ANOVA, Games-Howell).
"""

from .consolidate import ParticipantScore, ProgressReport, consolidate, score_participant
from .engine import DisseminationEngine, ReservationPolicy, TaskBatch
from .model import (
    Campaign,
    CampaignConfig,
    CampaignStatus,
    DatasetManifest,
    LabelItem,
    Response,
    WorkerIdentity,
    render_prompt,
    transition,
    validate_manifest,
)
from .sdk import AdMode, AdOutcome, AdSlotContext, AdStatus, TaskAdClient
from .service import PlatformService
from .stats import descriptives, games_howell, levene, welch_anova, welch_ttest

__version__ = "0.1.0"

__all__ = [
    "AdMode",
    "AdOutcome",
    "AdSlotContext",
    "AdStatus",
    "Campaign",
    "CampaignConfig",
    "CampaignStatus",
    "DatasetManifest",
    "DisseminationEngine",
    "LabelItem",
    "ParticipantScore",
    "PlatformService",
    "ProgressReport",
    "ReservationPolicy",
    "Response",
    "TaskAdClient",
    "TaskBatch",
    "WorkerIdentity",
    "consolidate",
    "descriptives",
    "games_howell",
    "levene",
    "render_prompt",
    "score_participant",
    "transition",
    "validate_manifest",
    "welch_anova",
    "welch_ttest",
]
