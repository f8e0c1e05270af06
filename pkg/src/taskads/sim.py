"""Agent-based replay of a three-condition labeling experiment.

Simulated participants either label a fixed 50-image gold dataset directly
in a browser-like loop (control), or play a 10-minute game session in which
task ads appear at gameover events: opt-in with a small reward (rewarded) or
forced once per minute of accumulated gameplay (non-optional). Ads run
through the real SDK against a real in-process platform service, so the
whole serve/submit path (quotas, never-twice, TTLs) is exercised end to end.

Worker behaviour is parametric and calibrated against published benchmark
statistics for the three conditions (see DEFAULT_TARGETS):

* per-label latency: a participant's average speed is drawn from the
  lognormal solved from the condition's median/mean time per label
  (mu = ln median, sigma = sqrt(2 ln(mean/median))); individual labels jitter
  around it with a small within-participant sigma.
* accuracy: a participant's per-item probability of answering correctly is
  drawn from a Beta distribution. The Beta is deliberately parameterized by
  latent values chosen so that the *observed* per-participant success rates
  (which add binomial noise from finite label counts) reproduce the target
  medians and spreads, while the three conditions stay statistically
  indistinguishable in their means - matching the benchmark's null result on
  success rate. Matching the Beta directly to the observed mean/sd would
  double-count the binomial noise and manufacture significant differences
  that the benchmark did not find.

Everything is driven by a virtual clock and spawned seed sequences, so a
run is deterministic down to the byte given the master seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import stats as statkit
from .consolidate import ParticipantScore, score_participant
from .engine import ReservationPolicy
from .model import NO, NOT_SURE, YES, CampaignConfig, DatasetManifest, LabelItem
from .sdk import (
    AdMode,
    AdSlotContext,
    AdStatus,
    Answer,
    InProcessTransport,
    TaskAdClient,
)
from .service import PlatformService
from .storage import MemoryStore


class SimError(Exception):
    pass


class ConfigInvalid(SimError):
    pass


class ServiceUnreachable(SimError):
    pass


class InfeasibleCalibration(SimError):
    pass


class InsufficientGroups(SimError):
    pass


CONTROL = "control"
REWARDED = "rewarded"
NONOPTIONAL = "nonoptional"
CONDITIONS = (CONTROL, REWARDED, NONOPTIONAL)

# Behavioural targets per condition. time/success medians, means and sds are
# the published per-condition benchmarks; latent_* are the solved latent
# ability parameters discussed in the module docstring; labels_median is the
# target number of labels per participant used by `calibrate`.
DEFAULT_TARGETS: dict[str, dict] = {
    CONTROL: {
        "participants": 99,
        "time_median": 6.42,
        "time_mean": 7.88,
        "success_median": 0.82,
        "success_sd": 0.10,
        "latent_mean": 0.805,
        "latent_sd": 0.088,
        "labels_median": 50,
    },
    REWARDED: {
        "participants": 100,
        "time_median": 3.99,
        "time_mean": 4.58,
        "success_median": 0.80,
        "success_sd": 0.22,
        "latent_mean": 0.785,
        "latent_sd": 0.175,
        "labels_median": 17,
        "engage_rate": 0.72,
        "accept_beta": (1.2, 3.8),  # per-prompt opt-in propensity of engagers
    },
    NONOPTIONAL: {
        "participants": 97,
        "time_median": 3.32,
        "time_mean": 4.39,
        "success_median": 0.84,
        "success_sd": 0.14,
        "latent_mean": 0.815,
        "latent_sd": 0.120,
        "labels_median": 25,
    },
}

DATASET_CLASSES = ("Aircraft", "Bird", "Bicycle", "Boat", "Dog")
PROMPT_TEMPLATE = "Does this image contain a {class}?"


def default_dataset() -> DatasetManifest:
    """50 items: 5 classes x (5 true positives + 5 false positives)."""
    items = []
    for cls in DATASET_CLASSES:
        slug = cls.lower()
        for i in range(5):
            items.append(LabelItem(f"{slug}-tp-{i}", f"img://{slug}/tp/{i}", cls, YES))
        for i in range(5):
            items.append(LabelItem(f"{slug}-fp-{i}", f"img://{slug}/fp/{i}", cls, NO))
    return DatasetManifest(dataset_id="ds-benchmark-50", name="benchmark-50", items=tuple(items), created_at=0.0)


def lognormal_from_median_mean(median: float, mean: float) -> tuple[float, float]:
    """Solve lognormal (mu, sigma) from its median and mean.

    exp(mu) = median and exp(mu + sigma^2/2) = mean, hence
    mu = ln(median), sigma = sqrt(2 ln(mean/median)). mean < median is
    infeasible for a lognormal.
    """
    if median <= 0:
        raise InfeasibleCalibration(f"median must be > 0, got {median}")
    if mean < median:
        raise InfeasibleCalibration(f"lognormal requires mean >= median, got mean={mean} < median={median}")
    return math.log(median), math.sqrt(2.0 * math.log(mean / median))


def beta_from_mean_sd(mean: float, sd: float) -> tuple[float, float]:
    """Moment-match a Beta distribution; requires sd^2 < mean(1-mean)."""
    if not (0.0 < mean < 1.0):
        raise InfeasibleCalibration(f"beta mean must be in (0,1), got {mean}")
    var = sd * sd
    limit = mean * (1.0 - mean)
    if var <= 0 or var >= limit:
        raise InfeasibleCalibration(f"beta sd {sd} infeasible for mean {mean}")
    nu = limit / var - 1.0
    return mean * nu, (1.0 - mean) * nu


@dataclass(frozen=True)
class WorkerProfile:
    """Behavioural parameters of one simulated participant."""

    p_correct: float
    p_notsure: float
    latency_mu: float  # lognormal location of this participant's label times
    latency_sigma: float  # within-participant jitter
    engager: bool
    accept_prob: float  # per-prompt opt-in probability (rewarded mode)
    rng_seed: int

    def __post_init__(self) -> None:
        if self.p_correct + self.p_notsure > 1.0 + 1e-9:
            raise ConfigInvalid("p_correct + p_notsure must be <= 1")
        if self.latency_sigma < 0 or not math.isfinite(self.latency_mu):
            raise ConfigInvalid("invalid latency model")


def make_profile(
    condition: str,
    targets: Optional[dict] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    within_sigma: float = 0.35,
    notsure_rate: float = 0.03,
) -> WorkerProfile:
    """Draw one participant's profile from a condition's calibration targets."""
    if condition not in CONDITIONS:
        raise ConfigInvalid(f"unknown condition {condition!r}")
    t = (targets or DEFAULT_TARGETS)[condition]
    rng = rng if rng is not None else np.random.default_rng()
    mu_c, sigma_c = lognormal_from_median_mean(t["time_median"], t["time_mean"])
    mean_time = float(np.exp(rng.normal(mu_c, sigma_c))) if sigma_c > 0 else t["time_median"]
    # Individual labels jitter around the participant's own average speed.
    latency_mu = math.log(mean_time) - within_sigma**2 / 2.0
    a, b = beta_from_mean_sd(t["latent_mean"], t["latent_sd"])
    p_correct = float(np.clip(rng.beta(a, b), 0.005, 0.999))
    p_notsure = min(notsure_rate, 1.0 - p_correct)
    engager = True
    accept_prob = 1.0
    if condition == REWARDED:
        engager = bool(rng.random() < t.get("engage_rate", 1.0))
        ab = t.get("accept_beta")
        accept_prob = float(rng.beta(*ab)) if ab else 1.0
    return WorkerProfile(
        p_correct=p_correct,
        p_notsure=p_notsure,
        latency_mu=latency_mu,
        latency_sigma=within_sigma,
        engager=engager,
        accept_prob=accept_prob,
        rng_seed=int(rng.integers(2**31)),
    )


def answer_item(
    gold: str,
    profile: WorkerProfile,
    rng: np.random.Generator,
    time_budget: float = 30.0,
) -> tuple[str, float]:
    """One simulated answer: correct w.p. p_correct, Not sure w.p. p_notsure,
    otherwise the wrong option; elapsed drawn from the participant's latency
    model, truncated to (0, time_budget]."""
    u = rng.random()
    if u < profile.p_correct:
        choice = gold
    elif u < profile.p_correct + profile.p_notsure:
        choice = NOT_SURE
    else:
        choice = NO if gold == YES else YES
    elapsed = float(np.exp(rng.normal(profile.latency_mu, profile.latency_sigma)))
    elapsed = float(np.clip(elapsed, 1e-3, time_budget))
    return choice, elapsed


class VirtualClock:
    def __init__(self, start: float = 0.0):
        self._t = start

    def now(self) -> float:
        return self._t

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise ValueError("clock only moves forward")
        self._t += dt


@dataclass(frozen=True)
class ScenarioConfig:
    condition: str = "all"  # control | rewarded | nonoptional | all
    n_participants: Optional[int] = None  # None -> per-condition benchmark n
    session_length: float = 600.0
    gameover_rate: float = 2.0  # events per minute of gameplay
    batch_size: int = 5
    time_budget: float = 30.0  # seconds per task
    reward_points: int = 5
    reservation_ttl: float = 120.0
    prompt_overhead: float = 2.0  # seconds to show the pre-ad prompt screen
    within_sigma: float = 0.35
    notsure_rate: float = 0.03
    master_seed: int = 0
    targets: dict = field(default_factory=lambda: DEFAULT_TARGETS)
    keep_events: bool = True

    def __post_init__(self) -> None:
        if self.condition not in CONDITIONS and self.condition != "all":
            raise ConfigInvalid(f"unknown condition {self.condition!r}")
        if self.n_participants is not None and self.n_participants < 1:
            raise ConfigInvalid("n_participants must be >= 1")
        if self.session_length <= 0 or self.gameover_rate <= 0:
            raise ConfigInvalid("session_length and gameover_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigInvalid("batch_size must be >= 1")

    def conditions(self) -> tuple[str, ...]:
        return CONDITIONS if self.condition == "all" else (self.condition,)

    def condition_n(self, condition: str) -> int:
        if self.n_participants is not None:
            return self.n_participants
        return self.targets[condition]["participants"]

    def to_doc(self) -> dict:
        return {
            "condition": self.condition,
            "n_participants": self.n_participants,
            "session_length": self.session_length,
            "gameover_rate": self.gameover_rate,
            "batch_size": self.batch_size,
            "time_budget": self.time_budget,
            "reward_points": self.reward_points,
            "reservation_ttl": self.reservation_ttl,
            "prompt_overhead": self.prompt_overhead,
            "within_sigma": self.within_sigma,
            "notsure_rate": self.notsure_rate,
            "master_seed": self.master_seed,
        }


@dataclass
class ConditionResult:
    condition: str
    participants: int
    missing: int  # participants who never started a labeling task
    scores: list[ParticipantScore]
    rewards_granted: int
    interactions: int  # serve + submit calls against the service

    def metric_vector(self, metric: str) -> list[float]:
        return [getattr(s, metric) for s in self.scores]


@dataclass
class ExperimentReport:
    config: dict
    conditions: dict[str, ConditionResult]
    events: list[dict]
    stats: Optional[dict] = None

    def to_doc(self) -> dict:
        return {
            "config": self.config,
            "conditions": {
                name: {
                    "participants": c.participants,
                    "missing": c.missing,
                    "rewards_granted": c.rewards_granted,
                    "interactions": c.interactions,
                    "scores": [
                        {
                            "user_id": s.user_id,
                            "n_labeled": s.n_labeled,
                            "n_correct": s.n_correct,
                            "success_rate": s.success_rate,
                            "mean_time": s.mean_time,
                            "median_time": s.median_time,
                        }
                        for s in c.scores
                    ],
                    "descriptives": condition_descriptives(c),
                }
                for name, c in self.conditions.items()
            },
            "events": self.events,
            "stats": self.stats,
        }

    @staticmethod
    def from_doc(doc: dict) -> "ExperimentReport":
        conditions = {}
        for name, c in doc["conditions"].items():
            conditions[name] = ConditionResult(
                condition=name,
                participants=c["participants"],
                missing=c["missing"],
                rewards_granted=c.get("rewards_granted", 0),
                interactions=c.get("interactions", 0),
                scores=[
                    ParticipantScore(
                        user_id=s["user_id"],
                        n_labeled=s["n_labeled"],
                        n_correct=s["n_correct"],
                        success_rate=s["success_rate"],
                        mean_time=s["mean_time"],
                        median_time=s["median_time"],
                    )
                    for s in c["scores"]
                ],
            )
        return ExperimentReport(
            config=doc.get("config", {}),
            conditions=conditions,
            events=doc.get("events", []),
            stats=doc.get("stats"),
        )


def _descriptives_doc(values: Sequence[float]) -> dict:
    d = statkit.descriptives(list(values)) if values else None
    if d is None:
        return {"n": 0}
    return {"n": d.n, "median": d.median, "mean": d.mean, "sd": d.sd, "min": d.minimum, "max": d.maximum}


def condition_descriptives(result: ConditionResult) -> dict:
    return {
        "images_labeled": _descriptives_doc(result.metric_vector("n_labeled")),
        "correct_labels": _descriptives_doc(result.metric_vector("n_correct")),
        "success_rate": _descriptives_doc(result.metric_vector("success_rate")),
        "time_per_label": _descriptives_doc(result.metric_vector("mean_time")),
    }


class _ConditionRunner:
    """Runs every participant of one condition against a fresh service."""

    def __init__(self, condition: str, cfg: ScenarioConfig, seed_seq: np.random.SeedSequence):
        self.condition = condition
        self.cfg = cfg
        self.clock = VirtualClock()
        self.events: list[dict] = []
        self.rewards = 0
        self.interactions = 0
        # The TTL must cover a worst-case slot (every task at the full budget),
        # otherwise slow-but-honest participants lose their whole batch.
        ttl = max(cfg.reservation_ttl, cfg.batch_size * cfg.time_budget + 60.0)
        policy = ReservationPolicy(ttl=ttl)
        self.service = PlatformService(
            MemoryStore(), policy=policy, clock=self.clock.now, rng_seed=int(seed_seq.generate_state(1)[0])
        )
        manifest = default_dataset()
        self.gold = {it.item_id: it.gold for it in manifest.items}
        self.service.engine.add_dataset(manifest)
        n = cfg.condition_n(condition)
        config = CampaignConfig(
            prompt_template=PROMPT_TEMPLATE,
            required_engagements=n,  # every participant may label every item
            batch_size=cfg.batch_size,
            time_budget=cfg.time_budget,
            reward_points=cfg.reward_points if condition == REWARDED else 0,
        )
        self.campaign_id = self.service.create_campaign(manifest.dataset_id, config)
        self.service.publish(self.campaign_id)
        self.n_participants = n
        self.seed_seq = seed_seq

    def _event(self, user: str, kind: str, **extra) -> None:
        if self.cfg.keep_events:
            self.events.append({"t": round(self.clock.now(), 4), "user": user, "kind": kind, **extra})

    def run(self) -> ConditionResult:
        children = self.seed_seq.spawn(self.n_participants)
        users = [f"{self.condition}-p{i:03d}" for i in range(self.n_participants)]
        for user, child in zip(users, children):
            rng = np.random.default_rng(child)
            profile = make_profile(
                self.condition,
                self.cfg.targets,
                rng,
                within_sigma=self.cfg.within_sigma,
                notsure_rate=self.cfg.notsure_rate,
            )
            self._simulate_participant(user, profile, rng)
        return self._collect(users)

    # -- session flows ------------------------------------------------------

    def _make_client(self, user: str) -> TaskAdClient:
        transport = _CountingTransport(InProcessTransport(self.service), self)
        return TaskAdClient(transport, user_id=user, clock=self.clock.now)

    def _hook(self, user: str, profile: WorkerProfile, rng: np.random.Generator) -> Callable:
        def hook(prompt: str, options: Sequence[str], task) -> Answer:
            choice, elapsed = answer_item(self.gold[task.item_id], profile, rng, self.cfg.time_budget)
            self.clock.advance(elapsed)
            self._event(user, "answer", item=task.item_id, choice=choice, elapsed=round(elapsed, 4))
            return Answer(choice, elapsed)

        return hook

    def _simulate_participant(self, user: str, profile: WorkerProfile, rng: np.random.Generator) -> None:
        client = self._make_client(user)
        hook = self._hook(user, profile, rng)
        self._event(user, "session_start", condition=self.condition)
        if self.condition == CONTROL:
            self._run_control(user, client, hook, rng)
        elif self.condition == REWARDED:
            self._run_rewarded(user, client, hook, profile, rng)
        else:
            self._run_nonoptional(user, client, hook, rng)
        self._event(user, "session_end")

    def _slot_budget(self) -> float:
        return self.cfg.time_budget * self.cfg.batch_size

    def _run_control(self, user, client, hook, rng) -> None:
        # Browser-style labeling of the full dataset: fetch batches until the
        # service has nothing left for this user. No game, no time limit.
        while True:
            ctx = AdSlotContext(
                user_id=user,
                mode=AdMode.NON_OPTIONAL,
                presentation_hook=hook,
                time_budget=float("inf"),
                campaign_id=self.campaign_id,
                seed=int(rng.integers(2**62)),
            )
            outcome = client.show_task_ad(ctx)
            self._event(user, "batch_done", status=outcome.status.value, answered=outcome.n_answered)
            if outcome.status is not AdStatus.COMPLETED or outcome.n_answered == 0:
                break

    def _run_rewarded(self, user, client, hook, profile, rng) -> None:
        t_end = self.clock.now() + self.cfg.session_length
        gap = 60.0 / self.cfg.gameover_rate
        started = False
        while True:
            self.clock.advance(float(rng.exponential(gap)))
            if self.clock.now() >= t_end:
                break
            self._event(user, "gameover")
            # An engager is a participant who chooses to label at least once:
            # they take their first prompt, later ones with their own propensity.
            accept = profile.engager and (not started or rng.random() < profile.accept_prob)
            self.clock.advance(self.cfg.prompt_overhead)  # opt-in prompt screen
            ctx = AdSlotContext(
                user_id=user,
                mode=AdMode.REWARDED,
                presentation_hook=hook,
                reward_points=self.cfg.reward_points,
                time_budget=self._slot_budget(),
                opt_in_hook=lambda _points, _a=accept: _a,
                campaign_id=self.campaign_id,
                seed=int(rng.integers(2**62)),
            )
            outcome = client.show_task_ad(ctx)
            if outcome.n_answered > 0:
                started = True
            self.rewards += outcome.reward_granted
            self._event(
                user,
                "ad_outcome",
                status=outcome.status.value,
                answered=outcome.n_answered,
                reward=outcome.reward_granted,
            )

    def _run_nonoptional(self, user, client, hook, rng) -> None:
        t_end = self.clock.now() + self.cfg.session_length
        gap = 60.0 / self.cfg.gameover_rate
        gameplay_since_ad = 0.0
        while True:
            wait = float(rng.exponential(gap))
            self.clock.advance(wait)
            gameplay_since_ad += wait
            if self.clock.now() >= t_end:
                break
            self._event(user, "gameover")
            if gameplay_since_ad < 60.0:
                continue  # forced ads only after a full minute of gameplay
            gameplay_since_ad = 0.0
            self.clock.advance(self.cfg.prompt_overhead)
            ctx = AdSlotContext(
                user_id=user,
                mode=AdMode.NON_OPTIONAL,
                presentation_hook=hook,
                time_budget=self._slot_budget(),
                campaign_id=self.campaign_id,
                seed=int(rng.integers(2**62)),
            )
            outcome = client.show_task_ad(ctx)
            self._event(user, "ad_outcome", status=outcome.status.value, answered=outcome.n_answered)

    # -- results ---------------------------------------------------------------

    def _collect(self, users: list[str]) -> ConditionResult:
        scores = []
        missing = 0
        for user in users:
            records = self.service.engine.responses_by_user(self.campaign_id, user)
            if not records:
                missing += 1
                continue
            rows = [(resp.choice, self.gold[item_id], resp.elapsed) for item_id, resp in records]
            scores.append(score_participant(rows, user_id=user))
        return ConditionResult(
            condition=self.condition,
            participants=len(users),
            missing=missing,
            scores=scores,
            rewards_granted=self.rewards,
            interactions=self.interactions,
        )


class _CountingTransport:
    """Counts serve/submit interactions for the report."""

    def __init__(self, inner, runner: _ConditionRunner):
        self.inner = inner
        self.runner = runner

    def serve(self, user_id, campaign_id=None, seed=None):
        self.runner.interactions += 1
        return self.inner.serve(user_id, campaign_id, seed)

    def submit(self, batch_id, responses):
        self.runner.interactions += 1
        return self.inner.submit(batch_id, responses)


def run_experiment(cfg: ScenarioConfig) -> ExperimentReport:
    """Run the configured conditions; deterministic given cfg.master_seed."""
    root = np.random.SeedSequence(cfg.master_seed)
    children = root.spawn(len(CONDITIONS))
    by_condition = dict(zip(CONDITIONS, children))
    conditions: dict[str, ConditionResult] = {}
    events: list[dict] = []
    for condition in cfg.conditions():
        runner = _ConditionRunner(condition, cfg, by_condition[condition])
        result = runner.run()
        runner.service.check_invariants()
        conditions[condition] = result
        events.extend(runner.events)
    report = ExperimentReport(config=cfg.to_doc(), conditions=conditions, events=events)
    if len(conditions) >= 2:
        report.stats = analyze(report)
    return report


def analyze(report: ExperimentReport | dict) -> dict:
    """Descriptives plus the Levene / Welch ANOVA / Games-Howell pipeline on
    success rate and time per label."""
    if isinstance(report, dict):
        report = ExperimentReport.from_doc(report)
    present = {name: c for name, c in report.conditions.items() if c.scores}
    if len(present) < 2:
        raise InsufficientGroups(f"need >= 2 conditions with scores, have {len(present)}")
    out: dict = {
        "alpha": statkit.DEFAULT_ALPHA,
        "descriptives": {name: condition_descriptives(c) for name, c in present.items()},
        "tests": {},
    }
    for metric, key in (("success_rate", "success_rate"), ("mean_time", "time_per_label")):
        groups = [statkit.Sample(name, tuple(c.metric_vector(metric))) for name, c in present.items()]
        lev = statkit.levene(groups)
        welch = statkit.welch_anova(groups)
        gh = statkit.games_howell(groups)
        out["tests"][key] = {
            "levene": {"F": lev.statistic, "df1": lev.df1, "df2": lev.df2, "p": lev.p_value},
            "welch_anova": {"F": welch.statistic, "df1": welch.df1, "df2": welch.df2, "p": welch.p_value},
            "games_howell": [
                {
                    "pair": list(r.pair),
                    "q": r.statistic,
                    "df": r.df,
                    "p": r.p_value,
                    "mean_difference": r.mean_difference,
                    "significant": r.significant,
                }
                for r in gh
            ],
        }
    return out


def calibrate(
    targets: Optional[dict] = None,
    *,
    gameover_rates: Sequence[float] = (1.5, 2.0, 2.5, 3.0),
    batch_sizes: Sequence[int] = (3, 5, 7),
    n_participants: int = 60,
    seeds: Sequence[int] = (0, 1),
) -> dict:
    """Sweep gameover_rate x batch_size against the label-count targets.

    Returns the full sweep and the chosen point (closest to the rewarded and
    non-optional labels_median targets, summed relative error).
    """
    targets = targets or DEFAULT_TARGETS
    goal = {c: targets[c]["labels_median"] for c in (REWARDED, NONOPTIONAL)}
    sweep = []
    best = None
    for rate in gameover_rates:
        for batch in batch_sizes:
            medians = {REWARDED: [], NONOPTIONAL: []}
            for seed in seeds:
                cfg = ScenarioConfig(
                    condition="all",
                    n_participants=n_participants,
                    gameover_rate=rate,
                    batch_size=batch,
                    master_seed=seed,
                    targets=targets,
                    keep_events=False,
                )
                for ci, condition in enumerate((REWARDED, NONOPTIONAL)):
                    runner = _ConditionRunner(condition, cfg, np.random.SeedSequence((seed, ci)))
                    result = runner.run()
                    labels = result.metric_vector("n_labeled")
                    medians[condition].append(float(np.median(labels)) if labels else 0.0)
            achieved = {c: float(np.mean(v)) for c, v in medians.items()}
            err = sum(abs(achieved[c] - goal[c]) / goal[c] for c in achieved)
            point = {
                "gameover_rate": rate,
                "batch_size": batch,
                "labels_median": achieved,
                "error": err,
            }
            sweep.append(point)
            if best is None or err < best["error"]:
                best = point
    return {
        "targets": {c: goal[c] for c in goal},
        "chosen": {"gameover_rate": best["gameover_rate"], "batch_size": best["batch_size"]},
        "achieved": best["labels_median"],
        "sweep": sweep,
    }


def drive_service(
    base_url: str,
    token: str,
    *,
    campaign_id: Optional[str] = None,
    n_users: int = 5,
    seed: int = 0,
    condition: str = NONOPTIONAL,
    max_rounds: int = 200,
    targets: Optional[dict] = None,
) -> dict:
    """Run simple labeling traffic against a live HTTP service.

    Workers loop serve/submit until the service reports no tasks for them.
    Prompts are answered through the same behavioural model as the in-process
    experiment, but over the real wire (real clock, so not byte-deterministic).
    Raises ServiceUnreachable when the service cannot be reached.
    """
    import requests as _requests

    from .sdk import HttpTransport

    try:
        health = _requests.get(f"{base_url.rstrip('/')}/healthz", timeout=5)
        health.raise_for_status()
    except Exception as exc:
        raise ServiceUnreachable(f"no service at {base_url}: {exc}") from exc

    root = np.random.SeedSequence(seed)
    answered = 0
    rounds = 0
    for i, child in enumerate(root.spawn(n_users)):
        rng = np.random.default_rng(child)
        profile = make_profile(condition, targets, rng)
        user = f"drive-{condition}-{i:03d}"
        client = TaskAdClient(HttpTransport(base_url, token), user_id=user)

        def hook(prompt, options, task, _rng=rng, _profile=profile):
            # Gold is server-side only; drive answers Yes/No/Not sure blindly
            # with the profile's latency, which is all quota tests need.
            u = _rng.random()
            if u < _profile.p_correct:
                choice = YES
            elif u < _profile.p_correct + _profile.p_notsure:
                choice = NOT_SURE
            else:
                choice = NO
            elapsed = float(np.clip(np.exp(_rng.normal(_profile.latency_mu, _profile.latency_sigma)), 1e-3, 30.0))
            return Answer(choice, elapsed)

        for _ in range(max_rounds):
            rounds += 1
            ctx = AdSlotContext(
                user_id=user,
                mode=AdMode.NON_OPTIONAL,
                presentation_hook=hook,
                campaign_id=campaign_id,
                seed=int(rng.integers(2**62)),
            )
            outcome = client.show_task_ad(ctx)
            if outcome.status is AdStatus.ERROR:
                raise ServiceUnreachable(outcome.error or "drive failed")
            answered += outcome.n_answered
            if outcome.status is not AdStatus.COMPLETED or outcome.n_answered == 0:
                break
    return {"users": n_users, "rounds": rounds, "answered": answered}


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_doc(), sort_keys=True, indent=None, separators=(",", ":"))
