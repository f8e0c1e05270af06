"""Command-line entry points.

    taskads simulate --condition all --n 100 --seed 0 --out report.json
    taskads analyze report.json [--out analysis.json]
    taskads calibrate [--target targets.json] [--out calibration.json]
    taskads serve [--config service.json]
    taskads drive --url http://127.0.0.1:8787 --token client-token [--campaign ID]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _cmd_simulate(args: argparse.Namespace) -> int:
    from .sim import ScenarioConfig, run_experiment

    cfg = ScenarioConfig(
        condition=args.condition,
        n_participants=args.n,
        master_seed=args.seed,
        gameover_rate=args.gameover_rate,
        batch_size=args.batch_size,
        keep_events=not args.no_events,
    )
    report = run_experiment(cfg)
    doc = report.to_doc()
    out = Path(args.out)
    out.write_text(json.dumps(doc, sort_keys=True, indent=2), encoding="utf-8")
    for name, c in doc["conditions"].items():
        d = c["descriptives"]
        print(
            f"{name}: n={c['participants']} missing={c['missing']} "
            f"median_success={d['success_rate'].get('median', float('nan')):.3f} "
            f"median_time={d['time_per_label'].get('median', float('nan')):.2f}s"
        )
    print(f"report written to {out}")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    from .sim import analyze

    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    analysis = analyze(doc)
    text = json.dumps(analysis, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"analysis written to {args.out}")
    else:
        print(text)
    for metric, tests in analysis["tests"].items():
        w = tests["welch_anova"]
        print(
            f"{metric}: Welch F({w['df1']:.0f},{w['df2']:.1f})={w['F']:.3f} p={w['p']:.4f}",
            file=sys.stderr,
        )
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    from .sim import DEFAULT_TARGETS, calibrate

    targets = DEFAULT_TARGETS
    if args.target:
        targets = json.loads(Path(args.target).read_text(encoding="utf-8"))
    result = calibrate(targets)
    text = json.dumps(result, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"calibration written to {args.out}")
    else:
        print(text)
    print(f"chosen: {result['chosen']} achieved medians: {result['achieved']}", file=sys.stderr)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .config import load_config
    from .engine import ReservationPolicy
    from .httpapi import run_server
    from .service import PlatformService
    from .storage import FileStore, MemoryStore

    config = load_config(args.config)
    store = FileStore(config.store_path) if config.store_path else MemoryStore()
    service = PlatformService(
        store, policy=ReservationPolicy(ttl=config.reservation_ttl, overcommit=config.overcommit)
    )
    print(f"listening on http://{config.listen_host}:{config.listen_port}")
    run_server(service, config)
    return 0


def _cmd_drive(args: argparse.Namespace) -> int:
    from .sim import drive_service

    result = drive_service(
        args.url,
        args.token,
        campaign_id=args.campaign,
        n_users=args.n_users,
        seed=args.seed,
    )
    print(json.dumps(result))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="taskads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the three-condition labeling experiment")
    p.add_argument("--condition", choices=["control", "rewarded", "nonoptional", "all"], default="all")
    p.add_argument("--n", type=int, default=None, help="participants per condition (default: benchmark ns)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gameover-rate", type=float, default=2.0, help="gameover events per minute")
    p.add_argument("--batch-size", type=int, default=5)
    p.add_argument("--no-events", action="store_true", help="omit the raw event log from the report")
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="statistics for a saved report")
    p.add_argument("report")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("calibrate", help="sweep gameover rate and batch size toward label-count targets")
    p.add_argument("--target", default=None, help="JSON file of per-condition targets")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("serve", help="run the HTTP platform service")
    p.add_argument("--config", default=None, help="JSON config file (TASKADS_* env vars override)")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("drive", help="run labeling traffic against a live service")
    p.add_argument("--url", required=True)
    p.add_argument("--token", default="client-token")
    p.add_argument("--campaign", default=None)
    p.add_argument("--n-users", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_drive)

    args = parser.parse_args(argv)
    from .model import DomainError
    from .sim import SimError

    try:
        return args.func(args)
    except (SimError, DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
