"""Replay the three-condition experiment at reduced scale and analyze it.

Thirty participants per condition keep this quick; the full benchmark-sized
run (99/100/97 participants, 100 seeds) lives in the acceptance suite.
"""

from taskads.sim import ScenarioConfig, analyze, run_experiment

cfg = ScenarioConfig(condition="all", n_participants=30, master_seed=2024, keep_events=False)
report = run_experiment(cfg)

print(f"{'condition':<14}{'n':>4}{'missing':>9}{'median succ':>13}{'median t/label':>16}")
for name, c in report.conditions.items():
    d = c and report.to_doc()["conditions"][name]["descriptives"]
    print(
        f"{name:<14}{c.participants:>4}{c.missing:>9}"
        f"{d['success_rate']['median']:>13.3f}{d['time_per_label']['median']:>15.2f}s"
    )

analysis = analyze(report)
for metric, tests in analysis["tests"].items():
    w = tests["welch_anova"]
    print(f"\n{metric}: Welch F({w['df1']:.0f},{w['df2']:.1f}) = {w['F']:.3f}, p = {w['p']:.4f}")
    for pair in tests["games_howell"]:
        mark = "significant" if pair["significant"] else "n.s."
        print(f"  {pair['pair'][0]:<13} vs {pair['pair'][1]:<13} p={pair['p']:.4f}  {mark}")
