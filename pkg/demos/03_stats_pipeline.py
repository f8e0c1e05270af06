"""The statistics pipeline on synthetic heteroscedastic groups.

Levene flags the variance difference, Welch's ANOVA tests the means without
assuming equal variances, and Games-Howell locates which pairs differ.
"""

import numpy as np

from taskads.stats import Sample, descriptives, games_howell, levene, welch_anova

rng = np.random.default_rng(7)
groups = [
    Sample("browser", tuple(rng.normal(7.9, 5.3, 99))),
    Sample("opt_in_ads", tuple(rng.normal(4.6, 3.4, 72))),
    Sample("forced_ads", tuple(rng.normal(4.4, 3.4, 97))),
]

print("descriptives")
for g in groups:
    d = descriptives(g)
    print(f"  {g.group_name:<12} n={d.n:<4} median={d.median:6.2f} mean={d.mean:6.2f} sd={d.sd:5.2f}")

lev = levene(groups)
print(f"\nLevene:       F({lev.df1:.0f},{lev.df2:.0f}) = {lev.statistic:.3f}, p = {lev.p_value:.4f}"
      f" -> variances {'differ' if lev.significant else 'comparable'}")

welch = welch_anova(groups)
print(f"Welch ANOVA:  F({welch.df1:.0f},{welch.df2:.1f}) = {welch.statistic:.3f}, p = {welch.p_value:.4g}"
      f" -> means {'differ' if welch.significant else 'comparable'}")

print("Games-Howell pairwise:")
for r in games_howell(groups):
    mark = "significant" if r.significant else "n.s."
    print(f"  {r.pair[0]:<12} vs {r.pair[1]:<12} q={r.statistic:5.2f} df={r.df:6.1f} p={r.p_value:.4f}  {mark}")
