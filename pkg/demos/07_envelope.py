"""Fit a universal envelope |U| <= C~ + C g(t) over a simulation campaign.

The campaign runs nodal coupled data inside a sign-change cone, once as given
and once with amplitudes scaled by 10.  A universal bound keeps C stable under
the scaling.  Outputs (traces, summary.csv, envelope.svg, report.md) are
written under demo-output/.
"""

import json
from pathlib import Path

from liouville_lab.harness import rate_table, report, run_campaign, scaled

cfg = json.loads((Path(__file__).resolve().parents[1] / "configs" / "bounds_nodal_p3.json").read_text())
cfg.update(runs=8, t_stop=1.0)
out = Path("demo-output")
for factor in (1.0, 10.0):
    env = run_campaign(scaled(cfg, factor), out_dir=out / f"scale-{factor:g}")
    report(env)
    print(f"scale {factor:>4g}: C~ = {env.C_tilde:.4f}, C = {env.C:.4f}, runs {len(env.runs)}, "
          f"excluded {len(env.excluded)}, violations {env.violations}")

print("\nflat-data rate table")
for row in rate_table():
    print(f"  p = {row['p']:g}: beta_fit = {row['beta_fit']:.4f}, T_fit = {row['T_fit']:.6f} "
          f"(exact {row['T_exact']:.6f})")
