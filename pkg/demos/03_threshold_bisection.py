"""Bisect the amplitude c in the family cQ between a scattering and a trapped end.

Each probe is a T=50 run on the large default box (about 20 s each on one core),
so the full 12-probe budget takes several minutes.  Pass a smaller budget to
get a quick look:  python3 demos/03_threshold_bisection.py 4
"""
import dataclasses
import sys

from nlsthreshold.lab import ExperimentConfig, threshold_bisect

budget = int(sys.argv[1]) if len(sys.argv) > 1 else 12
cfg = ExperimentConfig.from_json("demos/configs/threshold.json")
cfg = cfg.replace(bisection=dataclasses.replace(cfg.bisection, budget=budget))

res = threshold_bisect(cfg, "demo-out")
for p in res.probes:
    print(f"  c={p.c:.6f}  ell={p.ell:.5f}  {p.verdict.value:12s} slope={p.tail_slope:+.3f}")
print(f"\nbracket c in [{res.c_lo:.6f}, {res.c_hi:.6f}]  ({res.undetermined_count} undetermined probes)")
print(f"ell_hi = {res.ell_hi:.5f} against ell(Q) = {res.ell_ground_state:.5f}: eta = {res.eta:.4f}")
print("A positive eta means a non-scattering datum below the ground-state level was observed.")
