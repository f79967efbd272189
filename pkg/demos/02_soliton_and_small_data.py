"""Two single runs with opposite fates: the standing wave and a small Gaussian.

The standing wave e^{it}Q keeps its L^gamma norm, so the running space-time
norm grows linearly.  A small Gaussian disperses and the norm saturates.  The
classifier reads the log-log slope of ||u(t)||_gamma over the late window.

Run:  python3 demos/02_soliton_and_small_data.py [out_dir]
"""
import sys

from nlsthreshold.lab import ExperimentConfig, run_simulation

out = sys.argv[1] if len(sys.argv) > 1 else "demo-out"

soliton = ExperimentConfig.from_dict({
    "name": "soliton",
    "grid": {"points": 1024, "extent": 40.0},
    "stepper": {"dt": 1e-3, "t_final": 50.0, "snapshot_stride": 1000},
})
rec = run_simulation(soliton, out)
t = rec.trajectory
print(f"Q:    verdict={rec.verdict.value:12s} slope={rec.classification.tail_slope:+.4f}")
print(f"      mass drift {t.mass_drift():.1e}, energy drift {t.energy_drift():.1e}")

# The small Gaussian is run in the lens frame so the box never fills with radiation.
gauss = ExperimentConfig.from_json("demos/configs/gaussian_lens.json")
rec = run_simulation(gauss, out)
print(f"0.1G: verdict={rec.verdict.value:12s} slope={rec.classification.tail_slope:+.4f} "
      f"(backward run: {rec.backward.verdict.value})")
print(f"\nTrajectories written below {out}/runs/")
