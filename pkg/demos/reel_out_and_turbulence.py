"""Tracking while the tether reels out, then under gusts.

First the tether pays out at a third of the wind speed for one figure
eight. Then a small turbulence grid shows how the mean tracking error
grows with gust intensity. Each cell averages three seeds here; the CLI
``sweep`` command runs the full grid.
"""
from kitetrack import RunConfig, run_single, run_sweep

base = RunConfig(seed=7)

reel = run_single(base.replace(tether_rate_m_s=2.0, stop_after_cycles=1.0, duration_s=60.0))
s = reel.series
print(f"reel-out: one cycle in {reel.metrics.duration_s:.2f} s, "
      f"tether {s['tether_len'][0]:.1f} -> {s['tether_len'][-1]:.1f} m, J = {reel.metrics.J:.2e}")

sweep = run_sweep(base, sigmas=(0.0, 0.5, 1.0), deltas=(0.1, 1.0), n_seeds=3)
print(f"no-turbulence baseline J = {sweep.baseline_J:.2e}")
for sigma, delta, mean, std, done, aborted in sweep.table():
    print(f"  sigma = {sigma:3.1f} m/s  delta = {delta:3.1f} 1/s   J = {mean:.2e} +- {std:.1e}")
