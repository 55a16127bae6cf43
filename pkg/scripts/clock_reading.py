"""Track the clock reading against the accumulated shift beta_n along engine trajectories.

With one parity-even temporal level the reading equals beta_n. With several
tracked levels the shift mixes them, but each evolution projector picks out a
single level (non-degenerate eigenvalues), so the reading again lands on
beta_n up to the parity error of the grid.
"""
import argparse
import math

import numpy as np

from pevclock.engine import ClockModel
from pevclock.montecarlo import CounterStream, SimulationConfig, XiDistribution, run_engine_trajectory
from pevclock.temporal import TemporalModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--xi-mean", type=float, default=0.1)
    ap.add_argument("--gamma", type=float, default=math.pi / 4)
    ap.add_argument("--trajectories", type=int, default=20)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    xi = XiDistribution("exponential", args.xi_mean)
    for n_t in args.levels:
        model = ClockModel.build(TemporalModel.harmonic(), n_t, (0.0, 1.0), args.gamma)
        cfg = SimulationConfig(model, xi, max_steps=args.steps, seed=args.seed, stop_after=None)
        dev, clicks = [], []
        for i in range(args.trajectories):
            traj = run_engine_trajectory(cfg, CounterStream(args.seed, i), i)
            dev.append(max(abs(s.t_reading - s.beta) for s in traj.steps))
            clicks.append(len(traj.click_steps))
        print(f"levels={n_t}: max |t_n - beta_n| = {max(dev):.3e}, mean clicks per {args.steps} steps = "
              f"{np.mean(clicks):.2f}")


if __name__ == "__main__":
    main()
