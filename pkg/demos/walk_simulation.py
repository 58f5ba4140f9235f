"""Simulate the thrust-assisted walk and print the headline numbers.

    python3 demos/walk_simulation.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from hrom.gait import GaitParams, build_gait
from hrom.io import write_plot_data, write_trajectory_csv
from hrom.params import GroundParams, RobotParams
from hrom.sim import SimConfig, simulate, stance_slip


def main(out_dir=None):
    robot, ground = RobotParams(), GroundParams()
    plan = build_gait(GaitParams(forward_velocity_ref=0.1, duration=3.5), robot)
    traj = simulate(SimConfig(dt=1e-3, duration=3.5), plan, robot, ground)

    s = traj.states
    print(f"status              {traj.status}")
    print(f"forward displacement {s[-1, 0] - s[0, 0]:.4f} m over {traj.t[-1]:.2f} s")
    print(f"max |roll|, |pitch|  {np.abs(s[:, 5]).max():.4f}, {np.abs(s[:, 4]).max():.4f} rad")
    print(f"max total thrust     {traj.thrust.sum(axis=1).max():.2f} N")
    print(f"worst stance slip    {1e3 * max(d for *_, d in stance_slip(traj, robot)):.2f} mm")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out / "trajectory.csv", traj)
        write_plot_data(out_dir, traj, robot)
        print(f"wrote {out_dir}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
