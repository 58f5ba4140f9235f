"""Warm-start the HROM collocation problem from a short simulated walk and solve it.

Runs the bundled walk configuration (21 nodes over 0.5 s); takes about a minute.
"""

import numpy as np

from hrom.acceptance import bundled_config, hrom_smoke
from hrom.config import load_config
from hrom.trajopt.problems import edf_map


def main():
    config = load_config(bundled_config())
    dv, report, cost0, viol0, _ = hrom_smoke(config, n=config.opt.n)
    print(f"{report.status} after {report.iterations} iterations")
    print(f"violation {viol0:.3e} -> {report.constraint_violation:.3e}")
    print(f"cost      {cost0:.4f} -> {report.cost:.4f}")
    forces = dv.controls[:, 2:5] @ edf_map(config.robot).T
    print(f"EDF forces range [{forces.min():.2f}, {forces.max():.2f}] N")
    print(f"max |roll|, |pitch| {np.abs(dv.states[:, 5]).max():.4f}, {np.abs(dv.states[:, 4]).max():.4f} rad")


if __name__ == "__main__":
    main()
