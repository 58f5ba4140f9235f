"""Minimum-effort rest-to-rest transfer solved by the collocation solver.

Compares the numerical optimum with the closed form u(t) = 6 - 12 t, J = 12.
"""

import numpy as np

from hrom.trajopt.problems import double_integrator_guess, double_integrator_problem
from hrom.trajopt.solver import nlp_solve


def main(n=11):
    dv, report = nlp_solve(double_integrator_problem(n=n), double_integrator_guess(n=n))
    exact = 6.0 - 12.0 * dv.times
    print(f"{report.status} in {report.iterations} iterations")
    print(f"cost {report.cost:.6f} (exact 12), violation {report.constraint_violation:.1e}")
    print(" t      u        exact")
    for t, u, e in zip(dv.times, dv.controls[:, 0], exact):
        print(f" {t:.2f}  {u:+.5f}  {e:+.5f}")
    print(f"max control error {np.abs(dv.controls[:, 0] - exact).max():.2e}")


if __name__ == "__main__":
    main()
