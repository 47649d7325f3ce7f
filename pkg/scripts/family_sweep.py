"""Sweep the two-point family {0: p, 3/(8(1-p)): 1-p} against {0: 1/2, 3/4: 1/2}.

Prints one CSV row per p with the Loewner verdict, the eigenvalues of the
difference and both criteria.  Values of p whose second point leaves the
design interval are reported as REJECTED.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from garza.core import Design, DesignError, IntervalDomain
from garza.matrices import criterion, difference_eigenvalues, info_matrix, loewner_compare
from garza.models import polynomial_model


@dataclass
class SweepConfig:
    p_min: float = 0.50
    p_max: float = 0.70
    steps: int = 21
    tol: float = 1e-9


def sweep(cfg: SweepConfig):
    dom = IntervalDomain(0.0, 1.0)
    model = polynomial_model(1, dom)
    M = info_matrix(Design.create([0.0, 0.75], [0.5, 0.5], dom), model)
    for p in np.linspace(cfg.p_min, cfg.p_max, cfg.steps):
        try:
            Mp = info_matrix(Design.create([0.0, 3 / (8 * (1 - p))], [p, 1 - p], dom), model)
        except DesignError:
            yield [f"{p:.4f}", "REJECTED", "", "", "", ""]
            continue
        ev = difference_eigenvalues(M, Mp)
        yield [f"{p:.4f}", loewner_compare(M, Mp, cfg.tol).value, f"{ev[0]:.3e}", f"{ev[-1]:.3e}",
               f"{criterion(Mp, 'D'):.6f}", f"{criterion(Mp, 'A'):.6f}"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p-min", type=float, default=SweepConfig.p_min)
    ap.add_argument("--p-max", type=float, default=SweepConfig.p_max)
    ap.add_argument("--steps", type=int, default=SweepConfig.steps)
    ap.add_argument("--tol", type=float, default=SweepConfig.tol)
    a = ap.parse_args(argv)
    out = csv.writer(sys.stdout)
    out.writerow(["p", "verdict", "ev_min", "ev_max", "D", "A"])
    out.writerows(sweep(SweepConfig(a.p_min, a.p_max, a.steps, a.tol)))


if __name__ == "__main__":
    main()
