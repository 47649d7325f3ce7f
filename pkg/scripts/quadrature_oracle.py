"""Compare principal representations of uniform moments with Gauss quadrature.

For the monomial system on [-1, 1] and the moments of the uniform
probability measure, the upper representation with k = 2m is the
(m+1)-point Gauss-Lobatto rule and with k = 2m + 1 the (m+1)-point
Gauss-Radau rule fixed at the right endpoint.
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from garza.core import IntervalDomain, PsiSystem
from garza.improve import principal_representation

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from oracles import gauss_lobatto, gauss_radau_right, uniform_monomial_moments  # noqa: E402


@dataclass
class OracleConfig:
    m_max: int = 5
    grid: int = 2001


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m-max", type=int, default=OracleConfig.m_max)
    ap.add_argument("--grid", type=int, default=OracleConfig.grid)
    a = ap.parse_args(argv)
    cfg = OracleConfig(a.m_max, a.grid)
    dom = IntervalDomain(-1.0, 1.0)
    print(f"{'k':>3} {'rule':>8} {'points':>6} {'max error':>10}")
    for m in range(1, cfg.m_max + 1):
        for k, rule, name in ((2 * m, gauss_lobatto, "lobatto"), (2 * m + 1, gauss_radau_right, "radau")):
            psi = PsiSystem(tuple((lambda x, j=j: x**j) for j in range(1, k + 1)))
            d = principal_representation(uniform_monomial_moments(k), psi, dom, grid_n=cfg.grid)
            x, w = rule(m + 1)
            err = max(np.max(np.abs(d.support - x)), np.max(np.abs(d.weights - w))) \
                if d.size == m + 1 else np.inf
            print(f"{k:>3} {name:>8} {d.size:>6} {err:>10.2e}")


if __name__ == "__main__":
    main()
