"""Improve random designs for the rational model eta = theta_0 x / Q(x), Q of degree 2.

For every design the script records the support size before and after, the
moment error, the smallest eigenvalue of C(improved) - C(original) and whether
the improved support contains the left endpoint.  A summary goes to stderr.
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from garza.chebyshev import check_chebyshev
from garza.core import Design, IntervalDomain, index
from garza.improve import improve_design
from garza.matrices import c_matrix
from garza.models import q_from_roots, rational_model


@dataclass
class RunConfig:
    roots: list = field(default_factory=lambda: [-2.0, -2.0])
    n_designs: int = 100
    min_points: int = 4
    max_points: int = 8
    seed: int = 20240611


def run(cfg: RunConfig):
    dom = IntervalDomain(0.0, 1.0)
    den = q_from_roots(cfg.roots)
    model = rational_model(1, 2, (1.0, *den[1:]), dom)
    cheb = check_chebyshev(model.psi, dom)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.n_designs):
        n = int(rng.integers(cfg.min_points, cfg.max_points + 1))
        xi = Design.create(rng.uniform(dom.A, dom.B, n), rng.dirichlet(np.ones(n)), dom)
        res = improve_design(xi, model, cheb=cheb)
        lam = float(np.linalg.eigvalsh(c_matrix(res.improved, model) - c_matrix(xi, model))[0])
        rows.append([i, xi.size, index(xi, dom), res.improved.size, res.case_tag.value,
                     f"{res.moment_error:.2e}", f"{lam:.3e}", bool(res.improved.support[0] == dom.A)])
    return cheb.verdict.value, rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--roots", type=float, nargs=2, default=RunConfig().roots,
                    help="roots of Q (outside the design interval)")
    ap.add_argument("--n-designs", type=int, default=RunConfig.n_designs)
    ap.add_argument("--min-points", type=int, default=RunConfig.min_points)
    ap.add_argument("--max-points", type=int, default=RunConfig.max_points)
    ap.add_argument("--seed", type=int, default=RunConfig.seed)
    a = ap.parse_args(argv)
    verdict, rows = run(RunConfig(list(a.roots), a.n_designs, a.min_points, a.max_points, a.seed))
    out = csv.writer(sys.stdout)
    out.writerow(["design", "n_before", "index", "n_after", "case", "moment_error", "lambda_min",
                  "contains_A"])
    out.writerows(rows)
    worst = min(float(r[6]) for r in rows)
    print(f"verdict {verdict}; max support after {max(r[3] for r in rows)}; "
          f"worst lambda_min {worst:.2e}", file=sys.stderr)


if __name__ == "__main__":
    main()
