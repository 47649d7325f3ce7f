"""Small builders shared by the test modules."""

import numpy as np

from garza.core import Design, PsiSystem


def monomials(k):
    return PsiSystem(tuple((lambda x, j=j: x**j) for j in range(1, k + 1)))


def random_design(rng, domain, lo=4, hi=8):
    n = int(rng.integers(lo, hi + 1))
    return Design.create(rng.uniform(domain.A, domain.B, n), rng.dirichlet(np.ones(n)), domain)
