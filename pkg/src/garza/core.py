"""Designs on an interval, Psi-function systems, moments and the design index."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional, Sequence

import numpy as np

from . import taylor

WEIGHT_DROP = 1e-12
WEIGHT_SUM_TOL = 1e-12
BOUNDARY_REL_TOL = 1e-9


class DesignError(ValueError):
    """Invalid design measure or design/domain mismatch."""


@dataclass(frozen=True)
class IntervalDomain:
    A: float
    B: float

    def __post_init__(self):
        if not (np.isfinite(self.A) and np.isfinite(self.B)):
            raise ValueError("domain endpoints must be finite")
        if not self.A < self.B:
            raise ValueError(f"need A < B, got A={self.A}, B={self.B}")

    @property
    def width(self) -> float:
        return self.B - self.A

    @property
    def boundary_tol(self) -> float:
        return BOUNDARY_REL_TOL * self.width

    def grid(self, n: int) -> np.ndarray:
        g = np.linspace(self.A, self.B, n)
        g[0], g[-1] = self.A, self.B
        return g

    def contains(self, x, tol: Optional[float] = None) -> np.ndarray:
        tol = self.boundary_tol if tol is None else tol
        x = np.asarray(x, dtype=float)
        return (x >= self.A - tol) & (x <= self.B + tol)

    def to_json(self) -> dict:
        return {"A": self.A, "B": self.B}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Design:
    """Finitely supported probability measure with sorted support.

    Construct through :meth:`create` to get sorting, merging of coincident
    points and renormalization; the bare constructor only validates.
    """

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = _frozen(self.support)
        w = _frozen(self.weights)
        object.__setattr__(self, "support", x)
        object.__setattr__(self, "weights", w)
        if x.size == 0:
            raise DesignError("a design needs at least one support point")
        if x.shape != w.shape:
            raise DesignError("support and weights differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise DesignError("support and weights must be finite")
        if np.any(w <= 0):
            raise DesignError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise DesignError(f"weights sum to {w.sum()!r}, not 1")
        if np.any(np.diff(x) <= 0):
            raise DesignError("support points must be strictly increasing")

    @classmethod
    def create(cls, support, weights=None, domain: Optional[IntervalDomain] = None,
               merge_tol: Optional[float] = None) -> "Design":
        x = np.asarray(support, dtype=float).reshape(-1)
        if x.size == 0:
            raise DesignError("a design needs at least one support point")
        w = np.full(x.size, 1.0 / x.size) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != x.shape:
            raise DesignError("support and weights differ in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DesignError("weights must be finite and non-negative")
        keep = w > WEIGHT_DROP
        if not np.any(keep):
            raise DesignError("all weights are zero")
        x, w = x[keep], w[keep]
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order] / w.sum()
        if domain is not None:
            if not np.all(domain.contains(x)):
                bad = x[~domain.contains(x)][0]
                raise DesignError(f"support point {bad!r} outside [{domain.A}, {domain.B}]")
            tol = domain.boundary_tol
            x = np.where(np.abs(x - domain.A) <= tol, domain.A, x)
            x = np.where(np.abs(x - domain.B) <= tol, domain.B, x)
            if merge_tol is None:
                merge_tol = 1e-12 * domain.width
        if merge_tol is None:
            merge_tol = 1e-12 * max(1.0, float(np.ptp(x)))
        x, w = _merge(x, w, merge_tol)
        return cls(x, w / w.sum())

    @classmethod
    def point_mass(cls, x: float) -> "Design":
        return cls([x], [1.0])

    @property
    def size(self) -> int:
        return int(self.support.size)

    def check_domain(self, domain: IntervalDomain) -> None:
        inside = domain.contains(self.support)
        if not np.all(inside):
            bad = self.support[~inside][0]
            raise DesignError(f"support point {bad!r} outside [{domain.A}, {domain.B}]")

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return (np.array_equal(self.support, other.support)
                and np.array_equal(self.weights, other.weights))

    def __repr__(self):
        pts = ", ".join(f"{x:.6g}: {w:.6g}" for x, w in zip(self.support, self.weights))
        return f"Design({{{pts}}})"

    def to_json(self) -> dict:
        return {"support": [float(v) for v in self.support],
                "weights": [float(v) for v in self.weights]}


def _merge(x: np.ndarray, w: np.ndarray, tol: float):
    # single-linkage on the sorted support; merged point is the weighted mean,
    # clamped to the cluster so rounding cannot reorder neighbouring clusters
    xs, ws = [], []
    start = 0
    for i in range(1, x.size + 1):
        if i == x.size or x[i] - x[i - 1] > tol:
            cw = w[start:i].sum()
            cx = float(np.dot(x[start:i], w[start:i]) / cw)
            xs.append(min(max(cx, x[start]), x[i - 1]))
            ws.append(cw)
            start = i
    return np.array(xs), np.array(ws)


def merge_close_support(design: Design, tol: float) -> Design:
    """Merge support points closer than ``tol``; weights add, points average."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    x, w = _merge(design.support, design.weights, tol)
    return Design(x, w / w.sum())


def mixture(d1: Design, d2: Design, alpha: float) -> Design:
    """The design ``alpha * d1 + (1 - alpha) * d2``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    x = np.concatenate([d1.support, d2.support])
    w = np.concatenate([alpha * d1.weights, (1 - alpha) * d2.weights])
    return Design.create(x, w, merge_tol=0.0)


def index(design: Design, domain: IntervalDomain) -> float:
    """Support size with the endpoints A and B counted one half each."""
    tol = domain.boundary_tol
    x = design.support
    on_boundary = np.count_nonzero((np.abs(x - domain.A) <= tol) | (np.abs(x - domain.B) <= tol))
    return design.size - 0.5 * on_boundary


Func = Callable


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float)) if not isinstance(x, taylor.Jet) else x * 0.0 + 1.0


@dataclass(frozen=True)
class PsiSystem:
    """The distinct non-constant information-matrix functions Psi_1..Psi_k.

    ``functions`` are written numpy-style; when ``analytic`` is true they must
    also accept :class:`~garza.taylor.Jet` arguments, which gives exact
    derivatives.  Otherwise derivatives come from central finite differences.
    ``psi0`` replaces the constant function Psi_0 = 1 (used for positively
    rescaled systems); moments always assume the constant convention.
    """

    functions: tuple
    names: tuple = ()
    analytic: bool = True
    psi0: Optional[Func] = None
    diag: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if len(self.functions) < 1:
            raise ValueError("a Psi system needs at least one function")
        names = tuple(self.names) or tuple(f"psi{j}" for j in range(1, len(self.functions) + 1))
        if len(names) != len(self.functions):
            raise ValueError("names and functions differ in length")
        object.__setattr__(self, "names", names)

    @property
    def k(self) -> int:
        return len(self.functions)

    def all_functions(self) -> list:
        return [self.psi0 or _one, *self.functions]

    def evaluate(self, x, upto: Optional[int] = None) -> np.ndarray:
        """Rows Psi_0..Psi_upto evaluated at ``x`` (default upto = k)."""
        upto = self.k if upto is None else upto
        x = np.asarray(x, dtype=float)
        rows = np.empty((upto + 1,) + x.shape)
        for i, f in enumerate(self.all_functions()[: upto + 1]):
            rows[i] = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
        if not np.all(np.isfinite(rows)):
            i, *pos = np.argwhere(~np.isfinite(rows))[0]
            bad = float(x[tuple(pos)]) if x.ndim else float(x)
            raise ValueError(f"Psi_{i} is not finite at x={bad!r}")
        return rows

    def derivatives(self, x, order: int, upto: Optional[int] = None) -> np.ndarray:
        """Array ``D[i, r] = Psi_i^(r)(x)``, i = 0..upto, r = 0..order."""
        upto = self.k if upto is None else upto
        x = np.asarray(x, dtype=float)
        out = np.empty((upto + 1, order + 1) + x.shape)
        for i, f in enumerate(self.all_functions()[: upto + 1]):
            if self.analytic:
                out[i] = taylor.derivatives(f, x, order)
            else:
                out[i] = taylor.finite_difference_derivatives(f, x, order)
        if not np.all(np.isfinite(out)):
            raise ValueError("non-finite Psi derivative encountered")
        return out

    def jets(self, x, order: int) -> list:
        """Taylor jets of Psi_0..Psi_k; finite-difference based if not analytic."""
        if self.analytic:
            return [taylor.taylor(f, x, order) for f in self.all_functions()]
        fac = np.array([factorial(r) for r in range(order + 1)], dtype=float)
        fac = fac.reshape((-1,) + (1,) * np.ndim(x))
        return [taylor.Jet(d / fac) for d in self.derivatives(x, order)]

    def with_last(self, sign: int) -> "PsiSystem":
        """Same system with Psi_k multiplied by ``sign``."""
        if sign == 1:
            return self
        f = self.functions[-1]
        return PsiSystem(self.functions[:-1] + (lambda x, f=f: -f(x),),
                         self.names[:-1] + (f"-{self.names[-1]}",),
                         self.analytic, self.psi0, self.diag)

    def scaled(self, weight: Func) -> "PsiSystem":
        """Every function, including Psi_0, multiplied by ``weight``."""
        base = self.psi0 or _one
        return PsiSystem(tuple((lambda x, f=f: weight(x) * f(x)) for f in self.functions),
                         tuple(f"w*{n}" for n in self.names), self.analytic,
                         lambda x: weight(x) * base(x), self.diag)

    def truncated(self, k: int) -> "PsiSystem":
        """Subsystem Psi_0..Psi_k."""
        return PsiSystem(self.functions[:k], self.names[:k], self.analytic, self.psi0, None)


@dataclass(frozen=True)
class MomentVector:
    values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


def moment(design: Design, psi: PsiSystem, i: int) -> float:
    """Exact weighted sum of Psi_i over the support (Psi_0 = 1)."""
    if not 0 <= i <= psi.k:
        raise IndexError(f"moment index {i} outside 0..{psi.k}")
    if i == 0:
        return 1.0
    vals = psi.evaluate(design.support, upto=i)[i]
    return float(np.dot(design.weights, vals))


def moment_vector(design: Design, psi: PsiSystem, order: Optional[int] = None) -> MomentVector:
    order = psi.k if order is None else order
    if not 0 <= order <= psi.k:
        raise IndexError(f"moment order {order} outside 0..{psi.k}")
    vals = psi.evaluate(design.support, upto=order) @ design.weights
    vals[0] = 1.0
    return MomentVector(tuple(vals))
