"""Loewner-improving designs via principal representations of moment vectors.

For a design xi the k moments d_0..d_{k-1} are held fixed and the k-th moment
is pushed to its extreme over all designs on [A, B].  The extremal design
(a principal representation) has index k/2 under a Chebyshev verdict and
dominates xi in the Loewner order whenever d_k increases, because C(xi)
depends on d_k only through the single diagonal entry C[l, l].

Numerically: a linear program over a grid gives the global structure, its
atoms are consolidated into the support pattern dictated by the orientation
and the parity of k, and a damped Newton solve of the square moment system
removes the discretization error.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .chebyshev import ChebReport, Verdict, check_chebyshev
from .core import (Design, DesignError, IntervalDomain, MomentVector, PsiSystem, index,
                   moment_vector)
from .matrices import c_matrix
from .models import ModelSpec

log = logging.getLogger(__name__)

DEFAULT_GRID = 2001
TOL_MOM = 1e-8
TOL_PSD = 1e-8


class Direction(str, enum.Enum):
    """Which principal representation of the oriented system {Psi_0, .., eps Psi_k}.

    UPPER maximizes eps * d_k, LOWER minimizes it.  With eps the Chebyshev
    orientation, both UPPER under CHEB_PLUS and LOWER under CHEB_MINUS raise
    the raw d_k, i.e. they are the Loewner-improving choices.
    """

    UPPER = "UPPER"
    LOWER = "LOWER"


class CaseTag(str, enum.Enum):
    ALREADY_ADMISSIBLE = "ALREADY_ADMISSIBLE"
    ODD_B = "ODD_B"
    EVEN_AB = "EVEN_AB"
    ODD_A = "ODD_A"
    EVEN_INTERIOR = "EVEN_INTERIOR"
    UNCERTIFIED = "UNCERTIFIED"


class InfeasibleMoments(ValueError):
    pass


class CertificateError(ArithmeticError):
    """The constructed design is not Loewner-superior: wrong orientation or (def)."""


@dataclass(frozen=True)
class GridLP:
    grid: np.ndarray
    objective: np.ndarray
    constraints: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        k = self.constraints.shape[0]
        if self.constraints.shape != (k, self.grid.size) or self.rhs.shape != (k,):
            raise ValueError("inconsistent LP dimensions")


def build_grid_lp(psi: PsiSystem, domain: IntervalDomain, moments: Sequence[float],
                  grid_n: int = DEFAULT_GRID, extra_points: Sequence[float] = (),
                  orientation: int = 1) -> GridLP:
    """LP data for extremizing ``orientation * d_k`` subject to d_0..d_{k-1} = moments."""
    k = psi.k
    rhs = np.asarray(moments, dtype=float)[:k]
    if rhs.size != k:
        raise ValueError(f"need moments d_0..d_{k - 1}")
    if grid_n < 10 * k:
        raise ValueError(f"grid of {grid_n} points is too coarse for k = {k}")
    grid = np.union1d(domain.grid(grid_n), np.clip(np.asarray(extra_points, dtype=float), domain.A, domain.B))
    vals = psi.evaluate(grid)
    return GridLP(grid, orientation * vals[k], vals[:k], rhs)


def solve_grid_lp(lp: GridLP, direction: Direction = Direction.UPPER) -> np.ndarray:
    """Basic optimal weights on the grid (dual simplex, at most k nonzeros)."""
    A = lp.constraints
    scale = np.max(np.abs(A), axis=1)
    scale[scale == 0] = 1.0
    A_s, b_s = A / scale[:, None], lp.rhs / scale
    c = -lp.objective if direction is Direction.UPPER else lp.objective
    c = c / max(np.max(np.abs(c)), np.finfo(float).tiny)
    res = linprog(c, A_eq=A_s, b_eq=b_s, bounds=(0, None), method="highs-ds")
    if res.status == 3:
        raise RuntimeError("grid LP is unbounded; the weight constraint d_0 = 1 is missing")
    if res.status != 0:
        raise InfeasibleMoments(_first_violation(A_s, b_s))
    x = np.where(res.x > 1e-15, res.x, 0.0)
    return x


def _first_violation(A_s, b_s) -> str:
    # smallest j such that d_0..d_j already admit no representation on the grid
    n = A_s.shape[1]
    for j in range(A_s.shape[0]):
        res = linprog(np.zeros(n), A_eq=A_s[: j + 1], b_eq=b_s[: j + 1], bounds=(0, None), method="highs")
        if res.status == 2:
            return f"moments lie outside the moment space: constraint d_{j} is violated first"
    return "moment equations are inconsistent on the grid"


def _lp_fit(lp: GridLP) -> np.ndarray:
    """Weights minimizing the L1 moment residual; used when the grid LP is infeasible."""
    A = lp.constraints
    scale = np.max(np.abs(A), axis=1)
    scale[scale == 0] = 1.0
    A_s, b_s = A / scale[:, None], lp.rhs / scale
    k, n = A_s.shape
    c = np.concatenate([np.zeros(n), np.ones(2 * k)])
    res = linprog(c, A_eq=np.hstack([A_s, np.eye(k), -np.eye(k)]), b_eq=b_s, bounds=(0, None),
                  method="highs-ds")
    return np.where(res.x[:n] > 1e-15, res.x[:n], 0.0), float(res.fun)


# -- support structure and refinement ---------------------------------------------


@dataclass(frozen=True)
class Structure:
    has_A: bool
    has_B: bool
    n_interior: int

    @property
    def size(self) -> int:
        return self.n_interior + self.has_A + self.has_B


def principal_structure(k: int, direction: Direction) -> Structure:
    """Support pattern of the principal representation of k moments (index k/2)."""
    even = k % 2 == 0
    if direction is Direction.UPPER:
        return Structure(even, True, k // 2 - 1 if even else (k - 1) // 2)
    return Structure(not even, False, k // 2 if even else (k - 1) // 2)


def case_tag(k: int, direction: Direction) -> CaseTag:
    odd = k % 2 == 1
    if direction is Direction.UPPER:
        return CaseTag.ODD_B if odd else CaseTag.EVEN_AB
    return CaseTag.ODD_A if odd else CaseTag.EVEN_INTERIOR


def _clusters(grid, w, h):
    idx = np.flatnonzero(w > 0)
    groups, cur = [], [idx[0]]
    for i in idx[1:]:
        if grid[i] - grid[cur[-1]] <= 2.5 * h:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    return [(float(np.dot(grid[g], w[g]) / w[g].sum()), float(w[g].sum()), g) for g in groups]


def _initial_guess(grid, w, domain: IntervalDomain, st: Structure, h: float):
    """Map LP atoms onto the structure: (interior points, interior weights, wA, wB)."""
    wA = wB = 0.0
    interior = []
    for x, mass, g in _clusters(grid, w, h):
        touches_A = st.has_A and grid[g[0]] <= domain.A + 2.5 * h
        touches_B = st.has_B and grid[g[-1]] >= domain.B - 2.5 * h
        if touches_A:
            wA += mass
        elif touches_B:
            wB += mass
        else:
            interior.append([x, mass])
    while len(interior) > st.n_interior:
        gaps = np.diff([p[0] for p in interior])
        i = int(np.argmin(gaps))
        (x1, m1), (x2, m2) = interior[i], interior[i + 1]
        interior[i : i + 2] = [[(x1 * m1 + x2 * m2) / (m1 + m2), m1 + m2]]
    while len(interior) < st.n_interior:
        knots = sorted([domain.A, domain.B] + [p[0] for p in interior])
        i = int(np.argmax(np.diff(knots)))
        interior.append([0.5 * (knots[i] + knots[i + 1]), 1e-3 / (st.size + 1)])
        interior.sort()
    floor = 1e-6
    wA = max(wA, floor) if st.has_A else 0.0
    wB = max(wB, floor) if st.has_B else 0.0
    y = np.array([p[0] for p in interior], dtype=float)
    wy = np.array([max(p[1], floor) for p in interior], dtype=float)
    return y, wy, wA, wB


def _assemble(y, wy, wA, wB, domain: IntervalDomain, st: Structure):
    xs, ws = [], []
    if st.has_A:
        xs.append(domain.A)
        ws.append(wA)
    xs.extend(y)
    ws.extend(wy)
    if st.has_B:
        xs.append(domain.B)
        ws.append(wB)
    return np.array(xs, dtype=float), np.array(ws, dtype=float)


def _newton(psi: PsiSystem, domain: IntervalDomain, rhs: np.ndarray, st: Structure,
            y0, wy0, wA0, wB0, max_iter: int = 100, halvings: int = 30):
    """Damped Newton on sum_j w_j Psi_i(x_j) = d_i, i < k, with fixed boundary atoms.

    Unknowns are the interior points and all weights; the system is square
    because the principal structure has exactly k free parameters.
    """
    k = psi.k
    n = st.n_interior
    scale = np.abs(psi.evaluate(domain.grid(201), upto=k - 1)).max(axis=1)
    scale[scale == 0] = 1.0
    target = 1e-12 * (1 + np.linalg.norm(rhs))

    def unpack(u):
        y = u[:n]
        ws = u[n:]
        wA = ws[0] if st.has_A else 0.0
        wy = ws[int(st.has_A) : int(st.has_A) + n]
        wB = ws[-1] if st.has_B else 0.0
        return y, wy, wA, wB

    def residual(u):
        x, w = _assemble(*unpack(u), domain, st)
        return psi.evaluate(x, upto=k - 1) @ w - rhs

    def feasible(u):
        y, wy, wA, wB = unpack(u)
        ok = np.all(u[n:] > 0)
        if n:
            ok &= y[0] > domain.A and y[-1] < domain.B and np.all(np.diff(y) > 0)
        return bool(ok)

    ws0 = ([wA0] if st.has_A else []) + list(wy0) + ([wB0] if st.has_B else [])
    u = np.concatenate([np.asarray(y0, dtype=float), np.asarray(ws0, dtype=float)])
    if u.size != k:
        raise ValueError("structure does not give a square system")
    r = residual(u)
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= target:
            return u, unpack(u), True, float(np.max(np.abs(r)))
        y, wy, wA, wB = unpack(u)
        x, w = _assemble(y, wy, wA, wB, domain, st)
        D = psi.derivatives(x, 1, upto=k - 1)           # (k, 2, m)
        vals, d1 = D[:, 0, :], D[:, 1, :]
        off = int(st.has_A)
        J = np.empty((k, k))
        J[:, :n] = d1[:, off : off + n] * wy
        J[:, n:] = vals
        Js, rs = J / scale[:, None], r / scale
        try:
            step = np.linalg.solve(Js, -rs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Js, -rs, rcond=None)[0]
        norm0 = np.linalg.norm(rs)
        t = 1.0
        for _ in range(halvings + 1):
            cand = u + t * step
            if feasible(cand):
                rc = residual(cand)
                if np.linalg.norm(rc / scale) < norm0:
                    break
            t *= 0.5
        else:
            res = float(np.max(np.abs(r)))
            return u, unpack(u), res <= 1e3 * target, res
        u, r = cand, rc
    res = float(np.max(np.abs(r)))
    return u, unpack(u), res <= target, res


@dataclass
class _Principal:
    design: Design
    structured: bool
    converged: bool
    lp_objective: float
    residual: float
    lp_design: Optional[Design] = None


def _principal(psi: PsiSystem, domain: IntervalDomain, rhs: np.ndarray, direction: Direction,
               orientation: int, grid_n: int, structured: bool, extra_points=()) -> _Principal:
    k = psi.k
    lp = build_grid_lp(psi, domain, rhs, grid_n, extra_points, orientation)
    exact = True
    try:
        w = solve_grid_lp(lp, direction)
    except InfeasibleMoments as exc:
        # off-grid moment vectors near the boundary of the moment space
        w, fit = _lp_fit(lp)
        if fit > 1e-4 or not structured:
            raise
        exact = False
        log.debug("grid LP infeasible (%s); refining an L1 fit", exc)
    sign = 1.0 if direction is Direction.UPPER else -1.0
    lp_obj = float(np.dot(lp.objective, w))
    keep = w > 0
    lp_design = Design.create(lp.grid[keep], w[keep], domain, merge_tol=0.0)
    if not structured:
        return _Principal(lp_design, False, False, lp_obj, 0.0, lp_design)

    st = principal_structure(k, direction)
    h = domain.width / (grid_n - 1)
    y0, wy0, wA0, wB0 = _initial_guess(lp.grid, w, domain, st, h)
    _, (y, wy, wA, wB), ok, res = _newton(psi, domain, rhs, st, y0, wy0, wA0, wB0)
    if ok:
        x, ws = _assemble(y, wy, wA, wB, domain, st)
        cand = Design.create(x, ws, domain, merge_tol=0.0)
        obj = float(orientation * np.dot(psi.evaluate(cand.support)[k], cand.weights))
        slack = 1e-9 * (1 + abs(lp_obj))
        if (not exact) or sign * (obj - lp_obj) >= -slack:
            return _Principal(cand, True, True, lp_obj, res, lp_design)
        log.debug("Newton solution worse than the grid LP optimum; discarded")
    if not exact:
        raise InfeasibleMoments("moments are not matched on the grid and refinement failed")
    return _Principal(lp_design, False, False, lp_obj, res, lp_design)


def principal_representation(moments, psi: PsiSystem, domain: IntervalDomain,
                             direction: Direction = Direction.UPPER, orientation: int = 1,
                             grid_n: int = DEFAULT_GRID) -> Design:
    """Design with moments d_0..d_{k-1} that extremizes ``orientation * d_k``.

    ``moments`` may be a :class:`MomentVector` or a sequence; entries beyond
    d_{k-1} are ignored.
    """
    vals = moments.as_array() if isinstance(moments, MomentVector) else np.asarray(moments, dtype=float)
    rhs = vals[: psi.k]
    if rhs.size != psi.k:
        raise ValueError(f"need moments d_0..d_{psi.k - 1}")
    out = _principal(psi, domain, rhs, Direction(direction), orientation, grid_n, True)
    return out.design


# -- improvement ------------------------------------------------------------------


@dataclass
class ImprovementResult:
    improved: Design
    original: Design
    original_moments: MomentVector
    achieved_dk: float
    original_dk: float
    direction: Direction
    case_tag: CaseTag
    loewner_certificate: float
    support_bound_ok: bool
    verdict: Verdict
    orientation: int
    moment_error: float
    index_before: float
    index_after: float
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "original": self.original.to_json(),
            "improved": self.improved.to_json(),
            "original_moments": list(self.original_moments.values),
            "original_dk": self.original_dk,
            "achieved_dk": self.achieved_dk,
            "direction": self.direction.value,
            "case_tag": self.case_tag.value,
            "loewner_certificate": self.loewner_certificate,
            "support_bound_ok": self.support_bound_ok,
            "verdict": self.verdict.value,
            "orientation": self.orientation,
            "moment_error": self.moment_error,
            "index_before": self.index_before,
            "index_after": self.index_after,
            "notes": list(self.notes),
        }


def auto_direction(verdict: Verdict) -> Direction:
    return Direction.LOWER if verdict is Verdict.CHEB_MINUS else Direction.UPPER


def improve_design(design: Design, model: ModelSpec, direction: Optional[Direction] = None,
                   cheb: Optional[ChebReport] = None, grid_n: int = DEFAULT_GRID,
                   tol_mom: float = TOL_MOM, tol_psd: float = TOL_PSD) -> ImprovementResult:
    """Replace ``design`` by the principal representation of its first k moments.

    Without a report the Chebyshev check is run here.  ``direction=None``
    picks the Loewner-improving one for the verdict (UPPER for CHEB_PLUS,
    LOWER for CHEB_MINUS, UPPER with no imposed structure otherwise).
    """
    psi, domain = model.psi, model.domain
    design.check_domain(domain)
    k = psi.k
    if cheb is None:
        cheb = check_chebyshev(psi, domain)
    verdict = cheb.verdict
    eps = verdict.sign or 1
    direction = auto_direction(verdict) if direction is None else Direction(direction)
    d = moment_vector(design, psi).as_array()
    original_moments = MomentVector(tuple(d[:k]))
    idx = index(design, domain)
    notes = []

    def result(improved, tag, cert=0.0):
        dk = moment_vector(improved, psi).as_array()
        return ImprovementResult(
            improved, design, original_moments, float(dk[k]), float(d[k]), direction, tag, cert,
            improved.size <= (k + 2) // 2, verdict, eps, float(np.max(np.abs(dk[:k] - d[:k]))),
            idx, index(improved, domain), notes)

    if verdict.definite and idx < k / 2:
        notes.append("index below k/2: the moment vector has a unique representation")
        return result(design, CaseTag.ALREADY_ADMISSIBLE)

    pr = _principal(psi, domain, d[:k], direction, eps, grid_n, verdict.definite, design.support)
    improved = pr.design
    if verdict.definite and not pr.converged:
        notes.append("Newton refinement failed; grid LP solution reported")
    tag = case_tag(k, direction) if (verdict.definite and pr.converged) else CaseTag.UNCERTIFIED

    new_dk = float(moment_vector(improved, psi).as_array()[k])
    if abs(new_dk - d[k]) <= 1e-10 * (1 + abs(d[k])):
        notes.append("no change in d_k: the design is its own principal representation")
        return result(design, CaseTag.ALREADY_ADMISSIBLE if verdict.definite else CaseTag.UNCERTIFIED)

    C0 = c_matrix(design, model)
    C1 = c_matrix(improved, model)
    cert = float(np.linalg.eigvalsh(0.5 * ((C1 - C0) + (C1 - C0).T))[0])
    if cert < -tol_psd * max(np.linalg.norm(C0, 2), 1e-300):
        raise CertificateError(
            f"lambda_min(C(xi+) - C(xi)) = {cert:.3g}: d_k moved the wrong way "
            f"({direction.value} with orientation {eps:+d})")
    out = result(improved, tag, cert)
    if out.moment_error > tol_mom:
        notes.append(f"moment mismatch {out.moment_error:.3g} exceeds {tol_mom:g}")
    return out


class Admissibility(str, enum.Enum):
    PROVEN_UNIMPROVABLE = "PROVEN_UNIMPROVABLE"
    IMPROVABLE = "IMPROVABLE"
    BOUNDARY_CASE = "BOUNDARY_CASE"


@dataclass
class AdmissibilityResult:
    status: Admissibility
    index: float
    improvable: bool
    improvement: Optional[ImprovementResult] = None

    def to_json(self) -> dict:
        out = {"status": self.status.value, "index": self.index, "improvable": self.improvable}
        if self.improvement is not None:
            out["improvement"] = self.improvement.to_json()
        return out


def is_admissible_candidate(design: Design, model: ModelSpec, cheb: Optional[ChebReport] = None,
                            grid_n: int = DEFAULT_GRID) -> AdmissibilityResult:
    """Classify by the index; at index k/2 the improvement itself decides."""
    if cheb is None:
        cheb = check_chebyshev(model.psi, model.domain)
    if not cheb.verdict.definite:
        raise ValueError(f"admissibility needs a definite Chebyshev verdict, got {cheb.verdict.value}")
    k = model.k
    idx = index(design, model.domain)
    if idx < k / 2:
        return AdmissibilityResult(Admissibility.PROVEN_UNIMPROVABLE, idx, False)
    res = improve_design(design, model, None, cheb, grid_n)
    improvable = res.case_tag is not CaseTag.ALREADY_ADMISSIBLE
    status = Admissibility.IMPROVABLE if idx > k / 2 else Admissibility.BOUNDARY_CASE
    return AdmissibilityResult(status, idx, improvable, res)
