"""Chebyshev-system verification.

Two independent routes decide whether ``{Psi_0, ..., Psi_{k-1}}`` and
``{Psi_0, ..., +-Psi_k}`` are Chebyshev systems on ``[A, B]``:

* sampled generalized Vandermonde determinants over increasing point tuples;
* the Wronskian chain ``w_0 = u_0, w_{j+1} = D_j ... D_0 u_{j+1}`` with
  ``D_j f = (f / w_j)'``, whose product ``w_0 ... w_k`` carries the sign of
  the full Wronskian divided by the one of the k-function subsystem.

Yang's triangle array is implemented separately as a cross-check of the chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import IntervalDomain, PsiSystem


class Verdict(str, enum.Enum):
    CHEB_PLUS = "CHEB_PLUS"
    CHEB_MINUS = "CHEB_MINUS"
    INDETERMINATE = "INDETERMINATE"
    FAIL = "FAIL"

    @property
    def definite(self) -> bool:
        return self in (Verdict.CHEB_PLUS, Verdict.CHEB_MINUS)

    @property
    def sign(self) -> int:
        """+1 / -1 for definite verdicts, 0 otherwise."""
        return {Verdict.CHEB_PLUS: 1, Verdict.CHEB_MINUS: -1}.get(self, 0)


class Method(str, enum.Enum):
    DETERMINANT = "DETERMINANT"
    WRONSKIAN = "WRONSKIAN"
    BOTH = "BOTH"


@dataclass
class ChebReport:
    verdict: Verdict
    method: Method
    witness: Optional[dict] = None
    min_abs_determinant: float = float("nan")
    samples_checked: int = 0
    notes: list = field(default_factory=list)
    derivatives: Optional[str] = None

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict.value,
            "method": self.method.value,
            "witness": self.witness,
            "min_abs_det": self.min_abs_determinant,
            "samples": self.samples_checked,
        }
        if self.notes:
            out["notes"] = list(self.notes)
        if self.derivatives:
            out["derivatives"] = self.derivatives
        return out


class ChainBreakdown(ArithmeticError):
    """A chain function w_j vanished where it must be divided by."""

    def __init__(self, level: int, x: float):
        super().__init__(f"w_{level} vanishes at x={x!r}; D_{level} is undefined there")
        self.level = level
        self.x = x


@dataclass(frozen=True)
class SamplerConfig:
    """Tuple sampling for the determinant route.

    Deterministic tuples are arithmetic progressions on a ``grid_points``
    grid (every admissible spacing and offset); random tuples are increasing
    uniform tuples whose consecutive gaps are at least
    ``min_gap_frac * (B - A) / n_points``.  Near-coalescent tuples are left
    to the Wronskian route, where the determinant is a derivative limit.
    """

    n_random: int = 2000
    grid_points: int = 201
    seed: int = 0
    tol_det: float = 1e-10
    min_gap_frac: float = 0.25


# -- determinants --------------------------------------------------------------


def cheb_determinant(functions: Sequence, points) -> float:
    """det [u_i(x_j)] for increasing ``points``."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or x.size != len(functions):
        raise ValueError("need exactly one point per function")
    if np.any(np.diff(x) <= 0):
        raise ValueError("points must be strictly increasing")
    U = np.array([np.broadcast_to(np.asarray(f(x), dtype=float), x.shape) for f in functions])
    if not np.all(np.isfinite(U)):
        i, j = np.argwhere(~np.isfinite(U))[0]
        raise ValueError(f"function {i} is not finite at x={x[j]!r}")
    return float(np.linalg.det(U))


def _tuples(domain: IntervalDomain, n: int, cfg: SamplerConfig, rng) -> np.ndarray:
    if n == 1:
        grid = domain.grid(cfg.grid_points)
        return grid[:, None]
    gap = cfg.min_gap_frac * domain.width / n
    G = cfg.grid_points
    grid = domain.grid(G)
    h = domain.width / (G - 1)
    s_min = max(1, int(np.ceil(gap / h - 1e-12)))
    s_max = (G - 1) // (n - 1)
    det = []
    base = np.arange(n)
    for s in range(s_min, s_max + 1):
        offsets = np.arange(G - s * (n - 1))
        det.append(grid[offsets[:, None] + s * base])
    slack = domain.width - (n - 1) * gap
    y = np.sort(rng.uniform(0.0, slack, size=(cfg.n_random, n)), axis=1)
    rand = domain.A + y + gap * base
    rand[:, -1] = np.minimum(rand[:, -1], domain.B)
    return np.concatenate(det + [rand], axis=0)


def _tuple_determinants(functions, tuples: np.ndarray):
    """Signed determinants after positive row/column equilibration.

    Positive diagonal scalings leave the sign unchanged; the scaled matrix
    also gives a scale-free reliability measure sigma_min / sigma_max.
    """
    U = np.stack([np.broadcast_to(np.asarray(f(tuples), dtype=float), tuples.shape) for f in functions], axis=1)
    if not np.all(np.isfinite(U)):
        t, i, j = np.argwhere(~np.isfinite(U))[0]
        raise ValueError(f"function {i} is not finite at x={tuples[t, j]!r}")
    for _ in range(2):
        r = np.linalg.norm(U, axis=2, keepdims=True)
        U = U / np.where(r > 0, r, 1.0)
        c = np.linalg.norm(U, axis=1, keepdims=True)
        U = U / np.where(c > 0, c, 1.0)
    det = np.linalg.det(U)
    sv = np.linalg.svd(U, compute_uv=False)
    rel = sv[:, -1] / np.where(sv[:, 0] > 0, sv[:, 0], 1.0)
    return det, rel


def _sign_scan(functions, tuples, tol):
    det, rel = _tuple_determinants(functions, tuples)
    resolved = rel > tol
    pos = resolved & (det > 0)
    neg = resolved & (det < 0)
    return det, rel, resolved, pos, neg


def _witness(tuples, det, rel, mask, system, reason):
    idx = np.flatnonzero(mask)
    best = idx[np.argmax(rel[idx])]
    return {"points": [float(v) for v in tuples[best]], "determinant": float(det[best]),
            "system": system, "reason": reason}


def check_chebyshev_determinant(psi: PsiSystem, domain: IntervalDomain,
                                config: Optional[SamplerConfig] = None) -> ChebReport:
    """Sampled sign test of (cheb+) / (cheb-) via generalized Vandermonde determinants."""
    cfg = config or SamplerConfig()
    k = psi.k
    if k < 1:
        raise ValueError("need k >= 1")
    rng = np.random.default_rng(cfg.seed)
    funcs = psi.all_functions()
    sub_t = _tuples(domain, k, cfg, rng)
    full_t = _tuples(domain, k + 1, cfg, rng)
    n_samples = len(sub_t) + len(full_t)

    sdet, srel, sres, spos, sneg = _sign_scan(funcs[:k], sub_t, cfg.tol_det)
    fdet, frel, fres, fpos, fneg = _sign_scan(funcs, full_t, cfg.tol_det)
    min_abs = float(min(np.min(np.abs(sdet)), np.min(np.abs(fdet))))
    report = ChebReport(Verdict.INDETERMINATE, Method.DETERMINANT, None, min_abs, n_samples)

    if np.any(sneg):
        report.verdict = Verdict.FAIL
        report.witness = _witness(sub_t, sdet, srel, sneg, "k-function subsystem",
                                  "non-positive determinant of Psi_0..Psi_{k-1}")
        return report
    if np.any(fpos) and np.any(fneg):
        minority = fneg if fneg.sum() <= fpos.sum() else fpos
        report.verdict = Verdict.FAIL
        report.witness = _witness(full_t, fdet, frel, minority, "full system",
                                  "determinant signs of Psi_0..Psi_k are mixed")
        return report
    unresolved = int((~sres).sum() + (~fres).sum())
    if unresolved:
        report.notes.append(f"{unresolved} tuples below reliability {cfg.tol_det:g}")
        return report
    report.verdict = Verdict.CHEB_PLUS if np.all(fpos) else Verdict.CHEB_MINUS
    return report


# -- Wronskian chain -----------------------------------------------------------


def _vanishes(v: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(v[np.isfinite(v)]), initial=0.0)
    return ~np.isfinite(v) | (np.abs(v) <= 1e-13 * max(scale, 1e-300))


class WronskianChain:
    """Evaluators for w_0..w_k and F = w_0 w_1 ... w_k."""

    def __init__(self, psi: PsiSystem, domain: IntervalDomain):
        self.psi = psi
        self.domain = domain

    @property
    def k(self) -> int:
        return self.psi.k

    def w(self, x) -> np.ndarray:
        """Array of shape (k+1, *x.shape) with w_0..w_k at ``x``."""
        x = np.asarray(x, dtype=float)
        k = self.k
        g = self.psi.jets(x, k)
        out = np.empty((k + 1,) + x.shape)
        for j in range(k + 1):
            wj = g[j]
            out[j] = wj.value
            if j == k:
                break
            bad = _vanishes(wj.value)
            if np.any(bad):
                raise ChainBreakdown(j, float(np.atleast_1d(x)[np.flatnonzero(np.atleast_1d(bad))[0]]))
            for i in range(j + 1, k + 1):
                g[i] = (g[i] / wj).diff()
        return out

    def F(self, x) -> np.ndarray:
        return np.prod(self.w(x), axis=0)

    def wronskian(self, x, upto: Optional[int] = None) -> np.ndarray:
        """w_0^{j+1} w_1^j ... w_j for the system Psi_0..Psi_j (default j = k)."""
        j = self.k if upto is None else upto
        w = self.w(x)
        out = np.ones(w.shape[1:])
        for i in range(j + 1):
            out = out * w[i] ** (j + 1 - i)
        return out


def wronskian_chain(psi: PsiSystem, domain: IntervalDomain) -> WronskianChain:
    return WronskianChain(psi, domain)


def wronskian_determinant(psi: PsiSystem, x) -> np.ndarray:
    """det [Psi_i^(r)(x)], i, r = 0..k, computed directly from derivatives."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    D = psi.derivatives(x, psi.k)          # (k+1, k+1, n)
    return np.linalg.det(np.moveaxis(D, -1, 0))


def check_chebyshev_wronskian(psi: PsiSystem, domain: IntervalDomain, grid_n: int = 201,
                              tol_F: float = 1e-10) -> ChebReport:
    """Sign test of F = w_0 ... w_k on a grid.

    The k-function subsystem is required to have a positive Wronskian
    ``prod_{i<k} w_i^{k-i}``; then the sign of F orients Psi_k.
    """
    x = domain.grid(grid_n)
    chain = wronskian_chain(psi, domain)
    w = chain.w(x)
    k = psi.k
    F = np.prod(w, axis=0)
    sub_sign = np.prod(np.sign(w[:k]) ** (k - np.arange(k))[:, None], axis=0)
    deriv = "analytic" if psi.analytic else "finite-difference O(h^2)"
    report = ChebReport(Verdict.INDETERMINATE, Method.WRONSKIAN, None,
                        float(np.min(np.abs(F))), grid_n, derivatives=deriv)

    if np.any(sub_sign < 0):
        i = int(np.flatnonzero(sub_sign < 0)[0])
        report.verdict = Verdict.FAIL
        report.witness = {"point": float(x[i]), "w": [float(v) for v in w[:, i]],
                          "reason": "Wronskian of Psi_0..Psi_{k-1} is negative"}
        return report
    scale = np.max(np.abs(F))
    small = np.abs(F) <= tol_F * scale
    s = np.sign(F) * ~small
    change = np.flatnonzero((s[:-1] * s[1:]) < 0)
    if np.any(s > 0) and np.any(s < 0):
        if change.size:
            i = int(change[0])
            bracket = [float(x[i]), float(x[i + 1])]
        else:
            ip, ineg = int(np.flatnonzero(s > 0)[0]), int(np.flatnonzero(s < 0)[0])
            bracket = sorted([float(x[ip]), float(x[ineg])])
        report.verdict = Verdict.FAIL
        report.witness = {"bracket": bracket, "reason": "F = w_0...w_k changes sign"}
        return report
    if np.any(small):
        report.notes.append(f"|F| below {tol_F:g} relative at x={float(x[np.flatnonzero(small)[0]])!r}")
        return report
    report.verdict = Verdict.CHEB_PLUS if F[0] > 0 else Verdict.CHEB_MINUS
    return report


def merge_reports(det: ChebReport, wron: ChebReport) -> ChebReport:
    """Combine both routes; a FAIL from either wins, contradictions are FAIL."""
    notes = [f"determinant: {det.verdict.value}", f"wronskian: {wron.verdict.value}"]
    notes += det.notes + wron.notes
    base = dict(method=Method.BOTH, min_abs_determinant=det.min_abs_determinant,
                samples_checked=det.samples_checked + wron.samples_checked,
                derivatives=wron.derivatives)
    if det.verdict is Verdict.FAIL or wron.verdict is Verdict.FAIL:
        src = det if det.verdict is Verdict.FAIL else wron
        return ChebReport(Verdict.FAIL, witness=src.witness, notes=notes, **base)
    if det.verdict.definite and wron.verdict.definite and det.verdict is not wron.verdict:
        notes.append("determinant and Wronskian orientations contradict")
        return ChebReport(Verdict.FAIL, witness=None, notes=notes, **base)
    for r in (det, wron):
        if r.verdict.definite:
            return ChebReport(r.verdict, witness=None, notes=notes, **base)
    return ChebReport(Verdict.INDETERMINATE, witness=None, notes=notes, **base)


def check_chebyshev(psi: PsiSystem, domain: IntervalDomain, config: Optional[SamplerConfig] = None,
                    grid_n: int = 201) -> ChebReport:
    """Both routes; a chain breakdown or failed derivative makes the Wronskian route indeterminate."""
    det = check_chebyshev_determinant(psi, domain, config)
    try:
        wron = check_chebyshev_wronskian(psi, domain, grid_n)
    except ChainBreakdown as exc:
        wron = ChebReport(Verdict.INDETERMINATE, Method.WRONSKIAN, None, float("nan"), 0, [str(exc)])
    except ValueError as exc:
        # derivatives unavailable (e.g. a non-smooth system); values were fine on the
        # determinant route, so only the Wronskian route gives up
        wron = ChebReport(Verdict.INDETERMINATE, Method.WRONSKIAN, None, float("nan"), 0,
                          [f"derivatives unavailable: {exc}"])
    return merge_reports(det, wron)


# -- Yang's triangle -----------------------------------------------------------


class YangTriangle:
    """Triangle f_{l,1} = Psi_l', f_{l,t} = (f_{l,t-1} / f_{t-1,t-1})'."""

    def __init__(self, psi: PsiSystem, domain: IntervalDomain):
        self.psi = psi
        self.domain = domain

    def table(self, x) -> dict:
        """All entries {(l, t): values}, 1 <= t <= l <= k."""
        x = np.asarray(x, dtype=float)
        k = self.psi.k
        jets = self.psi.jets(x, k)[1:]
        col = {l: jets[l - 1].diff() for l in range(1, k + 1)}
        out = {(l, 1): col[l].value for l in range(1, k + 1)}
        for t in range(2, k + 1):
            pivot = col[t - 1]
            bad = _vanishes(pivot.value)
            if np.any(bad):
                raise ChainBreakdown(t - 1, float(np.atleast_1d(x)[np.flatnonzero(np.atleast_1d(bad))[0]]))
            col = {l: (col[l] / pivot).diff() for l in range(t, k + 1)}
            out.update({(l, t): col[l].value for l in range(t, k + 1)})
        return out

    def __call__(self, x) -> np.ndarray:
        """Diagonal f_{1,1}..f_{k,k}, shape (k, *x.shape)."""
        tab = self.table(x)
        return np.array([tab[(t, t)] for t in range(1, self.psi.k + 1)])


def yang_triangle(psi: PsiSystem, domain: IntervalDomain) -> YangTriangle:
    return YangTriangle(psi, domain)
