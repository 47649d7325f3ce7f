"""Information matrices, Loewner comparison and information functions."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Design, moment_vector
from .models import ModelError, ModelSpec

PSD_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class InfoMatrix:
    entries: np.ndarray
    theta: tuple = ()

    def __post_init__(self):
        M = np.array(self.entries, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("information matrix must be square")
        M = 0.5 * (M + M.T)
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        return {"matrix": self.entries.tolist(), "theta": [float(t) for t in self.theta]}


def c_matrix(design: Design, model: ModelSpec) -> np.ndarray:
    """C_ij = int Psi_{layout[i, j]} d design, with Psi_0 = 1."""
    if model.layout is None:
        raise ModelError(f"model {model.name!r} has no C-matrix layout")
    design.check_domain(model.domain)
    d = moment_vector(design, model.psi).as_array()
    return d[model.layout]


def info_matrix(design: Design, model: ModelSpec) -> InfoMatrix:
    C = c_matrix(design, model)
    return InfoMatrix(model.P @ C @ model.P.T, model.theta)


class Loewner(str, enum.Enum):
    GEQ = "GEQ"
    LEQ = "LEQ"
    EQUAL = "EQUAL"
    INDEFINITE = "INDEFINITE"


def _entries(M) -> np.ndarray:
    return np.asarray(getattr(M, "entries", M), dtype=float)


def difference_eigenvalues(M1, M2) -> np.ndarray:
    """Eigenvalues of M2 - M1 (ascending)."""
    a, b = _entries(M1), _entries(M2)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    D = b - a
    return np.linalg.eigvalsh(0.5 * (D + D.T))


def loewner_compare(M1, M2, rel_tol: float = PSD_REL_TOL) -> Loewner:
    """Classify M2 - M1: PSD -> GEQ, NSD -> LEQ, both -> EQUAL, neither -> INDEFINITE."""
    ev = difference_eigenvalues(M1, M2)
    scale = max(np.linalg.norm(_entries(M1), 2), np.linalg.norm(_entries(M2), 2), np.finfo(float).tiny)
    tol = rel_tol * scale
    geq = ev[0] >= -tol
    leq = ev[-1] <= tol
    if geq and leq:
        return Loewner.EQUAL
    if geq:
        return Loewner.GEQ
    if leq:
        return Loewner.LEQ
    return Loewner.INDEFINITE


def criterion(M, which: str = "D") -> float:
    """D: det(M)^(1/p); A: (trace(M^-1)/p)^(-1).  Singular M gives 0."""
    a = _entries(M)
    p = a.shape[0]
    ev = np.linalg.eigvalsh(0.5 * (a + a.T))
    if ev[0] <= 1e-14 * max(ev[-1], np.finfo(float).tiny):
        return 0.0
    which = which.upper()
    if which == "D":
        return float(np.exp(np.mean(np.log(ev))))
    if which == "A":
        return float(p / np.sum(1.0 / ev))
    raise ValueError(f"unknown criterion {which!r}")
