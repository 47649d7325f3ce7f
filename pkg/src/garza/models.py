"""Model catalog: Psi systems, C-matrix layouts and P(theta) factors.

Every catalog model writes its Psi functions numpy-style so that they also
run on :class:`~garza.taylor.Jet` inputs; derivatives are therefore exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import taylor
from .core import IntervalDomain, PsiSystem


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Information-matrix structure ``M = P C P^T`` with ``C_ij = int Psi_{layout[i,j]}``.

    ``layout`` holds Psi indices, 0 standing for the constant function.
    ``layout`` may be ``None`` for bare function systems (no C-matrix).
    """

    name: str
    psi: PsiSystem
    domain: IntervalDomain
    layout: Optional[np.ndarray] = None
    P: Optional[np.ndarray] = None
    theta: tuple = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.layout is None:
            return
        L = np.asarray(self.layout, dtype=int)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ModelError("layout must be a square matrix")
        if not np.array_equal(L, L.T):
            raise ModelError("layout must be symmetric")
        k = self.psi.k
        if L.min() < 0 or L.max() > k:
            raise ModelError(f"layout indices must lie in 0..{k}")
        hits = np.argwhere(L == k)
        if len(hits) != 1 or hits[0][0] != hits[0][1]:
            raise ModelError(f"Psi_{k} must appear exactly once, on the diagonal")
        missing = set(range(1, k + 1)) - set(np.unique(L).tolist())
        if missing:
            raise ModelError(f"layout never uses Psi indices {sorted(missing)}")
        P = np.eye(L.shape[0]) if self.P is None else np.asarray(self.P, dtype=float)
        if P.shape != L.shape:
            raise ModelError("P must match the layout shape")
        if not np.isfinite(np.linalg.cond(P)) or np.linalg.cond(P) > 1e14:
            raise ModelError("P(theta) is singular")
        L.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "layout", L)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "psi", PsiSystem(self.psi.functions, self.psi.names, self.psi.analytic,
                                                  self.psi.psi0, int(hits[0][0])))

    @property
    def p(self) -> int:
        if self.layout is None:
            raise ModelError(f"model {self.name!r} has no C-matrix layout")
        return self.layout.shape[0]

    @property
    def k(self) -> int:
        return self.psi.k

    @property
    def diag(self) -> int:
        """Row/column l with C[l, l] = d_k (0-based)."""
        return int(np.argwhere(self.layout == self.k)[0][0])


def _hankel_layout(p: int, offset: int) -> np.ndarray:
    i = np.arange(p)
    return i[:, None] + i[None, :] + offset


def polynomial_model(degree: int, domain: IntervalDomain) -> ModelSpec:
    """(p-1)th-degree polynomial regression: Psi_j = x^j, j = 1..2p-2."""
    p = degree + 1
    if p < 2:
        raise ModelError("polynomial model needs degree >= 1")
    k = 2 * p - 2
    psi = PsiSystem(tuple((lambda x, j=j: x**j) for j in range(1, k + 1)),
                    tuple(f"x^{j}" for j in range(1, k + 1)))
    return ModelSpec(f"polynomial(degree={degree})", psi, domain, _hankel_layout(p, 0),
                     np.eye(p), (), {"family": "polynomial", "degree": degree})


# -- weighted polynomial regression -----------------------------------------------


class EfficiencyKind(str, enum.Enum):
    EXP_X2 = "EXP_X2"
    JACOBI = "JACOBI"
    INVERSE_POWER = "INVERSE_POWER"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class Efficiency:
    """Efficiency function lambda with its companion g."""

    kind: EfficiencyKind
    lam: Callable
    g: Callable
    params: dict = field(default_factory=dict)


def exp_x2() -> Efficiency:
    return Efficiency(EfficiencyKind.EXP_X2, lambda x: np.exp(x**2), lambda x: np.exp(x**2))


def jacobi(alpha: float, beta: float) -> Efficiency:
    """lambda = (1-x)^(alpha+1) (1+x)^(beta+1), g = (1-x)^alpha (1+x)^beta."""
    if alpha <= -1 or beta <= -1:
        raise ModelError("Jacobi efficiency needs alpha, beta > -1")
    return Efficiency(EfficiencyKind.JACOBI,
                      lambda x: (1 - x) ** (alpha + 1) * (1 + x) ** (beta + 1),
                      lambda x: (1 - x) ** alpha * (1 + x) ** beta,
                      {"alpha": alpha, "beta": beta})


def inverse_power(n: float) -> Efficiency:
    """lambda = (1+x)^(-n), g = (1+x)^(-(n+2))."""
    return Efficiency(EfficiencyKind.INVERSE_POWER, lambda x: (1 + x) ** (-n),
                      lambda x: (1 + x) ** (-(n + 2)), {"n": n})


def custom_efficiency(lam: Callable, g: Callable, **params) -> Efficiency:
    return Efficiency(EfficiencyKind.CUSTOM, lam, g, params)


def weighted_polynomial_model(p: int, efficiency: Efficiency, domain: IntervalDomain) -> ModelSpec:
    """Psi_j = lambda(x) x^(j-1), j = 1..2p-1; C = int lambda h h^T."""
    if p < 2:
        raise ModelError("weighted polynomial model needs p >= 2")
    kind = efficiency.kind
    if kind is EfficiencyKind.INVERSE_POWER:
        n = efficiency.params["n"]
        if not (domain.A > -1 and n > 2 * p - 2):
            raise ModelError(f"inverse-power efficiency needs A > -1 and n > {2 * p - 2}")
    if kind is EfficiencyKind.JACOBI and (domain.A < -1 or domain.B > 1):
        raise ModelError("Jacobi efficiency lives on a subinterval of [-1, 1]")
    interior = np.linspace(domain.A, domain.B, 203)[1:-1]
    if np.any(~(efficiency.lam(interior) > 0)):
        raise ModelError("efficiency function must be positive on the interior")
    lam = efficiency.lam
    k = 2 * p - 1
    psi = PsiSystem(tuple((lambda x, j=j: lam(x) * x ** (j - 1)) for j in range(1, k + 1)),
                    tuple(f"lam*x^{j - 1}" for j in range(1, k + 1)))
    return ModelSpec(f"weighted_polynomial(p={p}, {kind.value})", psi, domain, _hankel_layout(p, 1),
                     np.eye(p), (), {"family": "weighted", "p": p, "efficiency": efficiency})


class GarzConditionError(ValueError):
    pass


@dataclass
class GarzResult:
    constants: list
    max_deviation: float


def verify_garz_condition(model: ModelSpec, grid_n: int = 101, tol: float = 1e-6) -> GarzResult:
    """Check that (d/dx)^j ((lambda x^(j-1))' / g) is a nonzero constant c_j.

    Evaluated on ``grid_n`` interior points for j = 1..2p-1.  The deviation
    is relative to |c_j|; anything above ``tol`` raises.
    """
    eff = model.extra.get("efficiency")
    if eff is None:
        raise ModelError("not a weighted polynomial model")
    p = model.extra["p"]
    x = np.linspace(model.domain.A, model.domain.B, grid_n + 2)[1:-1]
    g = taylor.taylor(eff.g, x, 2 * p)
    if np.any(g.value <= 0):
        raise GarzConditionError("g must be positive on the design interval")
    consts, dev = [], 0.0
    for j in range(1, 2 * p):
        f = taylor.taylor(lambda t: eff.lam(t) * t ** (j - 1), x, j + 1).diff()
        h = (f / g.truncate(j)).derivatives()[j]
        c = float(np.mean(h))
        spread = float(np.max(np.abs(h - c)))
        if float(np.max(np.abs(h))) == 0.0:
            raise GarzConditionError(f"c_{j} vanishes identically")
        rel = spread / abs(c) if c != 0 else np.inf
        if rel > tol:
            raise GarzConditionError(f"j={j}: expression is not constant "
                                     f"(spread {spread:.3g} around mean {c:.3g})")
        consts.append(c)
        dev = max(dev, rel)
    return GarzResult(consts, dev)


class Antiderivative:
    """x -> int_a^x g(t) dt, usable on arrays and on jets."""

    def __init__(self, g: Callable, a: float):
        self.g = g
        self.a = a

    def _value(self, x):
        x = np.asarray(x, dtype=float)
        flat = [integrate.quad(lambda t: float(self.g(t)), self.a, xi, epsabs=1e-14, epsrel=1e-13)[0]
                for xi in x.reshape(-1)]
        return np.array(flat).reshape(x.shape)

    def __call__(self, x):
        if not isinstance(x, taylor.Jet):
            return self._value(x)
        gj = self.g(x.truncate(x.order - 1)) if x.order else None
        c = np.zeros_like(x.c)
        c[0] = self._value(x.value)
        for r in range(1, x.order + 1):
            c[r] = gj.c[r - 1] / r
        return taylor.Jet(c)


def garz_system(model: ModelSpec) -> PsiSystem:
    """Augmented system {int g, Psi_1, ..., Psi_{2p-1}} used with the Wronskian route."""
    eff = model.extra.get("efficiency")
    if eff is None:
        raise ModelError("not a weighted polynomial model")
    G = Antiderivative(eff.g, model.domain.A)
    return PsiSystem((G,) + model.psi.functions, ("int g",) + model.psi.names)


# -- rational models -----------------------------------------------------------------


def q_from_roots(roots) -> np.ndarray:
    """Coefficients (ascending) of prod (1 - x / r), i.e. Q normalized to Q(0) = 1."""
    roots = np.asarray(roots, dtype=float)
    if np.any(roots == 0):
        raise ModelError("a root at 0 is incompatible with Q(0) = 1")
    c = np.polynomial.polynomial.polyfromroots(roots)
    return c / c[0]


def _polyval(coeffs, x):
    out = 0.0 * x
    for c in coeffs[::-1]:
        out = out * x + c
    return out


def rational_model(l: int, s: int, theta, domain: IntervalDomain) -> ModelSpec:
    """eta = (theta_1 + ... + theta_l x^(l-1)) / (1 + theta_{l+1} x + ... + theta_{l+s} x^s).

    Psi_j = x^(j-1) / Q^4, j = 1..2p-1 with p = l + s; P is the gradient
    factor B(theta) with d eta / d theta = B h(x) / Q^2.
    """
    theta = np.asarray(theta, dtype=float)
    if l < 1 or s < 1:
        raise ModelError("need l >= 1 and s >= 1")
    if theta.size != l + s:
        raise ModelError(f"theta needs {l + s} entries")
    num = theta[:l]
    den = np.concatenate([[1.0], theta[l:]])
    if den[-1] == 0:
        raise ModelError("denominator degree is lower than s")
    _check_q_nonvanishing(den, domain)
    p = l + s
    k = 2 * p - 1

    def q4(x, den=den):
        return _polyval(den, x) ** 4

    psi = PsiSystem(tuple((lambda x, j=j: x ** (j - 1) / q4(x)) for j in range(1, k + 1)),
                    tuple(f"x^{j - 1}/Q^4" for j in range(1, k + 1)))
    B = np.zeros((p, p))
    for i in range(l):
        B[i, i : i + s + 1] = den
    for j in range(1, s + 1):
        B[l + j - 1, j : j + l] = -num
    return ModelSpec(f"rational(l={l}, s={s})", psi, domain, _hankel_layout(p, 1), B, tuple(theta),
                     {"family": "rational", "l": l, "s": s, "numerator": num, "denominator": den})


def _check_q_nonvanishing(den, domain: IntervalDomain):
    roots = np.polynomial.polynomial.polyroots(den)
    real = roots[np.abs(roots.imag) <= 1e-7 * np.maximum(1.0, np.abs(roots))].real
    if np.any((real >= domain.A) & (real <= domain.B)):
        raise ModelError(f"Q has a root in [{domain.A}, {domain.B}]")
    x = domain.grid(2001)
    q = _polyval(den, x)
    if np.any(q == 0) or np.ptp(np.sign(q)) > 0:
        raise ModelError("Q changes sign on the design interval")


def rational_eta(model: ModelSpec, x, theta=None):
    theta = np.asarray(model.theta if theta is None else theta, dtype=float)
    l = model.extra["l"]
    return _polyval(theta[:l], x) / _polyval(np.concatenate([[1.0], theta[l:]]), x)


def rational_gradient(model: ModelSpec, x) -> np.ndarray:
    """Analytic d eta / d theta at points ``x``, shape (p, n)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    l, num, den = model.extra["l"], model.extra["numerator"], model.extra["denominator"]
    Q = _polyval(den, x)
    P = _polyval(num, x)
    rows = [x**i / Q for i in range(l)] + [-P * x**j / Q**2 for j in range(1, model.extra["s"] + 1)]
    return np.array(rows)


def cleared_system(model: ModelSpec) -> PsiSystem:
    """{1, x, ..., x^(2p-2), Q^4}: the rational Psi system multiplied by Q^4 and reordered.

    Its orientation is opposite to that of the Psi system itself
    (moving Q^4 from first to last place is an odd permutation).
    """
    if model.extra.get("family") != "rational":
        raise ModelError("not a rational model")
    den = model.extra["denominator"]
    p = model.extra["l"] + model.extra["s"]
    funcs = tuple((lambda x, j=j: x**j) for j in range(1, 2 * p - 1))
    return PsiSystem(funcs + (lambda x: _polyval(den, x) ** 4,),
                     tuple(f"x^{j}" for j in range(1, 2 * p - 1)) + ("Q^4",))


class LemmaPrediction(str, enum.Enum):
    CHEB_PLUS_EXPECTED = "CHEB_PLUS_EXPECTED"
    CHEB_MINUS_EXPECTED = "CHEB_MINUS_EXPECTED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


ROOT_TOL = 1e-9


def check_lemma_4_1(model: ModelSpec) -> LemmaPrediction:
    """Predicted orientation of :func:`cleared_system` from the roots of Q.

    All roots real and below A (with s > l - 1) gives +1, all above B gives
    -1.  Real-rootedness is decided by rebuilding Q from the real parts of
    its computed roots, which tolerates the perturbation of multiple roots.
    """
    if model.extra.get("family") != "rational":
        raise ModelError("not a rational model")
    l, s, den = model.extra["l"], model.extra["s"], model.extra["denominator"]
    if not s > l - 1:
        return LemmaPrediction.NOT_APPLICABLE
    roots = np.polynomial.polynomial.polyroots(den)
    if not np.all(np.isfinite(roots)):
        raise ModelError("root finding failed for Q")
    rebuilt = np.polynomial.polynomial.polyfromroots(roots.real) * den[-1]
    if np.max(np.abs(rebuilt - den)) > 1e-9 * np.max(np.abs(den)):
        return LemmaPrediction.NOT_APPLICABLE
    r = roots.real
    A, B = model.domain.A, model.domain.B
    if np.all(r < A - ROOT_TOL):
        return LemmaPrediction.CHEB_PLUS_EXPECTED
    if np.all(r > B + ROOT_TOL):
        return LemmaPrediction.CHEB_MINUS_EXPECTED
    return LemmaPrediction.NOT_APPLICABLE


CATALOG = {
    "polynomial": "params: degree (p-1 >= 1); Psi_j = x^j, k = 2p-2, P = I",
    "weighted": "params: p, efficiency in {exp_x2, jacobi(alpha, beta), inverse_power(n)}; "
                "Psi_j = lambda x^(j-1), k = 2p-1",
    "rational": "params: l, s, numerator (l coeffs), denominator (s coeffs after the leading 1) "
                "or denominator_roots; Psi_j = x^(j-1)/Q^4, k = 2p-1, P = B(theta)",
    "expression": "params: psi (list of expressions in x), optional layout (Psi indices, 0 = constant)",
}
