"""SOS / moment relaxations for Weyl polynomials.

The order-k relaxation of ``min <phi|pi(p)|phi>`` is posed to the SDP solver
in standard form with the Gram matrix of ``p - lambda`` as primal variable;
the dual variables are the moments ``y_{s,t} = L((a*)^s a^t)`` and the dual
slack is the moment matrix ``M_k(y)`` itself.  Both optimal values are
reported: ``sos_bound`` (Gram side) and ``lower_bound`` (moment side).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import sdp
from .scalars import to_scalar
from .weyl import NormalIndex, WeylPolynomial, _block_terms, degree, l1_norm, term_order_key

__all__ = [
    "MonomialBasis",
    "MomentTemplate",
    "RelaxationResult",
    "Perturbation",
    "PerturbationResult",
    "SosCertificate",
    "RelaxationError",
    "SolverFailure",
    "SosInfeasibleError",
    "count_monomials",
    "monomial_basis",
    "build_moment_template",
    "make_g",
    "perturbation_polynomial",
    "lower_bound",
    "sos_certify",
    "min_perturbation",
    "omega_moments",
    "gram_polynomial",
    "MAX_BASIS",
]

MAX_BASIS = 400


class RelaxationError(ValueError):
    pass


class SolverFailure(RuntimeError):
    """The SDP solver did not reach an optimal point."""

    def __init__(self, message: str, solution: sdp.SdpSolution | None = None):
        super().__init__(message)
        self.solution = solution


class SosInfeasibleError(RelaxationError):
    """No SOS certificate exists at the requested order."""

    def __init__(self, message: str, margin: float | None = None):
        super().__init__(message)
        self.margin = margin


# ---------------------------------------------------------------------------
# combinatorics and bases
# ---------------------------------------------------------------------------


def count_monomials(n: int, k: int) -> int:
    """Number of exponent vectors in N^n with entries summing to exactly k."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    return math.factorial(n + k - 1) // (math.factorial(n - 1) * math.factorial(k))


def _exponents(n: int, total: int):
    """All vectors in N^n with sum exactly ``total``."""
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _exponents(n - 1, total - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def monomial_basis(n: int, k: int) -> tuple[NormalIndex, ...]:
    """Normal-ordered monomials ``(a*)^s a^t`` with ``|s| + |t| <= k`` in graded-lex order."""
    out = []
    for d in range(k + 1):
        for e in _exponents(2 * n, d):
            out.append(NormalIndex(e[:n], e[n:]))
    return tuple(sorted(out, key=term_order_key))


@dataclass(frozen=True)
class MonomialBasis:
    n_modes: int
    order: int
    entries: tuple[NormalIndex, ...]

    @classmethod
    def of(cls, n: int, k: int) -> "MonomialBasis":
        return cls(n, k, monomial_basis(n, k))

    def __len__(self) -> int:
        return len(self.entries)

    def index(self, key: NormalIndex) -> int:
        return self.entries.index(key)

    def polynomials(self) -> list[WeylPolynomial]:
        return [WeylPolynomial(self.n_modes, {e: 1}) for e in self.entries]


@dataclass(frozen=True)
class MomentTemplate:
    """Symbolic moment matrix: entry (i, j) = normal form of ``w_i^* w_j`` as moment-variable weights."""

    basis: MonomialBasis
    variables: tuple[NormalIndex, ...]
    entries: Mapping[tuple[int, int], tuple[tuple[int, int], ...]]

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def var_index(self) -> dict[NormalIndex, int]:
        return {v: i for i, v in enumerate(self.variables)}

    @property
    def identity_var(self) -> int:
        z = (0,) * self.basis.n_modes
        return self.var_index[NormalIndex(z, z)]

    def entry(self, row: int, col: int) -> dict[NormalIndex, int]:
        return {self.variables[v]: c for v, c in self.entries[(row, col)]}

    def evaluate(self, y: Mapping[NormalIndex, complex]) -> np.ndarray:
        """Numeric ``M_k(y)`` for moments given as a map (missing keys read as zero)."""
        N = self.size
        out = np.zeros((N, N), dtype=complex)
        for (i, j), terms in self.entries.items():
            out[i, j] = sum(c * y.get(self.variables[v], 0.0) for v, c in terms)
        return out


@lru_cache(maxsize=32)
def build_moment_template(n: int, k: int, max_basis: int = MAX_BASIS) -> MomentTemplate:
    """Moment template of order k over n modes (exact integer weights)."""
    if k < 0:
        raise ValueError("order must be non-negative")
    basis = MonomialBasis.of(n, k)
    if len(basis) > max_basis:
        raise RelaxationError(f"basis size {len(basis)} exceeds cap {max_basis}")
    variables = monomial_basis(n, 2 * k)
    vidx = {v: i for i, v in enumerate(variables)}
    entries = {}
    for i, (s, t) in enumerate(basis.entries):
        for j, (u, v) in enumerate(basis.entries):
            # ((a*)^s a^t)^* (a*)^u a^v = (a*)^t [a^s (a*)^u] a^v
            acc: dict[int, int] = {}
            for jv, coef in _block_terms(s, u):
                key = NormalIndex(
                    tuple(ti + ui - ji for ti, ui, ji in zip(t, u, jv)),
                    tuple(si - ji + vi for si, vi, ji in zip(s, v, jv)),
                )
                var = vidx[key]
                acc[var] = acc.get(var, 0) + coef
            entries[(i, j)] = tuple(sorted(acc.items()))
    return MomentTemplate(basis, variables, entries)


# ---------------------------------------------------------------------------
# perturbation polynomials
# ---------------------------------------------------------------------------


def _exact_or_float(c):
    if isinstance(c, float):
        return Fraction(repr(c))
    return c


def perturbation_polynomial(r: int, c, n: int = 1) -> WeylPolynomial:
    """``g^r_c = sum_{|t|<=r} (n-1)! / (c^|t| (n+|t|-1)!) a^t (a^t)^*``, for any ``c > 1``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    c = _exact_or_float(c)
    if c <= 1:
        raise ValueError("c must exceed 1")
    out = WeylPolynomial.zero(n)
    for d in range(r + 1):
        weight = Fraction(math.factorial(n - 1), math.factorial(n + d - 1)) / to_scalar(c) ** d
        for t in _exponents(n, d):
            # a^t (a^t)^* = a^t (a*)^t
            terms = {}
            for j, coef in _block_terms(t, t):
                key = (tuple(ti - ji for ti, ji in zip(t, j)), tuple(ti - ji for ti, ji in zip(t, j)))
                terms[key] = coef
            out = out + WeylPolynomial(n, terms).scale(weight)
    return out


def make_g(r: int, c, n: int = 1) -> WeylPolynomial:
    """The perturbation ``g^r_c`` in the regime ``c > 2`` where its l1 norm stays below ``c/(c-2)``."""
    if _exact_or_float(c) <= 2:
        raise ValueError("make_g requires c > 2")
    return perturbation_polynomial(r, c, n)


@dataclass(frozen=True)
class Perturbation:
    r: int
    c: object
    epsilon: float
    polynomial: WeylPolynomial

    @property
    def l1(self):
        return l1_norm(self.polynomial)

    @property
    def l1_bound(self) -> float:
        c = float(self.c)
        return self.epsilon * c / (c - 2)


# ---------------------------------------------------------------------------
# SDP assembly
# ---------------------------------------------------------------------------


def _canon(key: NormalIndex) -> NormalIndex:
    rev = NormalIndex(key.tbar, key.sbar)
    return key if term_order_key(key) <= term_order_key(rev) else rev


@dataclass
class _MomentMap:
    """Real unknowns of the moment side and their basis matrices."""

    template: MomentTemplate
    real: bool
    unknowns: list[tuple[str, NormalIndex]]
    H: list[np.ndarray]  # hermitian (complex) or real symmetric, one per unknown
    B0: np.ndarray

    @property
    def N(self) -> int:
        return self.template.size

    def embed(self, H: np.ndarray) -> np.ndarray:
        if self.real:
            return np.real(H).copy()
        return np.block([[H.real, -H.imag], [H.imag, H.real]])

    def objective(self, p: WeylPolynomial) -> tuple[float, np.ndarray]:
        """``L(p) = const + sum_v coef_v * unknown_v``."""
        pos = {u: i for i, u in enumerate(self.unknowns)}
        const = 0j
        coef = np.zeros(len(self.unknowns), dtype=complex)
        zero = NormalIndex((0,) * p.n_modes, (0,) * p.n_modes)
        for key, c in p.terms.items():
            c = complex(c)
            key = NormalIndex(*key)
            if key == zero:
                const += c
                continue
            cano = _canon(key)
            if ("re", cano) not in pos:
                raise RelaxationError(f"term {key} exceeds the relaxation order")
            coef[pos[("re", cano)]] += c
            if cano.sbar != cano.tbar:
                if self.real:
                    continue
                coef[pos[("im", cano)]] += 1j * c if key == cano else -1j * c
        return const.real, coef.real

    def moments(self, values: np.ndarray) -> dict[NormalIndex, complex]:
        out: dict[NormalIndex, complex] = {}
        for (kind, key), v in zip(self.unknowns, values):
            rev = NormalIndex(key.tbar, key.sbar)
            if kind == "re":
                out[key] = out.get(key, 0) + v
                if rev != key:
                    out[rev] = out.get(rev, 0) + v
            else:
                out[key] = out.get(key, 0) + 1j * v
                out[rev] = out.get(rev, 0) - 1j * v
        z = (0,) * self.template.basis.n_modes
        out[NormalIndex(z, z)] = 1.0
        return out

    def gram(self, X: np.ndarray) -> np.ndarray:
        """Coefficient matrix K with ``sum_ij K_ij w_i^* w_j`` equal to the certified polynomial."""
        if self.real:
            return 0.5 * (X + X.T)
        N = self.N
        X11, X12, X21, X22 = X[:N, :N], X[:N, N:], X[N:, :N], X[N:, N:]
        G = (X11 + X22) + 1j * (X21 - X12)
        K = G.T
        return 0.5 * (K + K.conj().T)


@lru_cache(maxsize=32)
def _moment_map(n: int, k: int, real: bool) -> _MomentMap:
    tpl = build_moment_template(n, k)
    z = (0,) * n
    zero = NormalIndex(z, z)
    unknowns: list[tuple[str, NormalIndex]] = []
    seen = set()
    for v in tpl.variables:
        cano = _canon(v)
        if cano == zero or cano in seen:
            continue
        seen.add(cano)
        unknowns.append(("re", cano))
        if not real and cano.sbar != cano.tbar:
            unknowns.append(("im", cano))
    pos = {u: i for i, u in enumerate(unknowns)}
    N = tpl.size
    dtype = float if real else complex
    H = np.zeros((len(unknowns), N, N), dtype=dtype)
    B0 = np.zeros((N, N), dtype=dtype)
    for (i, j), terms in tpl.entries.items():
        for v, c in terms:
            key = tpl.variables[v]
            if key == zero:
                B0[i, j] += c
                continue
            cano = _canon(key)
            H[pos[("re", cano)], i, j] += c
            if not real and cano.sbar != cano.tbar:
                H[pos[("im", cano)], i, j] += 1j * c if key == cano else -1j * c
    return _MomentMap(tpl, real, unknowns, list(H), B0)


def _relaxation_problem(mmap: _MomentMap, p: WeylPolynomial, lambda_star: float | None):
    const, obj = mmap.objective(p)
    C = [mmap.embed(mmap.B0)]
    A = [np.stack([-mmap.embed(h) for h in mmap.H])]
    dims = [C[0].shape[0]]
    if lambda_star is not None:
        if not lambda_star > 0:
            raise RelaxationError("lambda_star must be positive")
        # I - M/lambda_star >= 0: same set as lambda_star*I - M >= 0, unit-scaled data
        C.append(np.eye(dims[0]) - C[0] / lambda_star)
        A.append(-A[0] / lambda_star)
        dims.append(dims[0])
    return sdp.SdpProblem(dims, C, A, -obj), const


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class RelaxationResult:
    order: int
    lower_bound: float
    sos_bound: float
    status: str
    moment_values: dict[NormalIndex, complex] = field(repr=False)
    sos_gram: np.ndarray = field(repr=False)
    solver_report: sdp.SdpSolution = field(repr=False)
    problem: sdp.SdpProblem = field(repr=False)
    lambda_star: float | None = None
    wall_time: float = 0.0

    @property
    def gap(self) -> float:
        return self.lower_bound - self.sos_bound

    def to_record(self) -> dict:
        return {
            "order": self.order,
            "bound": self.lower_bound,
            "sos_bound": self.sos_bound,
            "gap": self.gap,
            "status": self.status,
            "lambdaStar": self.lambda_star,
            "iterations": self.solver_report.iterations,
            "wall_time": self.wall_time,
        }


def _check_hermitian(p: WeylPolynomial) -> None:
    if not p.is_hermitian(tol=1e-12 * max(1.0, float(l1_norm(p)))):
        raise RelaxationError("polynomial must be hermitian")


def lower_bound(
    p: WeylPolynomial,
    k: int,
    lambda_star: float | None = None,
    cfg: sdp.SdpConfig | None = None,
    raise_on_failure: bool = False,
) -> RelaxationResult:
    """Order-k moment relaxation value of ``p``.

    With ``lambda_star`` the moment matrix is additionally confined by
    ``lambda_star * I - M_k(y) >= 0``.
    """
    _check_hermitian(p)
    if p and 2 * k < degree(p):
        raise RelaxationError(f"order {k} too small for degree {degree(p)} (need 2k >= deg)")
    if k < 1:
        raise RelaxationError("order must be at least 1")
    t0 = time.perf_counter()
    mmap = _moment_map(p.n_modes, k, p.is_real)
    prob, const = _relaxation_problem(mmap, p, lambda_star)
    sol = sdp.solve(prob, cfg)
    if raise_on_failure and not sol.optimal:
        raise SolverFailure(f"solver stopped with status {sol.status}: {sol.message}", sol)
    if sol.status is sdp.Status.DUAL_INFEASIBLE:
        # no admissible moment matrix: the minimum over an empty set
        mu = lam = math.inf
    elif sol.status is sdp.Status.PRIMAL_INFEASIBLE:
        mu = lam = -math.inf
    else:
        mu = const - sol.dual_obj
        lam = const - sol.primal_obj
    return RelaxationResult(
        order=k,
        lower_bound=mu,
        sos_bound=lam,
        status=str(sol.status),
        moment_values=mmap.moments(sol.y),
        sos_gram=mmap.gram(sol.X[0]),
        solver_report=sol,
        problem=prob,
        lambda_star=lambda_star,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def gram_polynomial(K: np.ndarray, basis: MonomialBasis) -> WeylPolynomial:
    """Expand ``sum_ij K_ij w_i^* w_j`` with weyl-core multiplication (floating coefficients)."""
    polys = basis.polynomials()
    n = basis.n_modes
    acc = WeylPolynomial.zero(n)
    terms: dict = {}
    for i, wi in enumerate(polys):
        wi_star = wi.adjoint()
        for j, wj in enumerate(polys):
            kij = complex(K[i, j])
            if kij == 0:
                continue
            for key, c in (wi_star * wj).terms.items():
                terms[key] = terms.get(key, 0) + kij * complex(c)
    if terms:
        acc = WeylPolynomial(n, terms)
    return acc


def _psd_project(K: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (K + K.conj().T))
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.conj().T


def _residual(K: np.ndarray, basis: MonomialBasis, target: WeylPolynomial) -> float:
    return float(l1_norm(gram_polynomial(K, basis) - target))


@dataclass
class SosCertificate:
    """``p = sum_ij gram_ij w_i^* w_j`` with ``gram >= 0`` over ``basis``."""

    order: int
    basis: MonomialBasis
    gram: np.ndarray
    residual: float
    margin: float

    def factors(self, tol: float = 1e-12) -> list[WeylPolynomial]:
        """SOS factors ``f_i`` with ``p ~ sum_i f_i^* f_i``."""
        w, V = np.linalg.eigh(self.gram)
        out = []
        polys = self.basis.polynomials()
        n = self.basis.n_modes
        for lam, v in zip(w, V.T):
            if lam <= tol * max(1.0, w[-1]):
                continue
            terms = {}
            for coef, mono in zip(np.sqrt(lam) * v.conj(), polys):
                if abs(coef) > 1e-15:
                    for key, c in mono.terms.items():
                        terms[key] = complex(coef) * complex(c)
            out.append(WeylPolynomial(n, terms))
        return out


def _pad(K: np.ndarray, small: MonomialBasis, big: MonomialBasis) -> np.ndarray:
    out = np.zeros((len(big), len(big)), dtype=K.dtype)
    idx = [big.index(e) for e in small.entries]
    out[np.ix_(idx, idx)] = K
    return out


def sos_certify(p: WeylPolynomial, k: int, cfg: sdp.SdpConfig | None = None, reduce: bool = True, tol: float = 1e-6) -> SosCertificate:
    """Find ``Z >= 0`` with ``p = (w^k)^* Z w^k``, verified by symbolic expansion.

    With ``reduce`` the search runs over factors of degree ``<= deg(p)/2``,
    which loses nothing: an SOS decomposition never needs factors of higher
    degree, and the smaller problem is better conditioned.

    Raises :class:`SosInfeasibleError` when no certificate exists and
    :class:`SolverFailure` when the solver could not decide.
    """
    _check_hermitian(p)
    n = p.n_modes
    big = MonomialBasis.of(n, k)
    scale = max(1.0, float(l1_norm(p)))
    if not p:
        return SosCertificate(k, big, np.zeros((len(big), len(big))), 0.0, 0.0)
    d = degree(p)
    if 2 * k < d:
        raise SosInfeasibleError(f"degree {d} exceeds 2k = {2 * k}")
    kr = min(k, d // 2) if reduce else k
    if 2 * kr < d:
        # leading terms of sum f_i^* f_i cannot cancel, so odd degree is never SOS
        raise SosInfeasibleError(f"odd degree {d} cannot be a sum of squares")
    if kr == 0:
        c = complex(p.constant_term)
        if c.real < 0:
            raise SosInfeasibleError("negative constant", margin=c.real)
        small = MonomialBasis.of(n, 0)
        K = np.array([[c.real]])
        return SosCertificate(k, big, _pad(K, small, big), 0.0, c.real)

    res = lower_bound(p, kr, cfg=cfg)
    if res.status != "optimal":
        raise SolverFailure(f"solver stopped with status {res.status}", res.solver_report)
    if res.lower_bound < -tol * scale:
        raise SosInfeasibleError(f"moment relaxation value {res.lower_bound:.6g} < 0 at order {kr}", margin=res.lower_bound)
    small = MonomialBasis.of(n, kr)
    K = res.sos_gram.copy()
    K[0, 0] += res.sos_bound  # basis entry 0 is the identity
    K = _psd_project(K)
    if np.isrealobj(K) or np.abs(K.imag).max() == 0:
        K = K.real
    resid = _residual(K, small, p)
    if resid > tol * scale:
        raise SolverFailure(f"symbolic residual {resid:.3g} above tolerance", res.solver_report)
    return SosCertificate(k, big, _pad(K, small, big), resid, res.sos_bound)


@dataclass
class PerturbationResult:
    epsilon: float
    order: int
    perturbation: Perturbation
    gram: np.ndarray = field(repr=False)
    basis: MonomialBasis = field(repr=False)
    residual: float
    status: str
    solver_report: sdp.SdpSolution = field(repr=False)

    def to_record(self) -> dict:
        return {
            "r": self.perturbation.r,
            "c": float(self.perturbation.c),
            "order": self.order,
            "epsilon": self.epsilon,
            "l1_perturbation": float(self.perturbation.l1),
            "l1_bound": self.perturbation.l1_bound,
            "residual": self.residual,
            "status": self.status,
        }


def min_perturbation(
    p: WeylPolynomial,
    r: int,
    c=3,
    k: int | None = None,
    pairing: str = "gram",
    cfg: sdp.SdpConfig | None = None,
) -> PerturbationResult:
    """Smallest ``eps >= 0`` with ``p + eps * g^r_c`` SOS at order k, as one joint SDP.

    ``pairing="gram"`` uses ``k = max(r, ceil(deg p / 2))``; ``pairing="functional"``
    uses ``k = r`` (functionals on polynomials of degree ``<= 2r``).
    """
    _check_hermitian(p)
    g = make_g(r, c, p.n_modes)
    d = degree(p) if p else 0
    if k is None:
        if pairing == "gram":
            k = max(r, math.ceil(d / 2), 1)
        elif pairing == "functional":
            k = max(r, 1)
        else:
            raise ValueError(f"unknown pairing {pairing!r}")
    if 2 * k < max(d, 2 * r):
        raise RelaxationError(f"order {k} too small for degree {max(d, 2 * r)}")
    mmap = _moment_map(p.n_modes, k, p.is_real and g.is_real)
    const_p, obj_p = mmap.objective(p)
    const_g, obj_g = mmap.objective(g)
    E = [mmap.embed(h) for h in mmap.H]
    dim = E[0].shape[0] if E else mmap.embed(mmap.B0).shape[0]
    m = len(E) + 1
    A1 = np.zeros((m, dim, dim))
    A2 = np.zeros((m, 1, 1))
    b = np.zeros(m)
    # identity coefficient
    A1[0] = mmap.embed(mmap.B0)
    A2[0, 0, 0] = -const_g
    b[0] = const_p
    for v, e in enumerate(E):
        A1[v + 1] = e
        A2[v + 1, 0, 0] = -obj_g[v]
        b[v + 1] = obj_p[v]
    prob = sdp.SdpProblem([dim, 1], [np.zeros((dim, dim)), np.ones((1, 1))], [A1, A2], b)
    sol = sdp.solve(prob, cfg)
    if sol.status in (sdp.Status.PRIMAL_INFEASIBLE,):
        raise SosInfeasibleError(f"no eps makes p + eps*g SOS at order {k}; raise k")
    if not sol.optimal:
        raise SolverFailure(f"solver stopped with status {sol.status}: {sol.message}", sol)
    eps = max(0.0, float(sol.X[1][0, 0]))
    basis = MonomialBasis.of(p.n_modes, k)
    K = _psd_project(mmap.gram(sol.X[0]))
    if np.iscomplexobj(K) and np.abs(K.imag).max() == 0:
        K = K.real
    pert = Perturbation(r, c, eps, g.scale(eps))
    target = p + g.scale(eps)
    resid = _residual(K, basis, target)
    return PerturbationResult(eps, k, pert, K, basis, resid, str(sol.status), sol)


# ---------------------------------------------------------------------------
# strictly feasible reference functional
# ---------------------------------------------------------------------------


def omega_moments(n: int, k: int) -> dict[NormalIndex, float]:
    """Moments of the Gaussian coherent-state mixture, ``y_{s,t} = delta_{st} prod_i s_i!``.

    The mixture is the thermal state with one quantum per mode on average; its
    moment matrix is positive definite at every order.
    """
    out = {}
    for key in monomial_basis(n, 2 * k):
        if key.sbar == key.tbar:
            out[key] = float(math.prod(math.factorial(s) for s in key.sbar))
        else:
            out[key] = 0.0
    return out
