"""Dense primal-dual interior-point solver for block SDPs.

Primal:  minimize <C, X>  subject to  <A_i, X> = b_i,  X >= 0
Dual:    maximize b.y     subject to  sum_i y_i A_i + Z = C,  Z >= 0

Infeasible-start path following with the Nesterov-Todd search direction and Mehrotra
predictor-corrector steps.  All data are real symmetric; complex hermitian
problems must be embedded upstream.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Status",
    "SdpConfig",
    "SdpProblem",
    "SdpSolution",
    "CertReport",
    "solve",
    "certify",
    "dump_problem",
    "load_problem",
    "dumps_problem",
    "loads_problem",
]


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SdpConfig:
    tol: float = 1e-8
    max_iter: int = 200
    initial_scale: float = 1.0
    infeas_tol: float = 1e-8
    max_step: float = 0.98
    stall_iters: int = 30
    verbose: bool = False


@dataclass
class SdpProblem:
    """Block SDP in standard form.

    ``C[b]`` is the objective block ``b``; ``A[b]`` stacks the constraint
    matrices of block ``b`` into an array of shape ``(m, n_b, n_b)``.
    """

    block_dims: list[int]
    C: list[np.ndarray]
    A: list[np.ndarray]
    b: np.ndarray

    def __post_init__(self):
        self.block_dims = [int(d) for d in self.block_dims]
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        self.A = [np.asarray(a, dtype=float).reshape(m, d, d) for a, d in zip(self.A, self.block_dims)]
        self.validate()

    @classmethod
    def from_constraints(cls, block_dims: Sequence[int], C: Sequence, constraints: Sequence[tuple[Sequence, float]]) -> "SdpProblem":
        """Build from ``[(blocks_i, b_i), ...]`` where ``blocks_i`` lists one matrix per block."""
        m = len(constraints)
        A = [np.zeros((m, d, d)) for d in block_dims]
        b = np.zeros(m)
        for i, (blocks, bi) in enumerate(constraints):
            b[i] = bi
            for k, mat in enumerate(blocks):
                A[k][i] = mat
        return cls(list(block_dims), list(C), A, b)

    @property
    def m(self) -> int:
        return self.b.size

    def validate(self) -> None:
        if len(self.C) != len(self.block_dims) or len(self.A) != len(self.block_dims):
            raise ValueError("block count mismatch")
        for d, c, a in zip(self.block_dims, self.C, self.A):
            if c.shape != (d, d):
                raise ValueError(f"objective block has shape {c.shape}, expected {(d, d)}")
            if not np.allclose(c, c.T, atol=1e-12 * max(1.0, np.abs(c).max(initial=0))):
                raise ValueError("objective block not symmetric")
            if a.size and not np.allclose(a, a.transpose(0, 2, 1), atol=1e-12 * max(1.0, np.abs(a).max(initial=0))):
                raise ValueError("constraint matrix not symmetric")

    def scaled(self, gamma: float) -> "SdpProblem":
        return SdpProblem(self.block_dims, [gamma * c for c in self.C], self.A, self.b)

    # linear maps ------------------------------------------------------
    def apply_A(self, X: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.m)
        for a, x in zip(self.A, X):
            out += a.reshape(self.m, -1) @ x.reshape(-1)
        return out

    def apply_At(self, y: np.ndarray) -> list[np.ndarray]:
        return [np.tensordot(y, a, axes=1) for a in self.A]


@dataclass
class SdpSolution:
    status: Status
    X: list[np.ndarray]
    y: np.ndarray
    Z: list[np.ndarray]
    primal_obj: float
    dual_obj: float
    duality_gap: float
    max_constraint_violation: float
    iterations: int
    relative_gap: float = math.nan
    primal_infeasibility: float = math.nan
    dual_infeasibility: float = math.nan
    message: str = ""
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class CertReport:
    primal_obj: float
    dual_obj: float
    duality_gap: float
    relative_gap: float
    primal_residual: float
    dual_residual: float
    min_eig_X: float
    min_eig_Z: float
    max_constraint_violation: float

    def ok(self, tol: float) -> bool:
        return (
            self.relative_gap <= tol
            and self.max_constraint_violation <= tol
            and self.min_eig_X >= -10 * tol
            and self.min_eig_Z >= -10 * tol
        )


def _inner(A: Sequence[np.ndarray], B: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(A, B)))


def _norm(A: Sequence[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.vdot(a, a)) for a in A))


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _gap_scale(pobj: float, dobj: float) -> float:
    # absolute below unit magnitude, relative above
    return max(1.0, abs(pobj), abs(dobj))


def _min_eig(blocks: Sequence[np.ndarray]) -> float:
    return min((float(np.linalg.eigvalsh(_sym(b))[0]) for b in blocks if b.size), default=0.0)


def _presolve(prob: SdpProblem, tol: float = 1e-10):
    """Drop linearly dependent constraints; flag inconsistent ones."""
    m = prob.m
    if m == 0:
        return np.arange(0), None
    rows = np.hstack([a.reshape(m, -1) for a in prob.A])
    scale = max(1.0, np.abs(rows).max(initial=0.0))
    _, R, piv = sla.qr(rows.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    rank = int(np.sum(diag > tol * scale * max(rows.shape)))
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(m), keep)
    if drop.size:
        base = rows[keep]
        coef, *_ = np.linalg.lstsq(base.T, rows[drop].T, rcond=None)
        predicted = coef.T @ prob.b[keep] if keep.size else np.zeros(drop.size)
        bscale = max(1.0, np.abs(prob.b).max())
        if np.any(np.abs(predicted - prob.b[drop]) > 1e3 * tol * bscale):
            return keep, "inconsistent equality constraints"
    return keep, None


def _definite(blocks: Sequence[np.ndarray]) -> bool:
    try:
        for b in blocks:
            np.linalg.cholesky(b)
    except np.linalg.LinAlgError:
        return False
    return True


def _nt_scaling(X: np.ndarray, Z: np.ndarray):
    """NT scaling ``G`` with ``G^-1 X G^-T = G^T Z G = diag(d)``; returns ``(G, Ginv, d)``."""
    Lx = np.linalg.cholesky(X)
    Lz = np.linalg.cholesky(Z)
    U, s, Vt = np.linalg.svd(Lz.T @ Lx)
    root = np.sqrt(s)
    G = (Lx @ Vt.T) / root
    Ginv = (sla.solve_triangular(Lx, np.eye(X.shape[0]), lower=True).T @ Vt.T * root).T
    return G, Ginv, s


def _scaled_step(d: np.ndarray, dV: np.ndarray) -> float:
    """Largest alpha with diag(d) + alpha dV >= 0."""
    r = 1.0 / np.sqrt(d)
    lam = float(np.linalg.eigvalsh(_sym(r[:, None] * dV * r[None, :]))[0])
    return math.inf if lam >= 0 else -1.0 / lam


class _Normal:
    """Normal equations ``B B^T dy = r`` solved through a QR factor of ``B^T``."""

    def __init__(self, B: np.ndarray):
        self.B = B
        self.R = sla.qr(B.T, mode="r")[0][: B.shape[0]]
        diag = np.abs(np.diag(self.R))
        self.regularized = False
        if diag.size and diag.min() <= 1e-13 * max(1.0, diag.max()):
            # near rank loss at the end of a degenerate solve: Tikhonov-damped factor, refined below
            delta = 1e-10 * max(1.0, diag.max())
            stacked = np.vstack([B.T, delta * np.eye(B.shape[0])])
            self.R = sla.qr(stacked, mode="r")[0][: B.shape[0]]
            self.regularized = True
        self.ok = bool(np.all(np.isfinite(self.R)))

    def solve(self, r: np.ndarray, rounds: int = 2) -> np.ndarray:
        def once(v):
            w = sla.solve_triangular(self.R, v, trans="T")
            return sla.solve_triangular(self.R, w)

        x = once(r)
        for _ in range(rounds):
            res = r - self.B @ (self.B.T @ x)
            x = x + once(res)
        return x


def solve(prob: SdpProblem, cfg: SdpConfig | None = None, start: tuple | None = None) -> SdpSolution:
    """Solve ``prob``; deterministic for fixed inputs.

    ``start`` may supply ``(X0, y0, Z0)`` (all blocks positive definite) in
    place of the default scaled-identity point.
    """
    cfg = cfg or SdpConfig()
    keep, problem = _presolve(prob)
    full_m = prob.m
    dims = prob.block_dims
    ntot = sum(dims)

    def expand(yk: np.ndarray) -> np.ndarray:
        y = np.zeros(full_m)
        y[keep] = yk
        return y

    if problem is not None:
        X = [np.zeros((d, d)) for d in dims]
        return SdpSolution(Status.PRIMAL_INFEASIBLE, X, np.zeros(full_m), [c.copy() for c in prob.C], math.nan, math.nan, math.nan, math.inf, 0, message=problem)

    sub = SdpProblem(dims, prob.C, [a[keep] for a in prob.A], prob.b[keep]) if keep.size != full_m else prob
    m = sub.m
    C, b = sub.C, sub.b
    normb = float(np.linalg.norm(b))
    normC = _norm(C)
    normA = [math.sqrt(sum(float(np.sum(a[i] ** 2)) for a in sub.A)) for i in range(m)]

    if start is not None:
        X = [np.array(x, dtype=float) for x in start[0]]
        y = np.asarray(start[1], dtype=float)[keep]
        Z = [np.array(z, dtype=float) for z in start[2]]
    else:
        xi = max(10.0, math.sqrt(ntot), max((ntot * (1 + abs(b[i])) / (1 + normA[i]) for i in range(m)), default=1.0))
        eta = max(10.0, math.sqrt(ntot), normC, max(normA, default=1.0))
        xi *= cfg.initial_scale
        eta *= cfg.initial_scale
        X = [xi * np.eye(d) for d in dims]
        Z = [eta * np.eye(d) for d in dims]
        y = np.zeros(m)

    status = Status.MAX_ITERATIONS
    message = ""
    history: list[dict] = []
    step_p = step_d = 1.0
    best = None
    best_merit = math.inf
    stall = 0
    it = 0
    for it in range(cfg.max_iter + 1):
        ATy = sub.apply_At(y)
        rp = b - sub.apply_A(X)
        Rd = [c - z - aty for c, z, aty in zip(C, Z, ATy)]
        pobj = _inner(C, X)
        dobj = float(b @ y)
        gap = _inner(X, Z)
        mu = gap / ntot
        pinf = float(np.linalg.norm(rp)) / (1 + normb)
        dinf = _norm(Rd) / (1 + normC)
        relgap = abs(pobj - dobj) / _gap_scale(pobj, dobj)
        history.append(dict(it=it, pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf, relgap=relgap, mu=mu, step_p=step_p, step_d=step_d))
        if cfg.verbose:
            print(f"{it:3d} pobj={pobj:+.10e} dobj={dobj:+.10e} pinf={pinf:.2e} dinf={dinf:.2e} gap={relgap:.2e} mu={mu:.2e} ap={step_p:.2f} ad={step_d:.2f}")
        merit = max(pinf, dinf, relgap, gap / _gap_scale(pobj, dobj))
        if merit <= cfg.tol:
            status = Status.OPTIMAL
            break
        if merit < 0.7 * best_merit:
            stall = 0
        else:
            stall += 1
        best_merit = min(best_merit, merit)
        # fallback iterate: prefer points that respect weak duality, then the smallest merit
        rank = (dobj > pobj + 10 * cfg.tol * _gap_scale(pobj, dobj), merit)
        if best is None or rank < best[0]:
            best = (rank, [x.copy() for x in X], y.copy(), [z.copy() for z in Z])
        # certificates of infeasibility
        if dobj > 0:
            ray = _norm([aty + z for aty, z in zip(ATy, Z)]) / dobj
            if ray <= cfg.infeas_tol:
                status, message = Status.PRIMAL_INFEASIBLE, "dual improving ray"
                break
        if pobj < 0:
            ray = float(np.linalg.norm(sub.apply_A(X))) / (-pobj)
            if ray <= cfg.infeas_tol:
                status, message = Status.DUAL_INFEASIBLE, "primal improving ray"
                break
        if it == cfg.max_iter:
            break
        if stall >= cfg.stall_iters:
            status, message = Status.NUMERICAL_FAILURE, "no progress"
            break

        try:
            scal = [_nt_scaling(x, z) for x, z in zip(X, Z)]
        except np.linalg.LinAlgError:
            status, message = Status.NUMERICAL_FAILURE, "iterate lost definiteness"
            break
        # scaled data: A~_i = G^T A_i G, Rd~ = G^T Rd G
        At = [np.matmul(np.matmul(G.T, a), G) for (G, _, _), a in zip(scal, sub.A)]
        Rdt = [G.T @ rd @ G for (G, _, _), rd in zip(scal, Rd)]
        B = np.hstack([a.reshape(m, -1) for a in At]) if m else np.zeros((0, 0))
        normal = _Normal(B) if m else None
        if normal is not None and not normal.ok:
            status, message = Status.NUMERICAL_FAILURE, "normal equations singular"
            break

        def direction(target: float, corr):
            Rt = []
            for k, (_, _, d) in enumerate(scal):
                num = -2.0 * np.diag(d * d) + 2.0 * target * np.eye(d.size)
                if corr is not None:
                    P = corr[0][k] @ corr[1][k]
                    num = num - (P + P.T)
                Rt.append(num / (d[:, None] + d[None, :]))
            rhs = rp - _apply_flat(B, [r - s for r, s in zip(Rt, Rdt)])
            dy = normal.solve(rhs) if m else np.zeros(0)
            dZt = [rd - np.tensordot(dy, a, axes=1) for rd, a in zip(Rdt, At)]
            dXt = [_sym(r - dz) for r, dz in zip(Rt, dZt)]
            return dXt, dy, [_sym(dz) for dz in dZt]

        def steps(dXt, dZt):
            ap = min((_scaled_step(d, dx) for (_, _, d), dx in zip(scal, dXt)), default=math.inf)
            ad = min((_scaled_step(d, dz) for (_, _, d), dz in zip(scal, dZt)), default=math.inf)
            return ap, ad

        # predictor
        dXa, dya, dZa = direction(0.0, None)
        ap, ad = steps(dXa, dZa)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = sum(float(np.sum((np.diag(d) + ap * dx) * (np.diag(d) + ad * dz))) for (_, _, d), dx, dz in zip(scal, dXa, dZa)) / ntot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        dXt, dy, dZt = direction(sigma * mu, (dXa, dZa))
        ap, ad = steps(dXt, dZt)
        gamma = min(cfg.max_step, 0.9 + 0.09 * min(step_p, step_d))
        step_p = min(1.0, gamma * ap)
        step_d = min(1.0, gamma * ad)
        if max(step_p, step_d) < 1e-10:
            status, message = Status.NUMERICAL_FAILURE, "step length collapsed"
            break
        dX = [G @ dx @ G.T for dx, (G, _, _) in zip(dXt, scal)]
        # form dZ from the dual equation itself; mapping dZt back through an ill-conditioned G loses it
        dZ = [_sym(rd - aty) for rd, aty in zip(Rd, sub.apply_At(dy))]
        # rounding can push a long step onto the boundary; back off until both sides factor
        for _ in range(20):
            Xn = [_sym(x + step_p * d) for x, d in zip(X, dX)]
            Zn = [_sym(z + step_d * d) for z, d in zip(Z, dZ)]
            if _definite(Xn) and _definite(Zn):
                break
            step_p *= 0.8
            step_d *= 0.8
        else:
            status, message = Status.NUMERICAL_FAILURE, "iterate lost definiteness"
            break
        X, Z = Xn, Zn
        y = y + step_d * dy

    if status is not Status.OPTIMAL and best is not None and status in (Status.NUMERICAL_FAILURE, Status.MAX_ITERATIONS):
        _, X, y, Z = best
    AX = prob.apply_A(X)
    yfull = expand(y)
    pobj = _inner(prob.C, X)
    dobj = float(prob.b @ yfull)
    viol = float(np.abs(AX - prob.b).max(initial=0.0))
    dres = [c - z - aty for c, z, aty in zip(prob.C, Z, prob.apply_At(yfull))]
    dviol = max((float(np.abs(d).max(initial=0.0)) for d in dres), default=0.0)
    return SdpSolution(
        status=status,
        X=X,
        y=yfull,
        Z=Z,
        primal_obj=pobj,
        dual_obj=dobj,
        duality_gap=pobj - dobj,
        max_constraint_violation=max(viol, dviol),
        iterations=it,
        relative_gap=abs(pobj - dobj) / _gap_scale(pobj, dobj),
        primal_infeasibility=float(np.linalg.norm(AX - prob.b)) / (1 + float(np.linalg.norm(prob.b))),
        dual_infeasibility=_norm(dres) / (1 + _norm(prob.C)),
        message=message,
        history=history,
    )


def _apply_flat(B: np.ndarray, blocks: Sequence[np.ndarray]) -> np.ndarray:
    if B.size == 0:
        return np.zeros(B.shape[0])
    return B @ np.concatenate([blk.reshape(-1) for blk in blocks])


def certify(sol: SdpSolution, prob: SdpProblem) -> CertReport:
    """Recompute objectives, residuals and eigenvalue floors from the raw blocks."""
    pobj = _inner(prob.C, sol.X)
    dobj = float(prob.b @ sol.y)
    pres = float(np.abs(prob.apply_A(sol.X) - prob.b).max(initial=0.0))
    dres_blocks = [c - z - aty for c, z, aty in zip(prob.C, sol.Z, prob.apply_At(sol.y))]
    dres = max((float(np.abs(d).max(initial=0.0)) for d in dres_blocks), default=0.0)
    return CertReport(
        primal_obj=pobj,
        dual_obj=dobj,
        duality_gap=pobj - dobj,
        relative_gap=abs(pobj - dobj) / _gap_scale(pobj, dobj),
        primal_residual=pres,
        dual_residual=dres,
        min_eig_X=_min_eig(sol.X),
        min_eig_Z=_min_eig(sol.Z),
        max_constraint_violation=max(pres, dres),
    )


# ---------------------------------------------------------------------------
# plain-text dump format
#
#   weylsos-sdp 1
#   blocks <nblocks>
#   dims <d_1> ... <d_nblocks>
#   constraints <m>
#   b <b_1> ... <b_m>
#   matrix <i>                 (0 = objective C, i >= 1 = constraint i)
#   <block> <row> <col> <value>    1-based, row <= col, nonzeros only
#   end
# ---------------------------------------------------------------------------


def _triplets(blocks: Sequence[np.ndarray]):
    for k, mat in enumerate(blocks):
        rows, cols = np.nonzero(np.triu(mat))
        for r, c in zip(rows, cols):
            yield k + 1, r + 1, c + 1, float(mat[r, c])


def dumps_problem(prob: SdpProblem) -> str:
    out = io.StringIO()
    out.write("weylsos-sdp 1\n")
    out.write(f"blocks {len(prob.block_dims)}\n")
    out.write("dims " + " ".join(map(str, prob.block_dims)) + "\n")
    out.write(f"constraints {prob.m}\n")
    out.write("b " + " ".join(repr(float(v)) for v in prob.b) + "\n")
    for i in range(prob.m + 1):
        blocks = prob.C if i == 0 else [a[i - 1] for a in prob.A]
        out.write(f"matrix {i}\n")
        for k, r, c, v in _triplets(blocks):
            out.write(f"{k} {r} {c} {v!r}\n")
    out.write("end\n")
    return out.getvalue()


def loads_problem(text: str) -> SdpProblem:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if lines[0][:1] != ["weylsos-sdp"]:
        raise ValueError("not a weylsos SDP dump")
    header = {ln[0]: ln[1:] for ln in lines[1:5]}
    dims = [int(v) for v in header["dims"]]
    m = int(header["constraints"][0])
    b = np.array([float(v) for v in header["b"]]) if m else np.zeros(0)
    C = [np.zeros((d, d)) for d in dims]
    A = [np.zeros((m, d, d)) for d in dims]
    current = None
    for ln in lines[5:]:
        if ln[0] == "end":
            break
        if ln[0] == "matrix":
            current = int(ln[1])
            continue
        k, r, c = (int(v) - 1 for v in ln[:3])
        v = float(ln[3])
        target = C[k] if current == 0 else A[k][current - 1]
        target[r, c] = v
        target[c, r] = v
    return SdpProblem(dims, C, A, b)


def dump_problem(prob: SdpProblem, path: str | Path) -> None:
    Path(path).write_text(dumps_problem(prob), newline="\n")


def load_problem(path: str | Path) -> SdpProblem:
    return loads_problem(Path(path).read_text())
