"""Fast invariant suite behind ``weylsos selftest``.

Each check returns ``(ok, detail)``.  With ``fault=True`` a check corrupts one
coefficient of the quantity it verifies, so the table must show it failing.
"""

from __future__ import annotations

import itertools
import math
import sys
import time
from fractions import Fraction
from typing import Callable, TextIO

import numpy as np

from . import fock, moments, polyparse, sdp
from .weyl import Letter, Word, WeylPolynomial, antinormal_order, l1_norm, normal_form


def _bump(p: WeylPolynomial, fault: bool) -> WeylPolynomial:
    # corrupt the constant coefficient by one unit
    return p + 1 if fault else p


def check_normal_form(fault: bool):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(60):
        n = int(rng.integers(1, 3))
        length = int(rng.integers(1, 7))
        letters = [Letter(int(rng.integers(1, n + 1)), bool(rng.integers(0, 2))) for _ in range(length)]
        w = Word(tuple(letters))
        cut = fock.FockCutoff(n, length + 2)
        direct = fock.represent_word(w, cut)
        nf = fock.represent(_bump(normal_form(w, n), fault), cut)
        mask = fock.exact_block_mask(cut, direct.exact_block)
        diff = np.abs(direct.matrix[np.ix_(mask, mask)] - nf.matrix[np.ix_(mask, mask)]).max(initial=0.0)
        worst = max(worst, float(diff))
    return worst < 1e-9, f"max entry error {worst:.1e}"


def check_commute_identity(fault: bool):
    for k in range(9):
        a_k = WeylPolynomial.monomial((0,), (k,))
        ad_k = WeylPolynomial.monomial((k,), (0,))
        prod = _bump(a_k * ad_k, fault)
        for m in range(k + 1):
            want = Fraction(math.factorial(k) ** 2, math.factorial(m) ** 2 * math.factorial(k - m))
            if prod.coefficient((m,), (m,)) != want:
                return False, f"k={k}, m={m}"
    return True, "k <= 8 exact"


def check_counts(fault: bool):
    for n in range(1, 5):
        for k in range(7):
            brute = sum(1 for e in itertools.product(range(k + 1), repeat=n) if sum(e) == k)
            if moments.count_monomials(n, k) + int(fault) != brute:
                return False, f"n={n}, k={k}"
    return True, "n <= 4, k <= 6"


def check_g_l1(fault: bool):
    for c in (Fraction(5, 2), Fraction(3), Fraction(4)):
        for r in range(9):
            g = _bump(moments.make_g(r, c), fault)
            if not l1_norm(g) <= c / (c - 2):
                return False, f"r={r}, c={c}"
    return True, "r <= 8 exact"


def check_g_expectation(fault: bool):
    for r, c, M in itertools.product((2, 4), (2, 3), (1, 2, 3)):
        g = _bump(moments.perturbation_polynomial(r, c), fault)
        mat = fock.represent(g, fock.FockCutoff(1, M)).matrix
        top = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[-1])
        if top > (c / (c - 1)) ** (M + 1) + 1e-9:
            return False, f"r={r}, c={c}, M={M}"
    return True, "largest eigenvalue below bound"


def check_harmonic(fault: bool):
    p = _bump(polyparse.harmonic(), fault)
    res = moments.lower_bound(p, 1)
    v = fock.variational_upper_bound(p, 8)
    ok = abs(res.lower_bound - 0.5) < 1e-6 and abs(v - 0.5) < 1e-10
    return ok, f"bound {res.lower_bound:.9f}, variational {v:.9f}"


def check_schmudgen(fault: bool):
    p = _bump(polyparse.schmudgen(), fault)
    res = moments.lower_bound(p, 2)
    v = fock.variational_upper_bound(p, 12)
    ok = res.lower_bound <= -0.25 + 1e-4 and abs(v) < 1e-8
    return ok, f"bound {res.lower_bound:.9f}, variational {v:.2e}"


def check_duality(fault: bool):
    res = moments.lower_bound(_bump(polyparse.harmonic(), fault), 2)
    rep = sdp.certify(res.solver_report, res.problem)
    gap = abs(res.lower_bound - res.sos_bound) + (1.0 if fault else 0.0)
    ok = res.status == "optimal" and gap <= 1e-7 and rep.ok(1e-7)
    return ok, f"|mu - lambda| = {gap:.1e}"


def check_sdp_examples(fault: bool):
    one = sdp.SdpProblem([1], [np.ones((1, 1))], [np.ones((1, 1, 1))], [1.0 + fault])
    two = sdp.SdpProblem([2], [np.eye(2)], [np.array([[[0, 0.5], [0.5, 0]]])], [1.0])
    s1, s2 = sdp.solve(one), sdp.solve(two)
    ok = s1.optimal and abs(s1.primal_obj - 1) < 1e-8 and s2.optimal and abs(s2.primal_obj - 2) < 1e-8
    return ok, f"values {s1.primal_obj:.9f}, {s2.primal_obj:.9f}"


def check_antinormal(fault: bool):
    worst = 0.0
    letters = [Letter(1, False), Letter(1, True)]
    for length in (1, 2):
        for w in itertools.product(letters, repeat=length):
            s = Word(tuple(w))
            ss = s + s.adjoint()
            p = normal_form(antinormal_order(ss), 1) - normal_form(ss, 1)
            p = p - 1 if fault else p
            try:
                cert = moments.sos_certify(p, length)
            except moments.SosInfeasibleError as exc:
                return False, f"{s}: {exc}"
            worst = max(worst, cert.residual)
    return worst <= 1e-6, f"max residual {worst:.1e}"


def check_omega(fault: bool):
    for k in (1, 2, 3):
        y = moments.omega_moments(1, k)
        if fault:
            y = dict(y)
            y[next(iter(y))] = -1.0
        M = moments.build_moment_template(1, k).evaluate(y)
        if float(np.linalg.eigvalsh(M)[0]) <= 0:
            return False, f"k={k} not positive definite"
    return True, "positive definite for k <= 3"


CHECKS: dict[str, Callable[[bool], tuple[bool, str]]] = {
    "normal_form_vs_fock": check_normal_form,
    "commute_identity": check_commute_identity,
    "monomial_counts": check_counts,
    "g_l1_bound": check_g_l1,
    "g_expectation_bound": check_g_expectation,
    "harmonic_exact": check_harmonic,
    "schmudgen_gap": check_schmudgen,
    "duality": check_duality,
    "sdp_examples": check_sdp_examples,
    "antinormal_certificates": check_antinormal,
    "omega_moments_psd": check_omega,
}


def run_selftest(inject: str | None = None, out: TextIO = sys.stdout) -> bool:
    """Run every check, print one row each, return True iff all pass."""
    if inject is not None and inject not in CHECKS:
        raise ValueError(f"unknown check {inject!r}; choose from {', '.join(CHECKS)}")
    width = max(map(len, CHECKS))
    all_ok = True
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn(name == inject)
        except Exception as exc:  # a crash is a failed check, not a crashed table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {time.perf_counter() - t0:6.2f}s  {detail}", file=out)
    print(f"{'all checks passed' if all_ok else 'some checks failed'}", file=out)
    return all_ok
