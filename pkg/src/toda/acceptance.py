"""Acceptance checks A1-A12, shared by the test suite and ``toda selftest``.

Each check returns a :class:`CriterionResult`; none of them raise on a
numerical mismatch, so a failing criterion is reported rather than hidden.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .ensemble import (
    BetaParams,
    PeriodicLattice,
    invariance_report,
    invariant_I0,
    invariant_Ik,
    lattice_function,
    make_rng,
    poisson_bracket,
    sample_beta,
)
from .errors import StepSizeUnderflow
from .flow import FlowSpec, darboux_power_exp, darboux_step, flow_finite
from .lattice import (
    FreeBackground,
    JacobiCoefficients,
    TridiagonalMatrix,
    eigendecompose,
    operator_moment,
    truncate,
)
from .mfunc import DEta, MRep, eval_m
from .ode import (
    Exploding,
    Growing,
    OdeRun,
    Periodic,
    exact_family,
    family_boundary,
    family_window,
    integrate,
    residual,
)
from .series import (
    EnvelopeSeries,
    change_variable,
    conv_bound,
    conv_env,
    exp_integrability_check,
    inv_env,
    moment_growth_bound,
    phi_coeffs,
    phi_coeffs_exact,
    sigma_bound,
)
from .weyl import (
    disk_defining_gap,
    fundamental_solutions,
    m_plus,
    m_whole,
    resolvent_diagonal,
    weyl_disk,
)


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"{self.name} {'PASS' if self.passed else 'FAIL'} ({self.seconds:.2f}s) {self.detail}"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CriterionResult(name, bool(ok), detail, time.perf_counter() - t0)


def _random_finite(rng: np.random.Generator, n: int) -> TridiagonalMatrix:
    return TridiagonalMatrix(tuple(rng.standard_normal(n)), tuple(0.5 + rng.random(n - 1)))


def check_a1() -> tuple[bool, str]:
    t0 = time.perf_counter()
    worst = 0.0
    grid_n = range(1, 11)
    for fam in (Growing(0.3), Growing(0.7), Growing(-0.5)):
        for n in grid_n:
            for t in np.linspace(0.0, 1.0, 5):
                worst = max(worst, *map(abs, residual(fam, n, float(t))))
    for fam in (Exploding(1.0, 1.0, 1.0), Exploding(0.5, 2.0, 2.0), Exploding(0.25, -1.0, 1.5)):
        for n in grid_n:
            for t in np.linspace(0.0, 0.9 * fam.blowup_time, 5):
                worst = max(worst, *map(abs, residual(fam, n, float(t))))
    dt = time.perf_counter() - t0
    return worst <= 1e-10 and dt < 1.0, f"max residual {worst:.2e} over 300 points, {dt:.3f}s"


def check_a2() -> tuple[bool, str]:
    T = TridiagonalMatrix((0.0, 0.0), (1.0,))
    times = (0.1, 0.5, 1.0)
    spectral_err = 0.0
    for t in times:
        R = flow_finite(T, FlowSpec((0.0, 1.0), t))
        exact = (1 / math.cosh(2 * t), math.tanh(2 * t), -math.tanh(2 * t))
        spectral_err = max(spectral_err, abs(R.offdiag[0] - exact[0]), abs(R.diag[0] - exact[1]), abs(R.diag[1] - exact[2]))
    tr = integrate(OdeRun(T.to_lattice(), 1.0, rel_tol=1e-10, abs_tol=1e-10, dense_output_times=times))
    ode_err = 0.0
    for k, t in enumerate(times):
        exact = (1 / math.cosh(2 * t), math.tanh(2 * t), -math.tanh(2 * t))
        ode_err = max(ode_err, abs(tr.a[k, 0] - exact[0]), abs(tr.b[k, 0] - exact[1]), abs(tr.b[k, 1] - exact[2]))
    ok = spectral_err <= 1e-12 and ode_err <= 1e-8
    return ok, f"spectral {spectral_err:.2e}, ode {ode_err:.2e} (sign +1: b_1 = +tanh 2t)"


def check_a3() -> tuple[bool, str]:
    t0 = time.perf_counter()
    T = _random_finite(make_rng(2024), 6)
    spec = FlowSpec((0.0, 1.0), 0.25)
    R = flow_finite(T, spec)
    tr = integrate(OdeRun(T.to_lattice(), 0.25, rel_tol=1e-10, abs_tol=1e-12))
    diff = max(np.max(np.abs(tr.a[-1] - R.offdiag)), np.max(np.abs(tr.b[-1] - R.diag)))
    ev = np.max(np.abs(eigendecompose(T).eigenvalues - eigendecompose(R).eigenvalues))
    dt = time.perf_counter() - t0
    return diff <= 1e-6 and ev <= 1e-9 and dt < 5.0, f"coeff diff {diff:.2e}, eigenvalue drift {ev:.2e}, {dt:.2f}s"


def check_a4() -> tuple[bool, str]:
    rng = make_rng(4)
    M = 80
    zs = [1.6 * np.exp(1j * th) for th in np.linspace(0.2, 2.9, 10)]
    zs += [0.55 * np.exp(1j * th) for th in np.linspace(0.2, 2.9, 10)]
    worst = 0.0
    for _ in range(5):
        k = int(rng.integers(2, 7))
        lo = int(rng.integers(-3, 2))
        q = JacobiCoefficients(lo, tuple(0.6 + 0.8 * rng.random(k)), tuple(0.8 * rng.standard_normal(k)),
                               FreeBackground())
        top = max(2.0, eigendecompose(truncate(q, lo - 60, lo + k + 60)).eigenvalues[-1])
        E = top + 0.5 + rng.random()
        eta = 0.5 * (E + math.sqrt(E * E - 4.0))
        qd = darboux_step(q, eta)
        m = MRep.from_lattice(q, M).append(DEta(eta))
        worst = max(worst, max(abs(m_whole(qd, z, M) - eval_m(m, z)) for z in zs))
    return worst <= 1e-8, f"max |m_whole(darboux) - d_eta m| = {worst:.2e} over 5 lattices x 20 points"


def check_a5() -> tuple[bool, str]:
    q = JacobiCoefficients.finite((0.0, 0.0), (1.0,))
    t = 0.3
    # n steps at zeta = n/t approximate the linear flow run for t/2
    ref = flow_finite(truncate(q, 1, 2), FlowSpec((0.0, 1.0), t / 2))
    ns = [4, 8, 16, 32]
    errs = []
    for n in ns:
        d = darboux_power_exp(q, t, n)
        errs.append(max(abs(d.a[0] - ref.offdiag[0]), abs(d.b[0] - ref.diag[0]), abs(d.b[1] - ref.diag[1])))
    mono = all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    order = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    return mono and order >= 0.8, f"errors {[f'{e:.2e}' for e in errs]}, fitted order {order:.2f}"


def check_a6() -> tuple[bool, str]:
    t0 = time.perf_counter()
    lat = sample_beta(8, 2.0, 1.0, 0.0, seed=6)
    q = JacobiCoefficients(1, tuple(lat.a), tuple(lat.b))
    times = tuple(np.linspace(0.0, 1.0, 11))
    tr = integrate(OdeRun(q, 1.0, boundary=Periodic(), rel_tol=1e-11, abs_tol=1e-11, dense_output_times=times))
    base = [invariant_Ik(lat, k) for k in range(1, 5)]
    drift = 0.0
    for i in range(len(times)):
        cur = PeriodicLattice(tr.a[i], tr.b[i])
        for k in range(1, 5):
            drift = max(drift, abs(invariant_Ik(cur, k) - base[k - 1]) / max(abs(base[k - 1]), 1.0))
    dt = time.perf_counter() - t0
    return drift <= 1e-8 and dt < 10.0, f"max relative drift of I1..I4 {drift:.2e}, {dt:.2f}s"


def check_a7() -> tuple[bool, str]:
    rng = make_rng(7)
    I = {k: lattice_function(lambda l, k=k: invariant_Ik(l, k)) for k in (1, 2, 3)}
    I0 = lattice_function(invariant_I0)
    worst = 0.0
    worst_a1b1 = 0.0
    for _ in range(10):
        lat = PeriodicLattice(0.5 + rng.random(6), rng.standard_normal(6))
        for k in (1, 2, 3):
            worst = max(worst, abs(poisson_bracket(I[k], I0, lat)))
            for l in (1, 2, 3):
                worst = max(worst, abs(poisson_bracket(I[k], I[l], lat)))
        val = poisson_bracket(lambda a, b: a[0], lambda a, b: b[0], lat)
        worst_a1b1 = max(worst_a1b1, abs(val - lat.a[0] / 4))
    return worst <= 1e-6 and worst_a1b1 <= 1e-8, f"max |{{I_k, I_l}}| {worst:.2e}, |{{a1,b1}} - a1/4| {worst_a1b1:.2e}"


def check_a8() -> tuple[bool, str]:
    t0 = time.perf_counter()
    params = BetaParams(8, 2.0, 1.0, 0.0)
    good = invariance_report(params, 0.2, 10_000, seed=8)
    biased = invariance_report(params, 0.2, 10_000, seed=8, bias_b=1.0)
    dt = time.perf_counter() - t0
    zmax = max(max(abs(r["delta_a2"]) / r["se_a2"], abs(r["delta_b"]) / r["se_b"]) for r in good["per_site"])
    ok = good["pass"] and not biased["pass"] and dt < 120.0
    return ok, f"unbiased max |delta|/SE {zmax:.2f}, biased control pass={biased['pass']}, {dt:.1f}s"


def check_a9() -> tuple[bool, str]:
    rng = make_rng(9)
    msgs = []
    ok = True
    # product and reciprocal envelope bounds
    viol = 0
    for _ in range(100):
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        c1, c2 = 0.2 + rng.random(2) * 1.5
        K = 12
        a = [rng.uniform(-1, 1) * c1**k * math.gamma(alpha * k + 1) for k in range(K)]
        b = [rng.uniform(-1, 1) * c2**k * math.gamma(alpha * k + 1) for k in range(K)]
        A, B = EnvelopeSeries(a, c1, alpha), EnvelopeSeries(b, c2, alpha)
        prod = conv_env(A, B).coeffs
        for k in range(1, K):
            if abs(prod[k]) > conv_bound(a[0], b[0], c1, c2, alpha, k) * (1 + 1e-12):
                viol += 1
        A1 = EnvelopeSeries([1.0] + a[1:], c1, alpha)
        inv = inv_env(A1).coeffs
        for k in range(1, K):
            if abs(inv[k]) > 0.5 * (2 * c1) ** k * math.gamma(alpha * k + 1) * (1 + 1e-12):
                viol += 1
    ok &= viol == 0
    msgs.append(f"envelope violations {viol}")
    exact = phi_coeffs_exact(3) == [Fraction(1, 2), Fraction(1, 8), Fraction(1, 16)]
    total = float(np.sum(phi_coeffs(10_000)))
    ok &= exact and 0.99 <= total <= 1.0
    msgs.append(f"p1..p3 exact {exact}, sum {total:.6f}")
    # bound on sigma_k for mu in the envelope class
    bad = 0
    for _ in range(50):
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        c = 0.2 + 1.5 * rng.random()
        L = 20
        mu = [rng.uniform(-1, 1) * c**k * math.gamma(alpha * k + 1) for k in range(1, L)]
        sig = change_variable(mu, "mu_to_sigma")
        bad += sum(abs(s) > sigma_bound(c, alpha, k) * (1 + 1e-12) for k, s in enumerate(sig, start=1))
    ok &= bad == 0
    msgs.append(f"sigma-bound violations {bad}")
    # round trips: exact rationals at length 63, binary64 at length 10
    mu_q = [Fraction(int(rng.integers(-999, 1000)), int(rng.integers(1, 100))) for _ in range(63)]
    exact_rt = change_variable(change_variable(mu_q, "mu_to_sigma"), "sigma_to_mu") == mu_q
    mu_f = list(rng.standard_normal(10))
    float_rt = max(abs(x - y) for x, y in zip(change_variable(change_variable(mu_f, "mu_to_sigma"), "sigma_to_mu"), mu_f))
    ok &= exact_rt and float_rt <= 1e-12
    msgs.append(f"round trip exact(63) {exact_rt}, float(10) {float_rt:.1e}")
    return ok, "; ".join(msgs)


def check_a10() -> tuple[bool, str]:
    rng = make_rng(10)
    msgs = []
    ok = True
    n_sites = 60
    q = JacobiCoefficients(-n_sites, tuple(0.5 + rng.random(2 * n_sites + 1)), tuple(rng.standard_normal(2 * n_sites + 1)),
                           FreeBackground())
    z = 0.3 + 0.7j
    L = 30
    fs = fundamental_solutions(q, z, L)
    # the two products cancel; error is measured against their magnitude
    wr = 0.0
    for n in range(L + 1):
        size = (abs(fs.c[n] * fs.s[n + 1]) + abs(fs.c[n + 1] * fs.s[n])) * math.exp(fs.log_scale[n] + fs.log_scale[n + 1])
        wr = max(wr, abs(fs.wronskian(n) - q.a_at(1) / q.a_at(n + 1)) / max(size, q.a_at(1) / q.a_at(n + 1)))
    ok &= wr <= 1e-12
    msgs.append(f"Wronskian {wr:.1e}")
    disks = [weyl_disk(q, z, l) for l in range(1, L + 1)]
    nested = all(abs(d2.center - d1.center) + d2.radius <= d1.radius * (1 + 1e-9) + 1e-14 for d1, d2 in zip(disks, disks[1:]))
    m_val = q.a_at(1) ** 2 * m_plus(q, z, 200)
    inside = all(d.contains(m_val, 1e-9) for d in disks)
    gap = max(abs(disk_defining_gap(q, z, d.L, p)) / max(1.0, abs(p.imag / z.imag))
              for d in disks[:10] for p in d.boundary_points(8))
    free = weyl_disk(JacobiCoefficients.free(lo=0, hi=0), 2j, 1)
    free_err = max(abs(free.radius - 0.25), abs(free.center - 0.25j))
    ok &= nested and inside and gap <= 1e-10 and free_err <= 1e-12
    msgs.append(f"nested {nested}, contains a1^2 m+ {inside}, boundary gap {gap:.1e}, free disk err {free_err:.1e}")
    worst = 0.0
    for trial in range(5):
        qb = JacobiCoefficients(-40, tuple(0.5 + rng.random(81)), tuple(rng.standard_normal(81)))
        w = complex(rng.standard_normal(), 0.5 + rng.random())
        H = truncate(qb, -40, 40).to_dense()
        G = np.linalg.inv(H - w * np.eye(81))[40, 40]
        worst = max(worst, abs(resolvent_diagonal(qb, w, 40) - G))
    ok &= worst <= 1e-8
    msgs.append(f"resolvent identity {worst:.1e}")
    return ok, "; ".join(msgs)


def check_a11() -> tuple[bool, str]:
    rng = make_rng(11)
    fails = 0
    K = 10
    for alpha in (1.0, 2.0):
        for _ in range(10):
            c1 = 0.5 + rng.random()
            N = K + 3
            n = np.arange(1, N + 1, dtype=float)
            b = c1 * n ** (1 / alpha) * rng.uniform(-1, 1, N)
            # a_{n+1} couples n and n+1 and is bounded by c1 n^(1/alpha)
            a = c1 * n[:-1] ** (1 / alpha) * rng.uniform(0.05, 1.0, N - 1)
            q = JacobiCoefficients(1, tuple(a), tuple(b))
            x = [operator_moment(q, 2 * k, 1, dirichlet=True) for k in range(1, K + 1)]
            fails += sum(x[k - 1] > moment_growth_bound(c1, alpha, k, x[0]) * (1 + 1e-12) for k in range(1, K + 1))
    gauss = [float(math.prod(range(1, 2 * k, 2))) for k in range(16)]
    heavy = [math.gamma(2 * k + 1) * 4.0**k for k in range(16)]
    g_ok = exp_integrability_check(gauss, 1.0, 1.0).passes_growth
    h_rej = not exp_integrability_check(heavy, 1.0, 1.0).passes_growth
    ok = fails == 0 and g_ok and h_rej
    return ok, f"moment-bound violations {fails}/200, gaussian accepted {g_ok}, heavy rejected {h_rej}"


def check_a12() -> tuple[bool, str]:
    fam = Growing(0.5)
    q = family_window(fam, 1, 200)
    times = (0.1, 0.25, 0.5)
    tr = integrate(OdeRun(q, 0.5, boundary=family_boundary(fam), rel_tol=1e-12, abs_tol=1e-12, dense_output_times=times))
    err = 0.0
    for k, t in enumerate(times):
        for n in range(1, 21):
            a, b = exact_family(fam, n, t)
            err = max(err, abs(tr.a[k, n - 1] - a) / max(1.0, a), abs(tr.b[k, n - 1] - b) / max(1.0, abs(b)))
    ex = Exploding(1.0, 1.0, 1.0)
    blew = False
    where = math.nan
    try:
        integrate(OdeRun(family_window(ex, 1, 40), ex.blowup_time, boundary=family_boundary(ex),
                         rel_tol=1e-10, abs_tol=1e-12))
    except StepSizeUnderflow as exc:
        blew = True
        where = float(str(exc).rsplit("t=", 1)[1])
    ok = err <= 1e-6 and blew and where < ex.blowup_time
    return ok, f"growing max rel err {err:.1e}; exploding underflow={blew} at t={where:.12f} < {ex.blowup_time}"


CRITERIA: dict[str, Callable[[], tuple[bool, str]]] = {
    "A1": check_a1,
    "A2": check_a2,
    "A3": check_a3,
    "A4": check_a4,
    "A5": check_a5,
    "A6": check_a6,
    "A7": check_a7,
    "A8": check_a8,
    "A9": check_a9,
    "A10": check_a10,
    "A11": check_a11,
    "A12": check_a12,
}


def run_criterion(name: str) -> CriterionResult:
    return _timed(name, CRITERIA[name])


def run_all() -> list[CriterionResult]:
    return [run_criterion(name) for name in CRITERIA]
