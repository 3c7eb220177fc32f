"""Toda flows by spectral deformation and by Darboux steps.

Sign convention (``SIGN``): the first-site spectral measure of a finite
lattice evolving under ``da_n/dt = a_n (b_n - b_{n-1})``,
``db_n/dt = 2 (a_{n+1}^2 - a_n^2)`` is ``exp(2 t lambda) sigma`` up to
normalization.  ``SIGN = +1`` was fixed by comparing the two-site closed form
``a = sech 2t, b = (tanh 2t, -tanh 2t)`` against direct integration.

A Darboux step at energy ``E = zeta + 1/zeta`` factors ``E - H = U U^T`` with
``U`` upper bidiagonal (built from the positive solution that decays to the
right) and returns ``E - U^T U``.  On a finite chain this multiplies the
last-site spectral measure by ``E - lambda``, so ``n`` steps at
``zeta = n / t`` approach the flow above run for time ``t / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EnergyInsideSpectrum, OverflowGuard, SignChange
from .lattice import (
    FreeBackground,
    JacobiCoefficients,
    TridiagonalMatrix,
    eigendecompose,
    truncate,
)
from .spectral import DiscreteMeasure, jacobi_from_measure, measure_from_jacobi

SIGN = +1
EXP_LIMIT = 700.0
SPECTRUM_MARGIN = 1e-6
TAIL_LIMIT = 100_000


@dataclass(frozen=True)
class FlowSpec:
    """Flow generated by ``p(lambda) = sum poly[k] lambda^k`` run for time ``t``."""

    poly: tuple[float, ...]
    t: float
    sign: int = SIGN
    N: int = 4

    def __post_init__(self):
        poly = tuple(float(c) for c in self.poly)
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "t", float(self.t))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if len(poly) - 1 > self.N:
            raise ValueError(f"polynomial degree {len(poly) - 1} exceeds N={self.N}")

    def p(self, lam):
        return np.polynomial.polynomial.polyval(lam, self.poly) if self.poly else 0.0 * np.asarray(lam)

    def to_dict(self) -> dict:
        return {"poly": list(self.poly), "t": self.t, "sign": self.sign}

    @classmethod
    def from_dict(cls, data: dict) -> "FlowSpec":
        return cls(tuple(data["poly"]), data["t"], int(data.get("sign", SIGN)))


def deform_measure(sigma: DiscreteMeasure, spec: FlowSpec) -> DiscreteMeasure:
    """Reweight atoms by ``exp(sign * 2 t p(lambda))`` and renormalize."""
    lam = sigma.locations
    expo = spec.sign * 2.0 * spec.t * spec.p(lam)
    if np.any(np.abs(expo) > EXP_LIMIT):
        raise OverflowGuard("flow exponent exceeds 700; use a shorter time step")
    logw = np.log(sigma.weights) + expo
    w = np.exp(logw - logw.max())
    return DiscreteMeasure.from_arrays(lam, w, normalize=True)


def flow_finite(T: TridiagonalMatrix, spec: FlowSpec) -> TridiagonalMatrix:
    """Flow a finite Jacobi matrix through its first-site spectral measure."""
    if spec.t == 0.0:
        return T
    sigma = deform_measure(measure_from_jacobi(T), spec)
    q = jacobi_from_measure(sigma, T.size)
    return TridiagonalMatrix(q.b, q.a)


@dataclass(frozen=True)
class PositiveSolution:
    """Positive solution of ``H f = E f`` on sites ``start .. start+len-1``.

    ``log_values[k]`` is ``log f_n`` at ``n = start + k``, shifted so the
    maximum is 0 (logs avoid underflow for strongly decaying solutions).
    """

    start: int
    E: float
    log_values: np.ndarray = field(repr=False)

    @property
    def end(self) -> int:
        return self.start + len(self.log_values) - 1

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def at(self, n: int) -> float:
        return float(np.exp(self.log_values[n - self.start]))

    def rescaled(self, factor: float) -> "PositiveSolution":
        return PositiveSolution(self.start, self.E, self.log_values + math.log(factor))


def _background_root(bg: FreeBackground, E: float) -> float:
    # W > 1 with a0 (W + 1/W) = E - b0
    x = (E - bg.b0) / bg.a0
    return 0.5 * (x + math.sqrt(x * x - 4.0))


def _check_energy(q: JacobiCoefficients, E: float) -> None:
    bg = q.background
    if bg is not None and E <= bg.b0 + 2.0 * bg.a0 + SPECTRUM_MARGIN:
        raise EnergyInsideSpectrum(f"E={E} lies in the essential spectrum")
    lo, hi = q.window_start, q.window_end
    if bg is not None:
        lo, hi = lo - 1, hi + 1
    top = eigendecompose(truncate(q, lo, hi)).eigenvalues[-1]
    if E <= top + SPECTRUM_MARGIN:
        raise EnergyInsideSpectrum(f"E={E} is not above the top eigenvalue {top}")


def positive_solution(q: JacobiCoefficients, E: float) -> PositiveSolution:
    """Positive solution of ``H f = E f`` decaying to the right.

    The ratios ``e_n`` obey ``e_n = E - b_n - a_{n+1}^2 / e_{n+1}``, a
    contraction when run leftwards, started from the exact background value
    ``a0 W`` to the right of the window.  With a free background the
    solution is continued to the left until ``e_n`` has settled back to its
    background value, so the returned window covers the whole nontrivial part.
    """
    E = float(E)
    _check_energy(q, E)
    lo, hi = q.window_start, q.window_end
    bg = q.background
    e: dict[int, float] = {}
    if bg is None:
        e[hi] = E - q.b_at(hi)
        n = hi - 1
    else:
        fixed = bg.a0 * _background_root(bg, E)
        e[hi + 1] = fixed
        n = hi
    while True:
        if bg is None and n < lo:
            break
        if bg is not None and n < lo:
            if abs(e[n + 1] - fixed) <= 4 * np.finfo(float).eps * fixed:
                break
            if lo - n > TAIL_LIMIT:
                break
        en = E - q.b_at(n) - q.a_at(n + 1) ** 2 / e[n + 1]
        if not en > 0:
            raise SignChange(f"positive solution changes sign near site {n}")
        e[n] = en
        n -= 1
    start, end = min(e), max(e)
    logf = np.zeros(end - start + 1)
    for k in range(1, len(logf)):
        site = start + k
        logf[k] = logf[k - 1] + math.log(q.a_at(site) / e[site])
    return PositiveSolution(start, E, logf - logf.max())


def darboux_from_solution(q: JacobiCoefficients, sol: PositiveSolution) -> JacobiCoefficients:
    """Darboux transform driven by the ratios of a given positive solution.

    Only ``f_{n-1} / f_n`` enters, so rescaling ``f`` leaves the result unchanged.
    """
    E = sol.E
    start, end = sol.start, sol.end
    logf = sol.log_values
    free = q.background is not None
    # e_n = a_n f_{n-1} / f_n; on a finite chain the left end has a_start = 0
    e = {n: q.a_at(n) * math.exp(logf[n - start - 1] - logf[n - start]) for n in range(start + 1, end + 1)}
    tail = (q.a_at(start + 1) ** 2 / e[start + 1]) if end > start else 0.0
    e[start] = E - q.b_at(start) - tail
    b_new, a_new = [], []
    for n in range(start, end + 1):
        an_sq = q.a_at(n) ** 2 if (free or n > start) else 0.0
        b_new.append(E - e[n] - an_sq / e[n])
        if n > start:
            a_new.append(q.a_at(n) * math.sqrt(e[n - 1] / e[n]))
    if free:
        # e has settled to its background value left of start, so a_start is unchanged
        a_new.insert(0, q.a_at(start))
    return JacobiCoefficients(start, tuple(a_new), tuple(b_new), q.background)


def darboux_step(q: JacobiCoefficients, zeta: float) -> JacobiCoefficients:
    """One Darboux transformation at energy ``zeta + 1/zeta`` (``|zeta| > 1``)."""
    zeta = float(zeta)
    if not abs(zeta) > 1.0:
        raise ValueError("zeta must satisfy |zeta| > 1")
    sol = positive_solution(q, zeta + 1.0 / zeta)
    return darboux_from_solution(q, sol)


def darboux_power_exp(q: JacobiCoefficients, t: float, n_steps: int) -> JacobiCoefficients:
    """``n_steps`` Darboux steps at ``zeta = n_steps / t``.

    Approximates the ``p(lambda) = lambda`` flow run for time ``t / 2``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if t == 0:
        return q
    zeta = n_steps / t
    out = q
    for _ in range(n_steps):
        out = darboux_step(out, zeta)
    return out


__all__ = [
    "SIGN",
    "FlowSpec",
    "deform_measure",
    "flow_finite",
    "PositiveSolution",
    "positive_solution",
    "darboux_from_solution",
    "darboux_step",
    "darboux_power_exp",
]
