"""Direct integration of the Toda lattice and its exact solution families.

Equations of motion (Flaschka form)::

    da_n/dt = a_n (b_n - b_{n-1})
    db_n/dt = 2 (a_{n+1}^2 - a_n^2)

The integrator is an embedded Dormand-Prince 5(4) pair with PI step-size
control.  States may carry leading batch dimensions, so an ensemble of
lattices can be advanced in one call.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConvergenceFailure, DomainError, StepSizeUnderflow
from .lattice import JacobiCoefficients


@dataclass(frozen=True)
class OpenEnds:
    """Coefficients outside the window are zero."""


@dataclass(frozen=True)
class Periodic:
    """Indices wrap around the window; requires ``len(a) == len(b)``."""


@dataclass(frozen=True)
class Driven:
    """Coefficients outside the window are prescribed functions of time.

    ``outside(n, t)`` returns ``(a_n, b_n)``; typically an exact family.
    """

    outside: Callable[[int, float], tuple[float, float]]


Boundary = Union[OpenEnds, Periodic, Driven]


@dataclass(frozen=True)
class OdeRun:
    q0: JacobiCoefficients
    t_final: float
    boundary: Boundary = field(default_factory=OpenEnds)
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dense_output_times: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            tol = getattr(self, name)
            if not 1e-14 <= tol <= 1e-2:
                raise ValueError(f"{name}={tol} outside [1e-14, 1e-2]")
        times = tuple(float(x) for x in self.dense_output_times) or (float(self.t_final),)
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("output times must be nondecreasing")
        if times[0] < 0 or times[-1] > self.t_final:
            raise ValueError("output times must lie in [0, t_final]")
        object.__setattr__(self, "dense_output_times", times)
        if isinstance(self.boundary, Periodic) and len(self.q0.a) != len(self.q0.b):
            raise ValueError("periodic lattices need len(a) == len(b)")


@dataclass(frozen=True)
class Trajectory:
    """States at ``times``; ``a[k]`` lives on sites ``a_start..``, ``b[k]`` on ``window_start..``."""

    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    window_start: int
    a_start: int
    background: object = None

    def at(self, k: int) -> JacobiCoefficients:
        return JacobiCoefficients(self.window_start, tuple(self.a[k]), tuple(self.b[k]), self.background)

    def to_csv(self) -> str:
        """``t,n,a,b`` rows; a site without a stored coupling gets ``a = 0``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "n", "a", "b"])
        nb, na = self.b.shape[-1], self.a.shape[-1]
        offset = nb - na
        for k, t in enumerate(self.times):
            for j in range(nb):
                a_val = self.a[k, j - offset] if j >= offset else 0.0
                w.writerow([_fmt(t), self.window_start + j, _fmt(a_val), _fmt(self.b[k, j])])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def lattice_rhs(a: np.ndarray, b: np.ndarray, boundary: Boundary, t: float = 0.0,
                window_start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Vector field on arrays with the window on the last axis.

    ``a`` has the same length as ``b`` (it then includes ``a_{window_start}``)
    or one fewer entries.
    """
    nb, na = b.shape[-1], a.shape[-1]
    lead = nb - na
    if lead not in (0, 1):
        raise ValueError("len(a) must be len(b) or len(b) - 1")
    lo, hi = window_start, window_start + nb - 1
    shape = b.shape[:-1]
    if isinstance(boundary, Periodic):
        if lead:
            raise ValueError("periodic lattices need len(a) == len(b)")
        b_prev = np.roll(b, 1, axis=-1)
        a_next = np.roll(a, -1, axis=-1)
        return a * (b - b_prev), 2.0 * (a_next**2 - a**2)
    if isinstance(boundary, Driven):
        a_out_left, b_out_left = boundary.outside(lo, t) if lead else (None, None)
        b_left = boundary.outside(lo - 1, t)[1] if not lead else None
        a_right = boundary.outside(hi + 1, t)[0]
    else:
        a_out_left, b_left, a_right = 0.0, 0.0, 0.0
    # full a on lo..hi+1 and b on lo-1..hi (ghost values from the boundary)
    a_full = np.empty(shape + (nb + 1,))
    a_full[..., lead:nb] = a
    if lead:
        a_full[..., 0] = a_out_left
    a_full[..., nb] = a_right
    b_ext = np.empty(shape + (nb + 1,))
    b_ext[..., 1:] = b
    b_ext[..., 0] = 0.0 if lead else b_left
    da_full = a_full[..., :nb] * (b_ext[..., 1:] - b_ext[..., :-1])
    db = 2.0 * (a_full[..., 1:] ** 2 - a_full[..., :nb] ** 2)
    return da_full[..., lead:], db


def rhs(q: JacobiCoefficients, boundary: Boundary = OpenEnds(), t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives ``(da, db)`` of the stored coefficients."""
    return lattice_rhs(np.asarray(q.a), np.asarray(q.b), boundary, t, q.window_start)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0


def dopri_integrate(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, times: Sequence[float],
                    rtol: float, atol: float, h0: float | None = None, max_steps: int = 1_000_000,
                    stats: StepStats | None = None) -> np.ndarray:
    """Integrate ``y' = f(t, y)`` from ``t = 0`` and return ``y`` at ``times``.

    Steps are clipped to land exactly on each requested time.  The error norm
    is the RMS of ``err / (atol + rtol * |y|)`` over the last axis, maximized
    over any batch axes.
    """
    y = np.array(y0, dtype=float)
    times = [float(x) for x in times]
    out = np.empty((len(times),) + y.shape)
    t = 0.0
    k1 = f(t, y)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = max(h0, 1e-12)
    err_prev = 1e-4
    st = stats or StepStats()
    idx = 0
    while idx < len(times) and times[idx] <= t:
        out[idx] = y
        idx += 1
    steps = 0
    while idx < len(times):
        target = times[idx]
        h_min = 1e-14 * max(1.0, abs(t))
        if h < h_min:
            raise StepSizeUnderflow(f"step size {h:.3e} underflowed at t={t:.17g}")
        steps += 1
        if steps > max_steps:
            raise ConvergenceFailure(f"more than {max_steps} steps")
        clipped = t + h >= target
        step = target - t if clipped else h
        ks = [k1]
        for i in range(1, 7):
            yi = y + step * sum(a_ij * ks[j] for j, a_ij in enumerate(_A[i]) if a_ij != 0.0)
            ks.append(f(t + _C[i] * step, yi))
        y_new = y + step * sum(bi * ks[i] for i, bi in enumerate(_B) if bi != 0.0)
        err_vec = step * sum(ei * ks[i] for i, ei in enumerate(_E) if ei != 0.0)
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(err_vec)):
            st.rejected += 1
            h = 0.25 * step
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.sqrt(np.mean((err_vec / scale) ** 2, axis=-1))))
        if err <= 1.0:
            st.accepted += 1
            t = target if clipped else t + step
            y = y_new
            k1 = ks[6]  # first-same-as-last
            fac = 0.9 * max(err, 1e-10) ** -0.17 * err_prev**0.04
            h_next = step * min(10.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
            # keep the unclipped step size when a clip shortened this one
            h = max(h_next, h) if clipped else h_next
            while idx < len(times) and times[idx] <= t:
                out[idx] = y
                idx += 1
        else:
            st.rejected += 1
            h = step * max(0.2, 0.9 * err**-0.2)
    return out


def integrate(run: OdeRun) -> Trajectory:
    """Integrate ``run.q0`` and report the state at each requested time."""
    q = run.q0
    na = len(q.a)
    lo = q.window_start

    def f(t, y):
        da, db = lattice_rhs(y[..., :na], y[..., na:], run.boundary, t, lo)
        return np.concatenate([da, db], axis=-1)

    y0 = np.concatenate([np.asarray(q.a), np.asarray(q.b)])
    ys = dopri_integrate(f, y0, run.dense_output_times, run.rel_tol, run.abs_tol)
    background = q.background if isinstance(run.boundary, OpenEnds) else None
    return Trajectory(np.array(run.dense_output_times), ys[:, :na], ys[:, na:], lo, q.a_start, background)


@dataclass(frozen=True)
class Growing:
    """``a_n = sqrt(n) e^{gamma t}``, ``b_n = n gamma - (1 - e^{2 gamma t}) / gamma``."""

    gamma: float

    def __post_init__(self):
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")


@dataclass(frozen=True)
class Exploding:
    """``a_n = c sqrt(n(n-1) + alpha n + beta) / (1 - 2ct)``, ``b_n = c (2n + alpha) / (1 - 2ct)``.

    Blows up at ``t = 1 / (2c)``.
    """

    c: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.beta > (self.alpha - 1) ** 2 / 4:
            raise ValueError("need beta > (alpha - 1)^2 / 4")

    @property
    def blowup_time(self) -> float:
        return 1.0 / (2.0 * self.c)


ExactFamily = Union[Growing, Exploding]


def _family_terms(fam: ExactFamily, n: int, t: float, need_a: bool = True):
    # returns (a, b, da, db); a-values only where defined
    if isinstance(fam, Growing):
        g = fam.gamma
        if n < 0:
            raise DomainError("growing family is defined for n >= 0")
        eg = math.exp(g * t)
        b = n * g - (1.0 - eg * eg) / g
        db = 2.0 * eg * eg
        if n == 0:
            return 0.0, b, 0.0, db
        a = math.sqrt(n) * eg
        return a, b, g * a, db
    s = 1.0 - 2.0 * fam.c * t
    if not s > 0:
        raise DomainError(f"t={t} is past the blow-up time {fam.blowup_time}")
    c = fam.c
    b = c * (2 * n + fam.alpha) / s
    db = 2.0 * c * c * (2 * n + fam.alpha) / (s * s)
    rad = n * (n - 1) + fam.alpha * n + fam.beta
    if not rad > 0:
        if need_a:
            raise DomainError(f"radicand {rad} is not positive at n={n}")
        return math.nan, b, math.nan, db
    r = math.sqrt(rad)
    return c * r / s, b, 2.0 * c * c * r / (s * s), db


def exact_family(fam: ExactFamily, n: int, t: float) -> tuple[float, float]:
    """``(a_n(t), b_n(t))``; for the growing family ``a_0`` is reported as 0."""
    a, b, _, _ = _family_terms(fam, n, t)
    return a, b


def residual(fam: ExactFamily, n: int, t: float) -> tuple[float, float]:
    """Equation-of-motion residuals at site ``n`` using analytic time derivatives."""
    a, b, da, db = _family_terms(fam, n, t)
    _, b_prev, _, _ = _family_terms(fam, n - 1, t, need_a=False)
    a_next, _, _, _ = _family_terms(fam, n + 1, t)
    ra = da - a * (b - b_prev)
    rb = db - 2.0 * (a_next**2 - a**2)
    return ra, rb


def family_boundary(fam: ExactFamily) -> Driven:
    """Boundary condition feeding exact-family values outside a window."""
    return Driven(lambda n, t: exact_family(fam, n, t))


def family_window(fam: ExactFamily, lo: int, hi: int, t: float = 0.0) -> JacobiCoefficients:
    """Exact-family coefficients on ``lo..hi`` (``a`` includes ``a_lo``)."""
    a = [exact_family(fam, n, t)[0] for n in range(lo, hi + 1)]
    b = [exact_family(fam, n, t)[1] for n in range(lo, hi + 1)]
    return JacobiCoefficients(lo, tuple(a), tuple(b), None)


__all__ = [
    "OpenEnds",
    "Periodic",
    "Driven",
    "OdeRun",
    "Trajectory",
    "lattice_rhs",
    "rhs",
    "dopri_integrate",
    "integrate",
    "Growing",
    "Exploding",
    "exact_family",
    "residual",
    "family_boundary",
    "family_window",
]
