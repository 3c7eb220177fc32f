"""Fundamental solutions, Weyl disks and Weyl functions.

The right Weyl function ``m_plus`` is the Stieltjes transform of the spectral
measure of the half-line operator on sites ``1, 2, ...`` at ``delta_1``; the
left one ``m_minus`` uses sites ``-1, -2, ...`` at ``delta_{-1}``.  Both are
approximated by a finite section of caller-chosen size ``M``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateDisk, NearSpectrum
from .lattice import JacobiCoefficients, TridiagonalMatrix, truncate
from .spectral import DiscreteMeasure, measure_from_jacobi, stieltjes

RESCALE_AT = 1e150


@dataclass(frozen=True)
class FundamentalSolutions:
    """``c_n`` and ``s_n`` for ``n = 0..L+1``.

    If the recurrence had to be rescaled, the true values are
    ``c[n] * exp(log_scale[n])`` (same for ``s``).
    """

    c: np.ndarray
    s: np.ndarray
    log_scale: np.ndarray

    def wronskian(self, n: int) -> complex:
        """``c_n s_{n+1} - c_{n+1} s_n`` in true (unscaled) units."""
        w = self.c[n] * self.s[n + 1] - self.c[n + 1] * self.s[n]
        return w * math.exp(self.log_scale[n] + self.log_scale[n + 1])


def fundamental_solutions(q: JacobiCoefficients, z: complex, L: int) -> FundamentalSolutions:
    """Solutions of ``a_{n+1} f_{n+1} + a_n f_{n-1} + b_n f_n = z f_n`` (``1 <= n <= L``)
    with ``c_0 = s_1 = 1`` and ``c_1 = s_0 = 0``."""
    if L < 1:
        raise ValueError("L must be at least 1")
    z = complex(z)
    c = np.zeros(L + 2, dtype=complex)
    s = np.zeros(L + 2, dtype=complex)
    logs = np.zeros(L + 2)
    c[0], c[1] = 1.0, 0.0
    s[0], s[1] = 0.0, 1.0
    for n in range(1, L + 1):
        an, an1, bn = q.a_at(n), q.a_at(n + 1), q.b_at(n)
        c[n + 1] = ((z - bn) * c[n] - an * c[n - 1]) / an1
        s[n + 1] = ((z - bn) * s[n] - an * s[n - 1]) / an1
        logs[n + 1] = logs[n]
        size = abs(c[n + 1]) + abs(s[n + 1])
        if size > RESCALE_AT:
            # rescale the last two entries jointly; earlier ones keep their scale
            c[n : n + 2] /= size
            s[n : n + 2] /= size
            logs[n] += math.log(size)
            logs[n + 1] = logs[n]
    return FundamentalSolutions(c, s, logs)


@dataclass(frozen=True)
class WeylDisk:
    """Disk of admissible values of ``a_1^2 m_plus(z)`` given sites ``1..L``."""

    center: complex
    radius: float
    L: int
    z: complex

    def contains(self, m: complex, tol: float = 1e-12) -> bool:
        return abs(m - self.center) <= self.radius * (1.0 + tol) + tol

    def boundary_points(self, count: int = 8) -> list[complex]:
        return [self.center + self.radius * cmath.exp(2j * math.pi * k / count) for k in range(count)]


def disk_defining_gap(q: JacobiCoefficients, z: complex, L: int, m: complex) -> float:
    """``sum_{n<=L} |c_n - m s_n / a_1|^2 - Im m / Im z``; nonpositive inside the disk."""
    fs = fundamental_solutions(q, z, L)
    a1 = q.a_at(1)
    scale = np.exp(fs.log_scale[1 : L + 1])
    f = (fs.c[1 : L + 1] - m * fs.s[1 : L + 1] / a1) * scale
    return float(np.sum(np.abs(f) ** 2) - m.imag / complex(z).imag)


def weyl_disk(q: JacobiCoefficients, z: complex, L: int) -> WeylDisk:
    """Center and radius of the Weyl disk ``D_L(z)``.

    Completing the square in the defining inequality gives center
    ``-a_1 K / (2i |P|)`` and radius ``a_1 |W| / (2 |P|)`` with
    ``P = Im(s_L conj s_{L+1})``, ``K = c_L conj s_{L+1} - conj s_L c_{L+1}``
    and ``W = c_L s_{L+1} - s_L c_{L+1} = a_1 / a_{L+1}``.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Weyl disks need Im z > 0")
    if L < 1:
        raise ValueError("L must be at least 1")
    fs = fundamental_solutions(q, z, L)
    a1 = q.a_at(1)
    cL, cL1, sL, sL1 = fs.c[L], fs.c[L + 1], fs.s[L], fs.s[L + 1]
    P = (sL * sL1.conjugate()).imag
    if abs(P) < 1e-14 * (abs(sL) * abs(sL1) or 1.0):
        raise DegenerateDisk(f"Im(s_L conj s_L+1) vanishes at L={L}")
    K = cL * sL1.conjugate() - sL.conjugate() * cL1
    W = cL * sL1 - sL * cL1
    center = -a1 * K / (2j * abs(P))
    radius = a1 * abs(W) / (2.0 * abs(P))
    return WeylDisk(complex(center), float(radius), L, z)


def left_section(q: JacobiCoefficients, M: int) -> TridiagonalMatrix:
    """Section of the reflected left half-line: sites ``-1, -2, ..., -M``."""
    diag = tuple(q.b_at(-k) for k in range(1, M + 1))
    offdiag = tuple(q.a_at(-k) for k in range(1, M))
    return TridiagonalMatrix(diag, offdiag)


@lru_cache(maxsize=512)
def half_line_measure(q: JacobiCoefficients, side: str, M: int) -> DiscreteMeasure:
    """Spectral measure of the size-``M`` section on the given side of site 0."""
    if side == "right":
        T = truncate(q, 1, M)
    elif side == "left":
        T = left_section(q, M)
    else:
        raise ValueError(side)
    return measure_from_jacobi(T)


def m_plus(q: JacobiCoefficients, z: complex, M: int) -> complex:
    """Truncated right Weyl function from the sites ``1..M``."""
    return stieltjes(half_line_measure(q, "right", M), z)


def m_minus(q: JacobiCoefficients, z: complex, M: int) -> complex:
    """Truncated left Weyl function from the sites ``-1..-M``."""
    return stieltjes(half_line_measure(q, "left", M), z)


def m_plus_limit(q: JacobiCoefficients, z: complex, tol: float = 1e-12, M0: int = 16, M_max: int = 1024) -> tuple[complex, int, float]:
    """Double ``M`` until successive truncated values agree to ``tol``.

    Returns ``(value, M, last_difference)``.
    """
    M = M0
    prev = m_plus(q, z, M)
    while True:
        M *= 2
        cur = m_plus(q, z, M)
        diff = abs(cur - prev)
        if diff < tol * max(1.0, abs(cur)) or M >= M_max:
            return cur, M, diff
        prev = cur


def phi(z: complex) -> complex:
    return z + 1.0 / z


def m_whole(q: JacobiCoefficients, z: complex, M: int) -> complex:
    """Whole-line m-function ``z + 1/z + a_1^2 m_+`` outside the unit circle and
    ``-a_0^2 m_- + b_0`` inside it, both evaluated at ``z + 1/z``."""
    z = complex(z)
    r = abs(z)
    if abs(r - 1.0) < 1e-12 or r == 0.0:
        raise NearSpectrum(f"|z| = {r} is on the unit circle or at the origin")
    w = phi(z)
    if r > 1.0:
        return w + q.a_at(1) ** 2 * m_plus(q, w, M)
    return -(q.a_at(0) ** 2) * m_minus(q, w, M) + q.b_at(0)


def resolvent_diagonal(q: JacobiCoefficients, w: complex, M: int) -> complex:
    """``(H_q - w)^{-1}(0, 0)`` through the two Weyl functions."""
    denom = q.a_at(1) ** 2 * m_plus(q, w, M) + q.a_at(0) ** 2 * m_minus(q, w, M) + w - q.b_at(0)
    if abs(denom) < 1e-12:
        raise NearSpectrum(f"w={w} is too close to the spectrum")
    return -1.0 / denom
