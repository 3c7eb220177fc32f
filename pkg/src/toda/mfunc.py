"""Calculus of whole-line m-functions.

An :class:`MRep` is a base m-function (built from the two half-line spectral
measures) followed by a chain of transforms:

* ``DEta(eta)``:  ``phi(z) - (m(eta) - m(0)) * (1 - (phi(z) - phi(eta)) / (m(z) - m(eta)))``
* ``DZero``:      ``phi(z) - m'(0) / (m(z) - m(0))``
* ``Reflect``:    ``phi(z) - A / (phi(z) - m(1/z))`` with ``A = lim z (phi(z) - m(z))``

with ``phi(z) = z + 1/z``.  ``DEta(eta)`` is the m-function of one Darboux
step at ``eta``; ``DZero`` shifts the lattice so that the new site 0 is the
old site -1 (``SHIFT_LEFT``); ``Reflect`` maps site ``n`` to ``1 - n``.

Constants of each chain prefix (``m(0)``, ``m'(0)``, ``m(eta)``, ``A``) are
memoized.  ``m(0)``/``m'(0)`` and ``A`` of a non-empty prefix are Taylor
coefficients at a removable singularity; they are obtained by trapezoidal
Cauchy integrals on circles whose radius is halved until two successive
estimates agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import (
    ChainEdgeFailure,
    ChainTooDeep,
    ExtrapolationDivergence,
    NonPositiveASquared,
    PoleAtZ,
    PoleHit,
)
from .lattice import JacobiCoefficients
from .spectral import DiscreteMeasure, stieltjes
from .weyl import half_line_measure

POLE_TOL = 1e-13
MAX_COEFF_SPAN = 16
CAUCHY_POINTS = 64
CAUCHY_TOL = 1e-11

# Orientation of DZero, fixed by the calibration test against a finite
# non-symmetric lattice: after a left shift the new b_0 is the old b_{-1}.
SHIFT_LEFT = -1


@dataclass(frozen=True)
class DEta:
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "eta", float(self.eta))
        if abs(self.eta) <= 1.0:
            raise ValueError("eta must satisfy |eta| > 1")


@dataclass(frozen=True)
class DZero:
    pass


@dataclass(frozen=True)
class Reflect:
    pass


Transform = Union[DEta, DZero, Reflect]


def phi(z: complex) -> complex:
    return z + 1.0 / z


@dataclass(frozen=True)
class SpectralBase:
    sigma_plus: DiscreteMeasure
    a1: float
    sigma_minus: DiscreteMeasure
    a0: float
    b0: float

    def __post_init__(self):
        if not (self.sigma_plus.normalized and self.sigma_minus.normalized):
            raise ValueError("base measures must be normalized")
        if not (self.a1 > 0 and self.a0 > 0):
            raise ValueError("a0 and a1 must be positive")

    def __call__(self, z: complex) -> complex:
        r = abs(z)
        if r == 0.0:
            return complex(self.b0)
        if abs(r - 1.0) < 1e-14:
            raise PoleHit(f"|z| = 1 at z={z}")
        w = phi(z)
        try:
            if r > 1.0:
                return w + self.a1**2 * stieltjes(self.sigma_plus, w)
            return -(self.a0**2) * stieltjes(self.sigma_minus, w) + self.b0
        except PoleAtZ as exc:
            raise PoleHit(str(exc)) from exc

    @property
    def edge(self) -> tuple[float, float, float]:
        return self.a1**2, self.b0, self.a0**2


@dataclass(frozen=True)
class FreeBase:
    """The free lattice ``a_n = 1, b_n = 0``, whose m-function is ``m(z) = z``."""

    def __call__(self, z: complex) -> complex:
        return complex(z)

    @property
    def edge(self) -> tuple[float, float, float]:
        return 1.0, 0.0, 1.0


Base = Union[SpectralBase, FreeBase]


@dataclass(frozen=True)
class MRep:
    base: Base
    chain: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        for op in self.chain:
            if not isinstance(op, (DEta, DZero, Reflect)):
                raise TypeError(f"unknown transform {op!r}")

    def append(self, *ops: Transform) -> "MRep":
        return MRep(self.base, self.chain + tuple(ops))

    @classmethod
    def free(cls) -> "MRep":
        return cls(FreeBase())

    @classmethod
    def from_lattice(cls, q: JacobiCoefficients, M: int) -> "MRep":
        """Base built from the size-``M`` sections on both sides of site 0."""
        base = SpectralBase(
            half_line_measure(q, "right", M),
            q.a_at(1),
            half_line_measure(q, "left", M),
            q.a_at(0),
            q.b_at(0),
        )
        return cls(base)

    def __call__(self, z: complex) -> complex:
        return eval_m(self, z)


def _taylor_at_zero(f, r0: float = 0.5, what: str = "m") -> tuple[complex, complex]:
    """``f(0)`` and ``f'(0)`` of a function analytic near 0 (possibly only
    known off 0) by Cauchy integrals with radius halving."""
    k = np.arange(CAUCHY_POINTS)
    unit = np.exp(2j * np.pi * (k + 0.5) / CAUCHY_POINTS)
    prev = None
    r = r0
    for _ in range(30):
        try:
            vals = np.array([f(r * u) for u in unit])
        except (PoleHit, ZeroDivisionError):
            vals = None
        if vals is not None and np.all(np.isfinite(vals)):
            c0 = vals.mean()
            c1 = (vals / unit).mean() / r
            if prev is not None:
                d0 = abs(c0 - prev[0])
                d1 = abs(c1 - prev[1])
                if d0 <= CAUCHY_TOL * (1 + abs(c0)) and d1 <= 1e3 * CAUCHY_TOL * (1 + abs(c1)):
                    return c0, c1
            prev = (c0, c1)
        else:
            prev = None
        r *= 0.5
    raise ExtrapolationDivergence(f"Cauchy estimate of {what} did not settle")


@lru_cache(maxsize=4096)
def _zero_data(base: Base, prefix: tuple) -> tuple[float, float]:
    if not prefix:
        _, b0, a0sq = base.edge
        return b0, a0sq
    c0, c1 = _taylor_at_zero(lambda z: _eval(base, prefix, z), what="m(0)")
    return c0.real, c1.real


@lru_cache(maxsize=4096)
def _edge_constant(base: Base, prefix: tuple) -> float:
    if not prefix:
        return base.edge[0]

    def h(w):
        z = 1.0 / w
        return (phi(z) - _eval(base, prefix, z)) * z

    c0, _ = _taylor_at_zero(h, what="edge constant")
    return c0.real


@lru_cache(maxsize=4096)
def _eta_value(base: Base, prefix: tuple, eta: float) -> float:
    return _eval(base, prefix, eta).real


def _guard(x: complex) -> complex:
    if abs(x) < POLE_TOL:
        raise PoleHit("denominator vanished")
    return x


def _eval(base: Base, chain: tuple, z: complex) -> complex:
    if not chain:
        return base(z)
    op = chain[-1]
    prev = chain[:-1]
    if z == 0:
        return complex(_zero_data(base, chain)[0])
    if isinstance(op, DZero):
        m0, dm0 = _zero_data(base, prev)
        return phi(z) - dm0 / _guard(_eval(base, prev, z) - m0)
    if isinstance(op, DEta):
        eta = op.eta
        m0, _ = _zero_data(base, prev)
        me = _eta_value(base, prev, eta)
        mz = _eval(base, prev, z)
        return phi(z) - (me - m0) * (1.0 - (phi(z) - phi(eta)) / _guard(mz - me))
    # Reflect
    try:
        A = _edge_constant(base, prev)
    except ExtrapolationDivergence as exc:
        raise ChainEdgeFailure(str(exc)) from exc
    return phi(z) - A / _guard(phi(z) - _eval(base, prev, 1.0 / z))


def eval_m(m: MRep, z: complex) -> complex:
    """Value of the fully composed m-function at ``z``."""
    return _eval(m.base, m.chain, complex(z))


def extract_edge(m: MRep) -> tuple[float, float, float]:
    """``(a_1^2, b_0, a_0^2)`` of the lattice represented by ``m``."""
    if not m.chain:
        return m.base.edge
    a1sq = _edge_constant(m.base, m.chain)
    b0, a0sq = _zero_data(m.base, m.chain)
    return a1sq, b0, a0sq


def shift(m: MRep, direction: str) -> MRep:
    """m-function of the lattice shifted by one site.

    ``left``: new site 0 is the old site -1.  ``right``: new site 0 is the old
    site 1 (implemented as ``Reflect, DZero, Reflect``).
    """
    if direction == "left":
        return m.append(DZero())
    if direction == "right":
        return m.append(Reflect(), DZero(), Reflect())
    raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")


def _centered_at(m: MRep, n: int) -> MRep:
    # representation in which the old site n sits at 0
    out = m
    direction = "right" if n > 0 else "left"
    for _ in range(abs(n)):
        out = shift(out, direction)
    return out


def coefficients_from_m(m: MRep, n_lo: int, n_hi: int) -> JacobiCoefficients:
    """Recover ``a_n, b_n`` for ``n_lo <= n <= n_hi`` from an m-function."""
    if n_hi < n_lo:
        raise ValueError("empty index range")
    if n_hi - n_lo > MAX_COEFF_SPAN:
        raise ChainTooDeep(f"span {n_hi - n_lo} exceeds {MAX_COEFF_SPAN}")
    a, b = [], []
    for n in range(n_lo, n_hi + 1):
        b.append(eval_m(_centered_at(m, n), 0.0).real)
        a_sq = extract_edge(_centered_at(m, n - 1))[0]
        if not a_sq > 0:
            raise NonPositiveASquared(f"a_{n}^2 = {a_sq}")
        a.append(math.sqrt(a_sq))
    return JacobiCoefficients(n_lo, tuple(a), tuple(b), None)


def herglotz_ratio(m: MRep, z: complex) -> float:
    """``Im m(z) / Im z``; positive for admissible m-functions off the unit disk."""
    z = complex(z)
    return eval_m(m, z).imag / z.imag


__all__ = [
    "DEta",
    "DZero",
    "Reflect",
    "SpectralBase",
    "FreeBase",
    "MRep",
    "eval_m",
    "extract_edge",
    "shift",
    "coefficients_from_m",
    "herglotz_ratio",
    "SHIFT_LEFT",
    "phi",
]

