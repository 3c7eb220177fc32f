"""Coefficient sequences with Gamma-type growth envelopes.

A sequence ``a_0, a_1, ...`` belongs to ``E(c, alpha)`` when
``|a_k| <= c^k Gamma(alpha k + 1)`` for every ``k >= 1``.  Envelope
comparisons are done on logarithms so that large ``k`` does not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EnvelopeViolation

LOG_SLACK = 1e-12


def log_envelope(c: float, alpha: float, k: int) -> float:
    """``log(c^k Gamma(alpha k + 1))``."""
    return k * math.log(c) + math.lgamma(alpha * k + 1.0)


def _log_abs(x) -> float:
    m = abs(x)
    return math.log(m) if m > 0 else -math.inf


def _within(value_abs: float, log_bound: float) -> bool:
    if value_abs == 0:
        return True
    return math.log(value_abs) <= log_bound + LOG_SLACK * max(1.0, abs(log_bound))


@dataclass(frozen=True)
class EnvelopeSeries:
    """Coefficients ``a_0..a_K`` certified to lie in ``E(c, alpha)``."""

    coeffs: tuple
    c: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if not (self.c > 0 and self.alpha > 0):
            raise ValueError("c and alpha must be positive")
        for k in range(1, len(self.coeffs)):
            if not _within(abs(self.coeffs[k]), log_envelope(self.c, self.alpha, k)):
                raise EnvelopeViolation(f"|a_{k}| exceeds c^k Gamma(alpha k + 1)")

    @classmethod
    def tight(cls, coeffs: Sequence, alpha: float) -> "EnvelopeSeries":
        """Certificate with the smallest ``c`` the given coefficients allow."""
        logs = [(_log_abs(x) - math.lgamma(alpha * k + 1.0)) / k for k, x in enumerate(coeffs) if k >= 1]
        finite = [v for v in logs if v > -math.inf]
        c = math.exp(max(finite)) if finite else 1.0
        return cls(tuple(coeffs), c * (1.0 + 1e-12), alpha)

    def __len__(self):
        return len(self.coeffs)


def _convolve(a: Sequence, b: Sequence) -> list:
    K = min(len(a), len(b))
    return [sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(K)]


def conv_bound(a0, b0, c1: float, c2: float, alpha: float, k: int) -> float:
    """Upper bound for ``|(a * b)_k|`` when ``a in E(c1, alpha)``, ``b in E(c2, alpha)``."""
    if c1 == c2:
        geo = (k - 1) * c1 ** (k - 2) if k >= 2 else 0.0
    else:
        geo = (c2 ** (k - 1) - c1 ** (k - 1)) / (c2 - c1)
    return (abs(a0) * c2**k + abs(b0) * c1**k + c1 * c2 * geo) * math.gamma(alpha * k + 1.0)


def conv_env(a: EnvelopeSeries, b: EnvelopeSeries) -> EnvelopeSeries:
    """Cauchy product, checked against the product envelope bound."""
    if a.alpha != b.alpha:
        raise ValueError("envelopes must share alpha")
    out = _convolve(a.coeffs, b.coeffs)
    for k in range(1, len(out)):
        bound = conv_bound(a.coeffs[0], b.coeffs[0], a.c, b.c, a.alpha, k)
        if abs(out[k]) > bound * (1.0 + 1e-12):
            raise EnvelopeViolation(f"product coefficient {k} exceeds its bound")
    return EnvelopeSeries.tight(out, a.alpha)


def inv_env(a: EnvelopeSeries) -> EnvelopeSeries:
    """Reciprocal series of ``a`` with ``a_0 = 1``, checked against ``(2c)^k Gamma(alpha k + 1) / 2``."""
    if a.coeffs[0] != 1:
        raise ValueError("reciprocal needs a_0 = 1")
    K = len(a.coeffs)
    inv = [1.0] + [0.0] * (K - 1)
    for k in range(1, K):
        inv[k] = -sum(a.coeffs[j] * inv[k - j] for j in range(1, k + 1))
    for k in range(1, K):
        scale = sum(abs(a.coeffs[j] * inv[k - j]) for j in range(k + 1))
        resid = sum(a.coeffs[j] * inv[k - j] for j in range(k + 1))
        if abs(resid) > 1e-12 * max(scale, 1.0):
            raise EnvelopeViolation(f"reciprocal identity fails at k={k}")
        if not _within(abs(inv[k]), math.log(0.5) + log_envelope(2.0 * a.c, a.alpha, k)):
            raise EnvelopeViolation(f"reciprocal coefficient {k} exceeds its bound")
    return EnvelopeSeries.tight(inv, a.alpha)


def phi_coeffs(J: int) -> np.ndarray:
    """``p_1..p_J`` with ``(1 - sqrt(1 - z)) / z = sum_j p_j z^(j-1)``."""
    if J < 1:
        raise ValueError("J must be at least 1")
    j = np.arange(1, J + 1, dtype=float)
    # central binomial C(2j, j) / 4^j via its ratio recursion
    central = np.cumprod((2.0 * j - 1.0) / (2.0 * j))
    return central / (2.0 * j - 1.0)


def phi_coeffs_exact(J: int) -> list[Fraction]:
    return [Fraction(math.comb(2 * j, j), 4**j * (2 * j - 1)) for j in range(1, J + 1)]


def _binom_table(n: int) -> list[list[Fraction]]:
    # T[k][n] = coefficient of zeta^-n in (zeta + 1/zeta)^-k, for 1 <= k <= n
    T = [[Fraction(0)] * (n + 1) for _ in range(n + 1)]
    for k in range(1, n + 1):
        for j in range(0, (n - k) // 2 + 1):
            T[k][k + 2 * j] = Fraction((-1) ** j * math.comb(k + j - 1, j))
    return T


def _apply_real(seq: Sequence, direction: str, exact: bool) -> list:
    n = len(seq)
    x = [v if isinstance(v, Fraction) else Fraction(float(v)) for v in seq]
    T = _binom_table(n)
    if direction == "sigma_to_mu":
        out = [sum(x[k - 1] * T[k][m] for k in range(1, m + 1)) for m in range(1, n + 1)]
    else:
        # unit lower-triangular in the (k, m) layout: forward substitution
        out = []
        for m in range(1, n + 1):
            s = x[m - 1] - sum(out[k - 1] * T[k][m] for k in range(1, m))
            out.append(s)
    return out if exact else [float(v) for v in out]


def change_variable(seq: Sequence, direction: str, exact: bool | None = None) -> list:
    """Convert between expansions in ``zeta^-1`` and in ``(zeta + zeta^-1)^-1``.

    ``sigma_to_mu`` takes ``sigma_1..sigma_{L-1}`` of
    ``sum sigma_k (zeta + 1/zeta)^-k`` and returns ``mu_1..mu_{L-1}`` of the
    same function in powers ``zeta^-k``; ``mu_to_sigma`` inverts it.  The
    arithmetic is exact (rationals) internally.  With ``exact`` (the default
    when every input is an ``int`` or ``Fraction``) the result is returned as
    ``Fraction`` values; otherwise it is rounded to binary64.  The map is
    badly conditioned (entries grow like binomial coefficients), so a float
    round trip loses roughly one digit per two terms beyond length 10.
    """
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for v in seq)
    if direction not in ("sigma_to_mu", "mu_to_sigma"):
        raise ValueError("direction must be 'sigma_to_mu' or 'mu_to_sigma'")
    if len(seq) > 63:
        raise ValueError("sequences are limited to length 63")
    if any(isinstance(v, complex) for v in seq):
        re = _apply_real([complex(v).real for v in seq], direction, False)
        im = _apply_real([complex(v).imag for v in seq], direction, False)
        return [complex(r, i) for r, i in zip(re, im)]
    return _apply_real(seq, direction, exact)


def sigma_bound(c: float, alpha: float, k: int) -> float:
    """``2^k (k c Gamma(alpha + 1) + k c^k Gamma(alpha k + 1))``."""
    return 2.0**k * (k * c * math.gamma(alpha + 1.0) + k * c**k * math.gamma(alpha * k + 1.0))


@dataclass(frozen=True)
class IntegrabilityReport:
    passes_growth: bool
    c1: float
    growth_rate: float
    predicted_c_prime_bound: float


def exp_integrability_check(even_moments: Sequence[float], alpha: float, c: float,
                            rate_limit: float = 1.1) -> IntegrabilityReport:
    """Test whether ``x_k <= c1 c^(-2k/alpha) Gamma(2k/alpha + 1)`` with a bounded ``c1``.

    ``c1`` is the largest observed ratio.  A finite list always has some
    ``c1``; the sequence is accepted when the ratios stop growing, judged by
    the geometric growth rate between ``k = K/2`` and ``k = K``.
    """
    K = len(even_moments) - 1
    if K < 3:
        raise ValueError("need at least x_0..x_3")
    if not (alpha > 0 and c > 0):
        raise ValueError("alpha and c must be positive")
    logr = []
    for k, x in enumerate(even_moments):
        if x < 0:
            raise ValueError("even moments are nonnegative")
        lx = math.log(x) if x > 0 else -math.inf
        logr.append(lx + (2.0 * k / alpha) * math.log(c) - math.lgamma(2.0 * k / alpha + 1.0))
    c1 = math.exp(max(logr))
    half = K // 2
    if logr[K] == -math.inf:
        rate = 0.0
    elif logr[half] == -math.inf:
        rate = math.inf
    else:
        rate = math.exp((logr[K] - logr[half]) / (K - half))
    return IntegrabilityReport(rate <= rate_limit, c1, rate, c)


def moment_growth_bound(c1: float, alpha: float, k: int, x1: float) -> float:
    """``x1 (9 c1^2)^(k-1) ((k+1)!/2)^(2/alpha)``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return x1 * (9.0 * c1 * c1) ** (k - 1) * (math.factorial(k + 1) / 2.0) ** (2.0 / alpha)


__all__ = [
    "EnvelopeSeries",
    "log_envelope",
    "conv_bound",
    "conv_env",
    "inv_env",
    "phi_coeffs",
    "phi_coeffs_exact",
    "change_variable",
    "sigma_bound",
    "IntegrabilityReport",
    "exp_integrability_check",
    "moment_growth_bound",
]
