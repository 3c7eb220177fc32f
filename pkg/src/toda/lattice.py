"""Jacobi coefficients, finite sections and the tridiagonal eigensolver.

Index convention: the operator acts as

    (H u)_n = a_{n+1} u_{n+1} + a_n u_{n-1} + b_n u_n,

so ``a_n`` is the coupling between sites ``n-1`` and ``n``.  A
:class:`JacobiCoefficients` value stores ``b`` on the sites
``window_start .. window_end`` and ``a`` on a run of indices ending at
``window_end``.  ``a`` either has the same length as ``b`` (it then includes
the boundary coupling ``a_{window_start}``) or is one shorter (only the
couplings internal to the window are stored).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceFailure, IndexOutOfBackground

WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class FreeBackground:
    """Constant continuation ``a_n = a0``, ``b_n = b0`` outside the window."""

    a0: float = 1.0
    b0: float = 0.0

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("background a0 must be positive")


@dataclass(frozen=True)
class JacobiCoefficients:
    window_start: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    background: FreeBackground | None = None

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "window_start", int(self.window_start))
        if not b:
            raise ValueError("window must contain at least one site")
        if len(a) not in (len(b), len(b) - 1):
            raise ValueError("len(a) must equal len(b) or len(b) - 1")
        if any(not (x > 0) or not math.isfinite(x) for x in a):
            raise ValueError("all a_n must be positive and finite")
        if any(not math.isfinite(x) for x in b):
            raise ValueError("all b_n must be finite")

    @property
    def window_end(self) -> int:
        return self.window_start + len(self.b) - 1

    @property
    def a_start(self) -> int:
        return self.window_start + len(self.b) - len(self.a)

    def a_at(self, n: int) -> float:
        k = n - self.a_start
        if 0 <= k < len(self.a):
            return self.a[k]
        if self.background is None:
            raise IndexOutOfBackground(f"a_{n} outside window and no background")
        return self.background.a0

    def b_at(self, n: int) -> float:
        k = n - self.window_start
        if 0 <= k < len(self.b):
            return self.b[k]
        if self.background is None:
            raise IndexOutOfBackground(f"b_{n} outside window and no background")
        return self.background.b0

    def has_a(self, n: int) -> bool:
        return self.background is not None or self.a_start <= n <= self.window_end

    def has_b(self, n: int) -> bool:
        return self.background is not None or self.window_start <= n <= self.window_end

    def a_range(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.a_at(n) for n in range(lo, hi + 1)], dtype=float)

    def b_range(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.b_at(n) for n in range(lo, hi + 1)], dtype=float)

    def to_dict(self) -> dict:
        if self.background is None:
            bg = {"kind": "none"}
        else:
            bg = {"kind": "free", "a0": self.background.a0, "b0": self.background.b0}
        return {
            "window_start": self.window_start,
            "a": list(self.a),
            "b": list(self.b),
            "background": bg,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JacobiCoefficients":
        bg = data.get("background") or {"kind": "none"}
        kind = bg.get("kind", "none").lower()
        if kind == "free":
            background = FreeBackground(float(bg.get("a0", 1.0)), float(bg.get("b0", 0.0)))
        elif kind == "none":
            background = None
        else:
            raise ValueError(f"unknown background kind {kind!r}")
        return cls(int(data["window_start"]), tuple(data["a"]), tuple(data["b"]), background)

    @classmethod
    def free(cls, a0: float = 1.0, b0: float = 0.0, lo: int = 0, hi: int = 0) -> "JacobiCoefficients":
        """Constant lattice, stored on ``[lo, hi]`` with a free background."""
        n = hi - lo + 1
        return cls(lo, (a0,) * n, (b0,) * n, FreeBackground(a0, b0))

    @classmethod
    def finite(cls, b: Sequence[float], a: Sequence[float], start: int = 1) -> "JacobiCoefficients":
        """Finite chain on ``start .. start+len(b)-1`` with internal couplings ``a``."""
        return cls(start, tuple(a), tuple(b), None)


@dataclass(frozen=True)
class TridiagonalMatrix:
    diag: tuple[float, ...]
    offdiag: tuple[float, ...] = ()

    def __post_init__(self):
        d = tuple(float(x) for x in self.diag)
        e = tuple(float(x) for x in self.offdiag)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)
        if not d:
            raise ValueError("empty matrix")
        if len(e) != len(d) - 1:
            raise ValueError("offdiag must have length size - 1")
        if any(not (x > 0) for x in e):
            raise ValueError("offdiag entries must be positive")

    @property
    def size(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        m = np.diag(np.asarray(self.diag))
        if self.size > 1:
            e = np.asarray(self.offdiag)
            m += np.diag(e, 1) + np.diag(e, -1)
        return m

    def to_lattice(self, start: int = 1) -> JacobiCoefficients:
        return JacobiCoefficients(start, self.offdiag, self.diag, None)


@dataclass(frozen=True)
class Eigensystem:
    eigenvalues: np.ndarray
    weights: np.ndarray
    underflow: bool = False
    vectors: np.ndarray | None = field(default=None, repr=False)


def truncate(q: JacobiCoefficients, lo: int, hi: int) -> TridiagonalMatrix:
    """Finite section of ``H_q`` on the sites ``lo..hi``."""
    if lo > hi:
        raise ValueError(f"empty section [{lo}, {hi}]")
    diag = tuple(q.b_at(n) for n in range(lo, hi + 1))
    offdiag = tuple(q.a_at(n) for n in range(lo + 1, hi + 1))
    return TridiagonalMatrix(diag, offdiag)


def _tql(d: list[float], e: list[float], z: list[list[float]], max_iter: int) -> None:
    # Implicit-shift QL on (d, e); e[i] couples d[i], d[i+1]; rotations are
    # accumulated into the rows of z (only those rows the caller asked for).
    n = len(d)
    eps = np.finfo(float).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ConvergenceFailure(f"QL did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflowed = False
            while i >= l:
                f = s * e[i]
                bb = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflowed = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * bb
                p = s * r
                d[i + 1] = g + p
                g = c * r - bb
                for row in z:
                    f = row[i + 1]
                    row[i + 1] = s * row[i] + c * f
                    row[i] = c * row[i] - s * f
                i -= 1
            if underflowed:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def eigendecompose(T: TridiagonalMatrix, vectors: bool = False, max_iter: int = 60) -> Eigensystem:
    """Eigenvalues and first-row weights of a symmetric tridiagonal matrix.

    The weights are the squared first components of the normalized
    eigenvectors, i.e. the atoms of the spectral measure at the first site.
    Weights below ``1e-300`` are set to zero and reported via ``underflow``.
    """
    n = T.size
    d = list(T.diag)
    e = list(T.offdiag) + [0.0]
    if vectors:
        z = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    else:
        z = [[1.0] + [0.0] * (n - 1)]
    _tql(d, e, z, max_iter)
    order = sorted(range(n), key=lambda i: d[i])
    lam = np.array([d[i] for i in order])
    w = np.array([z[0][i] ** 2 for i in order])
    tiny = w < WEIGHT_FLOOR
    underflow = bool(np.any(tiny & (w > 0)))
    w[tiny] = 0.0
    vec = None
    if vectors:
        vec = np.array(z)[:, order]
    return Eigensystem(lam, w, underflow, vec)


def apply_operator(q: JacobiCoefficients, u: dict[int, float], dirichlet: bool = False) -> dict[int, float]:
    """Apply ``H_q`` to a finitely supported vector given as ``{site: value}``.

    With ``dirichlet`` the operator is compressed to the stored window
    (sites outside it are absent); otherwise coefficients outside the window
    come from the background and raise :class:`IndexOutOfBackground` if none.
    """
    lo_w, hi_w = q.window_start, q.window_end
    out: dict[int, float] = {}

    def inside(n):
        return lo_w <= n <= hi_w

    for n, val in u.items():
        if val == 0.0:
            continue
        out[n] = out.get(n, 0.0) + q.b_at(n) * val
        # coupling n <-> n+1 carries a_{n+1}; n <-> n-1 carries a_n
        for m, idx in ((n + 1, n + 1), (n - 1, n)):
            if dirichlet and not (inside(m) and inside(n)):
                continue
            out[m] = out.get(m, 0.0) + q.a_at(idx) * val
    return out


def operator_moment(q: JacobiCoefficients, k: int, site: int, dirichlet: bool = False) -> float:
    """``(H_q^k delta_site, delta_site)`` by ``k`` banded applications."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if dirichlet and not (q.window_start <= site <= q.window_end):
        raise IndexOutOfBackground(f"site {site} outside the window")
    u = {site: 1.0}
    for _ in range(k):
        u = apply_operator(q, u, dirichlet=dirichlet)
    return u.get(site, 0.0)
