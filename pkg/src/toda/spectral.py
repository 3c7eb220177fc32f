"""Discrete spectral measures and the measure <-> Jacobi coefficient maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import LossOfOrthogonality, PoleAtZ, RankDeficient
from .lattice import JacobiCoefficients, TridiagonalMatrix, eigendecompose

ORTHO_THRESHOLD = 1e-13


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite atomic measure; ``atoms`` is a tuple of ``(location, weight)``."""

    atoms: tuple[tuple[float, float], ...]
    normalized: bool = True

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("measure needs at least one atom")
        locs = [x for x, _ in atoms]
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise ValueError("atom locations must be strictly increasing")
        if any(not (w > 0) for _, w in atoms):
            raise ValueError("atom weights must be positive")
        if self.normalized and abs(sum(w for _, w in atoms) - 1.0) > 1e-12:
            raise ValueError("normalized measure must have total mass 1")

    @classmethod
    def from_arrays(cls, locations: Iterable[float], weights: Iterable[float], normalize: bool = True) -> "DiscreteMeasure":
        pairs = sorted(zip(map(float, locations), map(float, weights)))
        if normalize:
            total = math.fsum(w for _, w in pairs)
            pairs = [(x, w / total) for x, w in pairs]
        return cls(tuple(pairs), normalized=normalize)

    @property
    def locations(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def mass(self) -> float:
        return math.fsum(w for _, w in self.atoms)

    def __len__(self):
        return len(self.atoms)

    def to_dict(self) -> dict:
        return {"atoms": [[x, w] for x, w in self.atoms], "normalized": self.normalized}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        return cls(tuple((x, w) for x, w in data["atoms"]), bool(data.get("normalized", True)))


def measure_moment(sigma: DiscreteMeasure, k: int) -> float:
    return math.fsum(w * x**k for x, w in sigma.atoms)


def stieltjes(sigma: DiscreteMeasure, z: complex) -> complex:
    """``sum_i w_i / (lambda_i - z)``."""
    z = complex(z)
    total = 0j
    for x, w in sigma.atoms:
        d = x - z
        if abs(d) < 1e-14 * max(1.0, abs(x)):
            raise PoleAtZ(f"z={z} hits the atom at {x}")
        total += w / d
    return total


def jacobi_from_measure(sigma: DiscreteMeasure, n_max: int) -> JacobiCoefficients:
    """Recover ``b_1..b_{n_max}`` and ``a_2..a_{n_max}`` from a measure.

    Lanczos on ``diag(locations)`` started from ``sqrt(weights)``, with full
    reorthogonalization.  The result is a half-line window starting at 1.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if len(sigma) < n_max:
        raise RankDeficient(f"{len(sigma)} atoms cannot determine {n_max} sites")
    lam = sigma.locations
    scale = max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    q = np.sqrt(sigma.weights / sigma.mass)
    basis = np.empty((n_max, lam.size))
    basis[0] = q
    b: list[float] = []
    a: list[float] = []
    for k in range(n_max):
        v = lam * basis[k]
        b.append(float(basis[k] @ v))
        if k == n_max - 1:
            break
        for _ in range(2):
            v -= basis[: k + 1].T @ (basis[: k + 1] @ v)
        beta = float(np.linalg.norm(v))
        if beta * beta < ORTHO_THRESHOLD * scale * scale:
            raise LossOfOrthogonality(f"a_{k + 2}^2 = {beta * beta:.3e} below working precision")
        a.append(beta)
        basis[k + 1] = v / beta
    return JacobiCoefficients(1, tuple(a), tuple(b), None)


def jacobi_from_measure_exact(atoms: Sequence[tuple], n_max: int) -> tuple[list[Fraction], list[Fraction]]:
    """Exact Stieltjes procedure for rational atoms; returns ``(b, a_squared)``.

    ``b[k]`` is ``b_{k+1}`` and ``a_squared[k]`` is ``a_{k+2}^2``.  Intended
    for small oracles (``n_max <= 8``).
    """
    if n_max > 8:
        raise ValueError("exact backend is limited to n_max <= 8")
    xs = [Fraction(x) for x, _ in atoms]
    ws = [Fraction(w) for _, w in atoms]
    total = sum(ws)
    ws = [w / total for w in ws]
    if len(xs) < n_max:
        raise RankDeficient("too few atoms")

    def inner(f, g):
        return sum(w * fi * gi for w, fi, gi in zip(ws, f, g))

    p_prev = [Fraction(0)] * len(xs)
    p = [Fraction(1)] * len(xs)
    norm_prev = None
    b: list[Fraction] = []
    a_sq: list[Fraction] = []
    for k in range(n_max):
        norm = inner(p, p)
        if k > 0:
            a_sq.append(norm / norm_prev)
        bk = inner([x * pi for x, pi in zip(xs, p)], p) / norm
        b.append(bk)
        if k == n_max - 1:
            break
        a2 = a_sq[-1] if k > 0 else Fraction(0)
        p_prev, p = p, [(x - bk) * pi - a2 * pp for x, pi, pp in zip(xs, p, p_prev)]
        norm_prev = norm
    return b, a_sq


def measure_from_jacobi(T: TridiagonalMatrix) -> DiscreteMeasure:
    """Spectral measure of the first site of a finite Jacobi matrix."""
    es = eigendecompose(T)
    keep = es.weights > 0
    return DiscreteMeasure.from_arrays(es.eigenvalues[keep], es.weights[keep], normalize=True)
