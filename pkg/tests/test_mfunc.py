import math

import numpy as np
import pytest

from toda.errors import ChainTooDeep
from toda.flow import darboux_step
from toda.lattice import FreeBackground, JacobiCoefficients, eigendecompose, truncate
from toda.mfunc import (
    SHIFT_LEFT,
    DEta,
    DZero,
    MRep,
    Reflect,
    SpectralBase,
    coefficients_from_m,
    eval_m,
    extract_edge,
    herglotz_ratio,
    shift,
)
from toda.spectral import DiscreteMeasure, jacobi_from_measure
from toda.weyl import m_whole

FREE = MRep.free()
THREE = DiscreteMeasure.from_arrays([-1, 0, 1], [1, 1, 1])


def perturbed(rng, lo=-2, k=5):
    return JacobiCoefficients(lo, tuple(0.6 + 0.8 * rng.random(k)), tuple(0.8 * rng.standard_normal(k)), FreeBackground())


def test_deta_rejects_inside_disk():
    with pytest.raises(ValueError):
        DEta(0.5)


@pytest.mark.parametrize("chain,z", [((), 3 + 1j), ((DZero(),), 2.0), ((DEta(3.0),), 2.0)])
def test_free_is_fixed(chain, z):
    assert eval_m(MRep(FREE.base, chain), z) == pytest.approx(z, abs=1e-10)


def test_edge_of_free():
    assert extract_edge(FREE) == (1.0, 0.0, 1.0)
    np.testing.assert_allclose(extract_edge(FREE.append(DEta(3.0))), (1, 0, 1), atol=1e-9)


def test_edge_echoes_base_fields():
    two = DiscreteMeasure(((-1.0, 0.5), (1.0, 0.5)))
    m = MRep(SpectralBase(two, 1.0, two, 1.0, 0.0))
    assert extract_edge(m)[0] == 1.0
    m = MRep(SpectralBase(two, 1.3, THREE, 0.7, -0.2))
    assert extract_edge(m) == (1.3**2, -0.2, 0.7**2)


def test_free_coefficients():
    q = coefficients_from_m(FREE, -3, 3)
    np.testing.assert_allclose(q.a, 1.0, atol=1e-9)
    np.testing.assert_allclose(q.b, 0.0, atol=1e-9)


def test_span_limit():
    with pytest.raises(ChainTooDeep):
        coefficients_from_m(FREE, 0, 17)


def test_left_shift_orientation(rng):
    assert SHIFT_LEFT == -1
    q = perturbed(rng)
    m = shift(MRep.from_lattice(q, 60), "left")
    assert extract_edge(m)[1] == pytest.approx(q.b_at(-1), abs=1e-9)


def test_three_atom_base_matches_spectral_inverse():
    ref = jacobi_from_measure(THREE, 3)
    m = MRep(SpectralBase(THREE, 1.0, THREE, 1.0, 0.0))
    q = coefficients_from_m(m, -1, 2)
    np.testing.assert_allclose(q.b, 0.0, atol=1e-7)
    assert q.a_at(2) == pytest.approx(ref.a[0], abs=1e-7)
    assert q.a_at(-1) == pytest.approx(ref.a[0], abs=1e-7)
    assert q.a_at(0) == pytest.approx(1.0, abs=1e-7)
    assert q.a_at(1) == pytest.approx(1.0, abs=1e-7)


def test_coefficients_recover_lattice(rng):
    q = perturbed(rng, lo=-2, k=5)
    rec = coefficients_from_m(MRep.from_lattice(q, 80), -3, 3)
    for n in range(-3, 4):
        assert rec.a_at(n) == pytest.approx(q.a_at(n), abs=1e-9)
        assert rec.b_at(n) == pytest.approx(q.b_at(n), abs=1e-9)


def test_reflect_is_involution(rng):
    m = MRep.from_lattice(perturbed(rng), 60)
    twice = m.append(Reflect(), Reflect())
    for z in (1.7j, 2.0 + 0.5j, 0.4 + 0.3j, -0.2 + 0.5j):
        assert eval_m(twice, z) == pytest.approx(eval_m(m, z), abs=1e-9)


def test_shift_pair_is_identity(rng):
    m = MRep.from_lattice(perturbed(rng), 60)
    back = shift(shift(m, "left"), "right")
    for z in rng.uniform(0.3, 2.5, 5) * np.exp(1j * rng.uniform(0.2, 2.9, 5)):
        if abs(abs(z) - 1) > 0.05:
            assert eval_m(back, z) == pytest.approx(eval_m(m, z), abs=1e-9)


def test_free_shift_invariant():
    assert eval_m(shift(FREE, "left"), 2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        shift(FREE, "up")


def test_herglotz_after_chains(rng):
    q = perturbed(rng)
    top = eigendecompose(truncate(q, -60, 60)).eigenvalues[-1]
    E = top + 1.0
    eta = 0.5 * (E + math.sqrt(E * E - 4))
    m = shift(MRep.from_lattice(q, 60).append(DEta(eta)), "left").append(DEta(eta + 0.7))
    for z in (1.5j, 2 + 1j, -3 + 0.2j, 1.2 * np.exp(2.5j)):
        assert herglotz_ratio(m, z) > 0


def test_large_argument_asymptotics(rng):
    m = MRep.from_lattice(perturbed(rng), 60).append(DZero())
    R = 1e3
    assert abs(eval_m(m, 1j * R) - 1j * R) <= 0.01 * R


def test_deta_matches_darboux_step(rng):
    q = perturbed(rng, lo=0, k=3)
    top = max(2.0, eigendecompose(truncate(q, -60, 60)).eigenvalues[-1])
    E = top + 0.8
    eta = 0.5 * (E + math.sqrt(E * E - 4))
    qd = darboux_step(q, eta)
    m = MRep.from_lattice(q, 80).append(DEta(eta))
    for z in [1.8 * np.exp(1j * t) for t in np.linspace(0.3, 2.8, 10)] + [0.5 * np.exp(1j * t) for t in np.linspace(0.3, 2.8, 10)]:
        assert eval_m(m, z) == pytest.approx(m_whole(qd, z, 80), abs=1e-8)
