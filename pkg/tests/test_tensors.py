"""Tests of the Voigt/rotation toolbox.

Rotation matrices built from Euler angles are cross-checked against
full fourth-order index gymnastics, and the engineering-shear
bookkeeping is exercised through round trips and invariants.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piezofrac import tensors


def _rng(seed=0):
    return np.random.default_rng(seed)


def _random_rotation(rng):
    g1 = rng.uniform(0.0, 2.0 * np.pi)
    g2 = rng.uniform(0.0, np.pi)
    return tensors.rotation_from_euler(g1, g2)


def _random_stiffness(rng):
    # symmetric positive definite 6x6 -> full tensor has both symmetries
    B = rng.normal(size=(6, 6))
    return B @ B.T + 6.0 * np.eye(6)


def _random_strain_map(rng):
    # minor-symmetric in both index pairs, no major symmetry
    T = rng.normal(size=(3, 3, 3, 3))
    T = 0.25 * (T + T.transpose(1, 0, 2, 3)
                + T.transpose(0, 1, 3, 2) + T.transpose(1, 0, 3, 2))
    return tensors.full_to_strain_map(T)


def test_voigt_pairs_ordering():
    assert tensors.VOIGT_PAIRS == ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


def test_strain_voigt_round_trip():
    rng = _rng(1)
    eps = rng.normal(size=(3, 3))
    eps = 0.5 * (eps + eps.T)
    v = tensors.strain_to_voigt(eps)
    assert np.allclose(v[3], 2.0 * eps[1, 2])  # engineering shear
    assert np.allclose(tensors.voigt_to_strain(v), eps, atol=1e-15)


def test_stress_voigt_round_trip():
    rng = _rng(2)
    sig = rng.normal(size=(3, 3))
    sig = 0.5 * (sig + sig.T)
    v = tensors.stress_to_voigt(sig)
    assert np.allclose(v[3], sig[1, 2])  # no factor on stress shears
    assert np.allclose(tensors.voigt_to_stress(v), sig, atol=1e-15)


def test_energy_consistency_of_voigt_convention():
    """sigma : eps must equal the Voigt dot product."""
    rng = _rng(3)
    eps = rng.normal(size=(3, 3))
    eps = 0.5 * (eps + eps.T)
    sig = rng.normal(size=(3, 3))
    sig = 0.5 * (sig + sig.T)
    work = np.tensordot(sig, eps)
    assert np.isclose(
        tensors.stress_to_voigt(sig) @ tensors.strain_to_voigt(eps), work)


def test_stiffness_full_round_trip():
    rng = _rng(4)
    C = _random_stiffness(rng)
    T = tensors.stiffness_to_full(C)
    # minor symmetries of the full tensor
    assert np.allclose(T, T.transpose(1, 0, 2, 3))
    assert np.allclose(T, T.transpose(0, 1, 3, 2))
    assert np.allclose(tensors.full_to_stiffness(T), C, atol=1e-12)


def test_stiffness_full_tensor_contraction_matches_voigt():
    rng = _rng(5)
    C = _random_stiffness(rng)
    eps = rng.normal(size=(3, 3))
    eps = 0.5 * (eps + eps.T)
    T = tensors.stiffness_to_full(C)
    sig_full = np.einsum("ijkl,kl->ij", T, eps)
    sig_voigt = C @ tensors.strain_to_voigt(eps)
    assert np.allclose(tensors.stress_to_voigt(sig_full), sig_voigt)


def test_strain_map_full_round_trip():
    rng = _rng(6)
    A = _random_strain_map(rng)
    T = tensors.strain_map_to_full(A)
    assert np.allclose(T, T.transpose(1, 0, 2, 3))
    assert np.allclose(T, T.transpose(0, 1, 3, 2))
    assert np.allclose(tensors.full_to_strain_map(T), A, atol=1e-12)


def test_strain_map_acts_on_engineering_strain():
    """A maps macro strain to local strain consistently in both pictures."""
    rng = _rng(7)
    A = _random_strain_map(rng)
    T = tensors.strain_map_to_full(A)
    eps = rng.normal(size=(3, 3))
    eps = 0.5 * (eps + eps.T)
    local_full = np.einsum("ijkl,kl->ij", T, eps)
    local_voigt = A @ tensors.strain_to_voigt(eps)
    assert np.allclose(tensors.strain_to_voigt(local_full), local_voigt)


def test_rotation_from_euler_is_orthonormal():
    rng = _rng(8)
    for _ in range(20):
        R = _random_rotation(rng)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)
        assert np.isclose(np.linalg.det(R), 1.0)


def test_rotation_maps_local_axis_to_unit_sphere_direction():
    """The local fiber axis x3 lands on the spherical direction (g1, g2)."""
    for g1, g2 in [(0.3, 0.7), (2.1, 1.2), (5.9, 0.1), (0.0, 0.0)]:
        R = tensors.rotation_from_euler(g1, g2)
        m = R @ np.array([0.0, 0.0, 1.0])
        want = np.array([np.cos(g1) * np.sin(g2),
                         np.sin(g1) * np.sin(g2),
                         np.cos(g2)])
        assert np.allclose(m, want, atol=1e-14)


def test_bond_matrices_are_inverse_transposes():
    rng = _rng(9)
    for _ in range(10):
        R = _random_rotation(rng)
        M = tensors.bond_stress_matrix(R)
        N = tensors.bond_strain_matrix(R)
        assert np.allclose(N, np.linalg.inv(M).T, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 2.0 * np.pi), st.floats(0.0, np.pi),
       st.floats(0.0, 2.0 * np.pi), st.floats(0.0, np.pi))
def test_bond_matrices_respect_composition(a1, a2, b1, b2):
    """Bond matrices form a representation: M(R1 R2) = M(R1) M(R2)."""
    R1 = tensors.rotation_from_euler(a1, a2)
    R2 = tensors.rotation_from_euler(b1, b2)
    M12 = tensors.bond_stress_matrix(R1 @ R2)
    assert np.allclose(M12, tensors.bond_stress_matrix(R1)
                       @ tensors.bond_stress_matrix(R2), atol=1e-10)
    N12 = tensors.bond_strain_matrix(R1 @ R2)
    assert np.allclose(N12, tensors.bond_strain_matrix(R1)
                       @ tensors.bond_strain_matrix(R2), atol=1e-10)


def test_rotate_stiffness_matches_full_tensor_rotation():
    rng = _rng(10)
    for _ in range(5):
        C = _random_stiffness(rng)
        R = _random_rotation(rng)
        T = tensors.stiffness_to_full(C)
        T_rot = np.einsum("ip,jq,kr,ls,pqrs->ijkl", R, R, R, R, T)
        assert np.allclose(tensors.rotate_stiffness(C, R),
                           tensors.full_to_stiffness(T_rot), atol=1e-10)


def test_rotate_strain_map_matches_full_tensor_rotation():
    rng = _rng(11)
    for _ in range(5):
        A = _random_strain_map(rng)
        R = _random_rotation(rng)
        T = tensors.strain_map_to_full(A)
        T_rot = np.einsum("ip,jq,kr,ls,pqrs->ijkl", R, R, R, R, T)
        assert np.allclose(tensors.rotate_strain_map(A, R),
                           tensors.full_to_strain_map(T_rot), atol=1e-10)


def test_rotation_preserves_kelvin_eigenvalues():
    """Eigenvalues of the Kelvin-normalized stiffness are frame invariants."""
    rng = _rng(12)
    m = np.array([1.0, 1.0, 1.0, np.sqrt(2.0), np.sqrt(2.0), np.sqrt(2.0)])
    C = _random_stiffness(rng)
    ev0 = np.sort(np.linalg.eigvalsh(C * np.outer(m, m) / 2.0
                                     + (C * np.outer(m, m) / 2.0).T))
    for _ in range(5):
        R = _random_rotation(rng)
        Cr = tensors.rotate_stiffness(C, R)
        ev = np.sort(np.linalg.eigvalsh(Cr * np.outer(m, m) / 2.0
                                        + (Cr * np.outer(m, m) / 2.0).T))
        assert np.allclose(ev, ev0, rtol=1e-9, atol=1e-9)


def test_isotropic_stiffness_layout():
    E, nu = 2.5e9, 0.28
    C = tensors.isotropic_stiffness(E, nu)
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    assert np.isclose(C[0, 0], lam + 2.0 * mu)
    assert np.isclose(C[0, 1], lam)
    assert np.isclose(C[3, 3], mu)
    assert np.allclose(C, C.T)
    # rotation invariance
    R = tensors.rotation_from_euler(0.9, 0.4)
    assert np.allclose(tensors.rotate_stiffness(C, R), C, atol=1e-6 * E)


def test_isotropic_stiffness_rejects_bad_moduli():
    with pytest.raises(ValueError):
        tensors.isotropic_stiffness(-1.0, 0.3)
    with pytest.raises(ValueError):
        tensors.isotropic_stiffness(1e9, 0.5)
    with pytest.raises(ValueError):
        tensors.isotropic_stiffness(1e9, -1.0)


def test_isotropic_part_recovers_exact_isotropic_input():
    E, nu = 3.1e9, 0.22
    C = tensors.isotropic_stiffness(E, nu)
    C_iso, E_out, nu_out, aniso = tensors.isotropic_part(C)
    assert np.allclose(C_iso, C, rtol=1e-12)
    assert np.isclose(E_out, E, rtol=1e-12)
    assert np.isclose(nu_out, nu, rtol=1e-12)
    assert aniso < 1e-12


def test_isotropic_part_invariant_under_rotation():
    """The h1 = C_iijj and h2 = C_ijij contractions are frame invariants."""
    rng = _rng(13)
    C = _random_stiffness(rng)
    _, E0, nu0, a0 = tensors.isotropic_part(C)
    for _ in range(5):
        R = _random_rotation(rng)
        _, E, nu, a = tensors.isotropic_part(tensors.rotate_stiffness(C, R))
        assert np.isclose(E, E0, rtol=1e-9)
        assert np.isclose(nu, nu0, rtol=1e-9)
        assert np.isclose(a, a0, rtol=1e-6, atol=1e-12)


def test_gauss_legendre_polynomial_exactness():
    x, w = tensors.gauss_legendre(-1.5, 2.0, 6)
    # order-6 rule integrates degree-11 polynomials exactly
    val = np.sum(w * x ** 11)
    exact = (2.0 ** 12 - (-1.5) ** 12) / 12.0
    assert np.isclose(val, exact, rtol=1e-13)
    assert np.isclose(np.sum(w), 3.5)


def test_gauss_legendre_rejects_tiny_order():
    with pytest.raises(ValueError):
        tensors.gauss_legendre(0.0, 1.0, 1)


def test_uniform_average_of_fiber_dyad_is_isotropic():
    """<m x m> over the uniform orientation density is I/3."""
    def dyad(g1, g2):
        m = tensors.rotation_from_euler(g1, g2) @ np.array([0.0, 0.0, 1.0])
        return np.outer(m, m)

    M2 = tensors.orientational_average(dyad, order=16)
    assert np.allclose(M2, np.eye(3) / 3.0, atol=1e-12)


def test_uniform_average_of_anisotropic_stiffness_is_isotropic():
    C_loc = tensors.isotropic_stiffness(2.5e9, 0.3)
    C_loc = C_loc.copy()
    C_loc[2, 2] *= 40.0  # strongly transversely isotropic about x3
    C_loc[3, 3] *= 3.0
    C_loc[4, 4] *= 3.0

    def rotated(g1, g2):
        return tensors.rotate_stiffness(C_loc, tensors.rotation_from_euler(g1, g2))

    C_avg = tensors.orientational_average(rotated, order=32)
    _, _, _, aniso = tensors.isotropic_part(C_avg)
    assert aniso < 1e-8
    assert np.allclose(C_avg, C_avg.T, atol=1e-6)


def test_orientational_average_respects_custom_density():
    """A density concentrated at the pole picks out the unrotated tensor."""
    def dyad(g1, g2):
        m = tensors.rotation_from_euler(g1, g2) @ np.array([0.0, 0.0, 1.0])
        return np.outer(m, m)

    # sharply peaked toward g2 = 0, normalized numerically inside the average
    def odf(g1, g2):
        return np.exp(-200.0 * g2 ** 2)

    norm = tensors.orientational_average(lambda a, b: 1.0, odf=odf, order=48)
    M2 = tensors.orientational_average(dyad, odf=odf, order=48) / norm
    assert M2[2, 2] > 0.98
    assert abs(M2[0, 0]) < 0.02
