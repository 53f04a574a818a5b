"""Mean-field elastic homogenization and crack-bridging fracture energy.

A three-phase composite (polymer matrix, stiff fibers, soft coating
layer around each fiber) is homogenized with a dilute-concentration
scheme normalized over all phases.  Fibers are prolate spheroids with a
common aspect ratio; orientations are averaged over a uniform density
on the quarter sphere.  The fracture-energy model adds the work of
fiber pull-out and rupture across a bridged crack to the matrix
toughness.

All inputs are SI.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from . import tensors


class PhaseContrastError(ValueError):
    """Raised when a phase pair has no usable stiffness contrast."""


def sphericity(kappa):
    """Sphericity of a prolate spheroid with aspect ratio kappa >= 1.

    Ratio of the surface area of the volume-equivalent sphere to the
    spheroid's own surface area; 1 for a sphere, decreasing toward 0
    for slender fibers.
    """
    if kappa < 1.0:
        raise ValueError(f"aspect ratio must be >= 1, got {kappa}")
    if kappa == 1.0:
        return 1.0
    x = math.acos(1.0 / kappa)
    t = math.tan(x)
    return 2.0 * kappa ** (2.0 / 3.0) * t / (t + kappa ** 2 * x)


def interphase_volume_fraction(f_p, kappa, t, D):
    """Volume fraction of coating layers of thickness t around fibers.

    Accounts for layer overlap at finite filler content, so the result
    saturates instead of growing without bound.
    """
    if not 0.0 <= f_p < 1.0:
        raise ValueError(f"filler fraction outside [0, 1): {f_p}")
    if t < 0.0 or D <= 0.0:
        raise ValueError(f"bad layer thickness {t} or diameter {D}")
    if f_p == 0.0 or t == 0.0:
        return 0.0
    n = sphericity(kappa)
    D_eq = D * kappa ** (1.0 / 3.0)
    eta = t / D_eq
    c = f_p / (1.0 - f_p)
    poly = (eta / n
            + (2.0 + 3.0 * c / n ** 2) * eta ** 2
            + (4.0 / 3.0) * (1.0 + 3.0 * c / n) * eta ** 3)
    return (1.0 - f_p) * (1.0 - math.exp(-6.0 * c * poly))


def eshelby_prolate(kappa, nu_m):
    """Interior Eshelby tensor of a prolate spheroid in an isotropic matrix.

    The spheroid's symmetry axis is local x3.  Returned as a 6x6
    strain->strain map in engineering Voigt convention.  kappa = 1 uses
    the exact sphere expressions.
    """
    if kappa < 1.0:
        raise ValueError(f"aspect ratio must be >= 1, got {kappa}")
    if not -1.0 < nu_m < 0.5:
        raise ValueError(f"matrix Poisson ratio outside (-1, 0.5): {nu_m}")
    nu = nu_m
    S = np.zeros((3, 3, 3, 3))

    def set_pair(i, j, k, l, v):
        S[i, j, k, l] = v
        S[j, i, k, l] = v
        S[i, j, l, k] = v
        S[j, i, l, k] = v

    if kappa == 1.0:
        a = (7.0 - 5.0 * nu) / (15.0 * (1.0 - nu))
        b = (5.0 * nu - 1.0) / (15.0 * (1.0 - nu))
        c = (4.0 - 5.0 * nu) / (15.0 * (1.0 - nu))
        for i in range(3):
            for j in range(3):
                set_pair(i, i, j, j, a if i == j else b)
        for (i, j) in ((0, 1), (0, 2), (1, 2)):
            set_pair(i, j, i, j, c)
        return tensors.full_to_strain_map(S)

    # unit transverse semi-axes, long axis kappa along x3
    k2 = kappa * kappa
    e = k2 - 1.0
    I1 = 2.0 * np.pi * kappa / e ** 1.5 * (kappa * math.sqrt(e) - math.acosh(kappa))
    I3 = 4.0 * np.pi - 2.0 * I1
    I13 = (I1 - I3) / e
    I11 = np.pi - 0.25 * I13
    I12 = I11
    I33 = (4.0 * np.pi / k2 - 2.0 * I13) / 3.0

    q = 1.0 / (8.0 * np.pi * (1.0 - nu))
    m = (1.0 - 2.0 * nu)

    set_pair(0, 0, 0, 0, q * (3.0 * I11 + m * I1))
    set_pair(1, 1, 1, 1, q * (3.0 * I11 + m * I1))
    set_pair(2, 2, 2, 2, q * (3.0 * k2 * I33 + m * I3))
    set_pair(0, 0, 1, 1, q * (I12 - m * I1))
    set_pair(1, 1, 0, 0, q * (I12 - m * I1))
    set_pair(0, 0, 2, 2, q * (k2 * I13 - m * I1))
    set_pair(1, 1, 2, 2, q * (k2 * I13 - m * I1))
    set_pair(2, 2, 0, 0, q * (I13 - m * I3))
    set_pair(2, 2, 1, 1, q * (I13 - m * I3))
    set_pair(0, 1, 0, 1, q * (I12 + m * I1))
    set_pair(0, 2, 0, 2, 0.5 * q * ((1.0 + k2) * I13 + m * (I1 + I3)))
    set_pair(1, 2, 1, 2, 0.5 * q * ((1.0 + k2) * I13 + m * (I1 + I3)))
    return tensors.full_to_strain_map(S)


def dilute_concentration(C_incl, C_m, S):
    """Dilute strain concentration of one inclusion phase.

    A = I + S T with T = -(S + M)^{-1} and M = (C_incl - C_m)^{-1} C_m.
    All arguments and the result are 6x6 engineering-Voigt matrices.
    """
    dC = np.asarray(C_incl, dtype=float) - np.asarray(C_m, dtype=float)
    if np.linalg.cond(dC) > 1e12:
        raise PhaseContrastError(
            "inclusion and matrix stiffness are (numerically) identical; "
            "no dilute concentration exists")
    M = np.linalg.solve(dC, np.asarray(C_m, dtype=float))
    T = -np.linalg.inv(S + M)
    return np.eye(6) + S @ T


def _phases_match(C_a, C_b):
    return np.allclose(C_a, C_b, rtol=1e-12, atol=1e-12 * np.linalg.norm(C_b))


@lru_cache(maxsize=64)
def effective_stiffness(spec, order=32):
    """Effective 6x6 stiffness of the three-phase fiber composite.

    Dilute concentration tensors of fiber and coating (both with the
    fiber-shaped Eshelby tensor) are averaged over the uniform
    orientation density and normalized over all phases.  Returns the
    matrix stiffness outright when the filler content is zero or when
    no phase has any contrast with the matrix.
    """
    C_m = tensors.isotropic_stiffness(spec.E_m, spec.nu_m)
    if spec.f_p0 == 0.0:
        return C_m
    # coating takes the matrix Poisson ratio; fiber material is isotropic
    C_i = tensors.isotropic_stiffness(spec.E_i, spec.nu_m)
    C_p = tensors.isotropic_stiffness(spec.E_cnt, spec.nu_cnt)
    if _phases_match(C_i, C_m) and _phases_match(C_p, C_m):
        return C_m

    f_p = spec.f_p0
    f_i = interphase_volume_fraction(f_p, spec.kappa, spec.t_i, spec.D_cnt)
    f_m = 1.0 - f_p - f_i
    if f_m <= 0.0:
        raise ValueError(
            f"matrix fraction not positive (f_p={f_p}, f_i={f_i:.4f})")

    S = eshelby_prolate(spec.kappa, spec.nu_m)

    def avg(loc, rot):
        return tensors.orientational_average(
            lambda g1, g2: rot(loc, tensors.rotation_from_euler(g1, g2)),
            order=order)

    def phase_averages(C_phase, weight):
        # a phase with no contrast (or no volume) concentrates strain 1:1
        if weight == 0.0 or _phases_match(C_phase, C_m):
            return np.eye(6), C_m
        A = dilute_concentration(C_phase, C_m, S)
        return avg(A, tensors.rotate_strain_map), avg(C_phase @ A,
                                                      tensors.rotate_stiffness)

    A_i_avg, CA_i_avg = phase_averages(C_i, f_i)
    A_p_avg, CA_p_avg = phase_averages(C_p, f_p)

    N = f_m * np.eye(6) + f_i * A_i_avg + f_p * A_p_avg
    C = (f_m * C_m + f_i * CA_i_avg + f_p * CA_p_avg) @ np.linalg.inv(N)
    return 0.5 * (C + C.T)


def effective_engineering_constants(spec, order=32):
    """(E, nu) of the isotropic part of the effective stiffness."""
    C = effective_stiffness(spec, order)
    _, E, nu, _ = tensors.isotropic_part(C)
    return E, nu


def critical_length(theta, spec):
    """Fiber length below which an inclined bridging fiber pulls out.

    Raises for inclinations at which the inclined-fiber strength is
    not positive.
    """
    sig = spec.sigma_ult * (1.0 - spec.A_snub * math.tan(theta))
    if sig <= 0.0:
        raise ValueError(
            f"inclined fiber strength not positive at theta={theta}")
    return sig * spec.D_cnt / (2.0 * spec.tau_int * math.exp(spec.mu_snub * theta))


def bridging_work(l, theta, spec):
    """Work of a single bridging fiber with embedded length l at angle theta.

    Short embedded lengths pull out against interfacial friction; longer
    ones load the fiber to rupture.
    """
    if l < 0.0:
        raise ValueError(f"embedded length must be >= 0, got {l}")
    sig = spec.sigma_ult * (1.0 - spec.A_snub * math.tan(theta))
    lc = sig * spec.D_cnt / (2.0 * spec.tau_int * math.exp(spec.mu_snub * theta))
    if l < 0.5 * lc:
        return 0.5 * l * l * spec.tau_int * np.pi * spec.D_cnt * math.exp(spec.mu_snub * theta)
    return (np.pi * spec.D_cnt ** 2 * spec.sigma_ult ** 2 * spec.L_cnt
            / (8.0 * spec.E_cnt))


def orientation_density(p, q, theta_min=0.0, theta_max=0.5 * np.pi):
    """Normalized fiber inclination density on [theta_min, theta_max].

    Returns a callable g(theta).  Exponents below 1/2 are rejected; the
    p = q = 1/2 case is the uniform density.
    """
    if p < 0.5 or q < 0.5:
        raise ValueError(
            f"orientation density not normalizable for p={p}, q={q} (need >= 1/2)")
    if not 0.0 <= theta_min < theta_max <= 0.5 * np.pi + 1e-12:
        raise ValueError(f"bad inclination range [{theta_min}, {theta_max}]")

    def kernel(th):
        return math.sin(th) ** (2.0 * p - 1.0) * math.cos(th) ** (2.0 * q - 1.0)

    if p == 0.5 and q == 0.5:
        norm = theta_max - theta_min
    else:
        norm, _ = integrate.quad(kernel, theta_min, theta_max)
    return lambda th: kernel(th) / norm


@lru_cache(maxsize=64)
def fracture_energy(spec):
    """Critical energy release rate including fiber bridging.

    G_c = G_0 + G_br, where G_br integrates the per-fiber bridging work
    over embedded length (analytically, split at the pull-out/rupture
    transition) and over inclination (adaptively).
    """
    if spec.f_p0 == 0.0:
        return spec.G0
    D, L = spec.D_cnt, spec.L_cnt
    tau, sig_u, E_f = spec.tau_int, spec.sigma_ult, spec.E_cnt
    A, mu = spec.A_snub, spec.mu_snub
    g = orientation_density(spec.p_odf, spec.q_odf, spec.theta_min, spec.theta_max)
    A_cnt = np.pi * D ** 2 / 4.0
    W_rup = np.pi * D ** 2 * sig_u ** 2 * L / (8.0 * E_f)

    def inner(th):
        # exact integral of the piecewise work over embedded length
        sig = sig_u * (1.0 - A * math.tan(th)) if th < 0.5 * np.pi else -math.inf
        lc = sig * D / (2.0 * tau * math.exp(mu * th))
        lc = min(max(0.5 * lc, 0.0), 0.5 * L)
        pull = 0.5 * tau * np.pi * D * math.exp(mu * th) * lc ** 3 / 3.0
        return pull + (0.5 * L - lc) * W_rup

    # interior break points: strength sign change and pull-out/rupture switch
    pts = []
    th_hi = math.atan(1.0 / A) if A > 0.0 else math.inf
    if spec.theta_min < th_hi < spec.theta_max:
        pts.append(th_hi)

    def lc_gap(th):
        sig = sig_u * (1.0 - A * math.tan(th))
        return sig * D / (2.0 * tau * math.exp(mu * th)) - L

    lo = spec.theta_min
    hi = min(spec.theta_max, th_hi * (1.0 - 1e-12))
    if lo < hi and lc_gap(lo) * lc_gap(hi) < 0.0:
        pts.append(optimize.brentq(lc_gap, lo, hi))

    pref = 2.0 * spec.f_p0 / (A_cnt * L)
    tol = 1e-4 * spec.G0 / pref if spec.G0 > 0.0 else 1.49e-10
    val, _ = integrate.quad(
        lambda th: inner(th) * g(th) * math.cos(th),
        spec.theta_min, spec.theta_max,
        points=sorted(pts) or None, epsabs=tol, epsrel=1e-9, limit=200)
    return spec.G0 + pref * val
