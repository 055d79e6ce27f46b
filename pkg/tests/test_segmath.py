from __future__ import annotations

import cmath

import numpy as np
import pytest

from nonescape.segmath import (
    gauss_legendre,
    kernels,
    kernels_with_dz,
    panel_nodes,
    product_integral,
    propagate,
    propagate_with_dk,
    versine_kernel,
)


def _reference_kernels(z: complex, length: float) -> tuple[complex, complex]:
    q = cmath.sqrt(z)
    if q == 0:
        return 1.0 + 0j, complex(length)
    return cmath.cos(q * length), cmath.sin(q * length) / q


def _sample_points(rng: np.random.Generator, n: int = 64) -> np.ndarray:
    mag = 10.0 ** rng.uniform(-9, 2, n)
    phase = rng.uniform(-np.pi, np.pi, n)
    return mag * np.exp(1j * phase)


def test_kernels_match_direct_evaluation(rng: np.random.Generator) -> None:
    for z in _sample_points(rng):
        for length in (0.3, 1.0, 2.7):
            c, s = kernels(z, length)
            c_ref, s_ref = _reference_kernels(z, length)
            assert c == pytest.approx(c_ref, rel=1e-13, abs=1e-13)
            assert s == pytest.approx(s_ref, rel=1e-13, abs=1e-13)


def test_kernels_branch_invariance() -> None:
    # (C, S) are even in q, so both square roots of z must agree; checked by
    # comparing against the explicit series at the series/direct seam.
    for w in (3.9, 4.1, -3.9, -4.1, 3.9j, -4.1j):
        c, s = kernels(complex(w), 1.0)
        c_ref, s_ref = _reference_kernels(complex(w), 1.0)
        assert c == pytest.approx(c_ref, rel=1e-13)
        assert s == pytest.approx(s_ref, rel=1e-13)


def test_kernels_at_zero_and_tiny_argument() -> None:
    c, s = kernels(0.0, 1.5)
    assert c == 1.0
    assert s == 1.5
    c, s = kernels(1e-30 + 1e-30j, 2.0)
    assert c == pytest.approx(1.0, abs=1e-15)
    assert s == pytest.approx(2.0, abs=1e-15)


def test_kernels_vectorized() -> None:
    z = np.array([0.0, 1.0, -1.0, 2.0 + 1.0j])
    c, s = kernels(z, 1.0)
    assert c.shape == z.shape
    for zi, ci, si in zip(z, c, s):
        c_ref, s_ref = _reference_kernels(complex(zi), 1.0)
        assert ci == pytest.approx(c_ref, rel=1e-13)
        assert si == pytest.approx(s_ref, rel=1e-13)


def test_kernels_with_dz_matches_finite_difference(rng: np.random.Generator) -> None:
    h = 1e-6
    for z in _sample_points(rng, 24):
        if abs(z) < 1e-4:
            continue
        c, s, dc, ds = kernels_with_dz(z, 1.3)
        cp, sp = kernels(z + h, 1.3)
        cm, sm = kernels(z - h, 1.3)
        assert dc == pytest.approx((cp - cm) / (2 * h), rel=1e-5, abs=1e-8)
        assert ds == pytest.approx((sp - sm) / (2 * h), rel=1e-5, abs=1e-8)


def test_kernels_with_dz_at_zero() -> None:
    # Series: C = 1 - w/2 + ..., S = L(1 - w/6 + ...) with w = z L^2.
    L = 2.0
    c, s, dc, ds = kernels_with_dz(0.0, L)
    assert c == 1.0
    assert s == L
    assert dc == pytest.approx(-L * L / 2.0, rel=1e-14)
    assert ds == pytest.approx(-L ** 3 / 6.0, rel=1e-14)


def test_versine_kernel_values_and_derivative() -> None:
    L = 1.7
    for w in (0.0, 1e-22, 0.5, -3.0, 4.0 + 2.0j, 25.0):
        v = versine_kernel(w, L)
        if w == 0.0 or abs(w) < 1e-12:
            assert v == pytest.approx(L * L / 2.0, rel=1e-12)
        else:
            c_ref, _ = _reference_kernels(complex(w), L)
            assert v == pytest.approx((1.0 - c_ref) / w, rel=1e-12)
    h = 1e-6
    for w in (0.7, -2.0, 3.0 + 1.0j):
        _, dv = versine_kernel(w, L, with_derivative=True)
        vp = versine_kernel(w + h, L)
        vm = versine_kernel(w - h, L)
        assert dv == pytest.approx((vp - vm) / (2 * h), rel=1e-5)


def test_propagate_reproduces_fundamental_solutions() -> None:
    z = 2.0 - 0.5j
    L = 0.8
    c, s = kernels(z, L)
    # u = cos(qx): (1, 0) -> (C, -zS).  u = sin(qx)/q: (0, 1) -> (S, C).
    u, du = propagate(1.0, 0.0, z, L)
    assert u == pytest.approx(c, rel=1e-14)
    assert du == pytest.approx(-z * s, rel=1e-14)
    u, du = propagate(0.0, 1.0, z, L)
    assert u == pytest.approx(s, rel=1e-14)
    assert du == pytest.approx(c, rel=1e-14)


def test_propagate_composition_equals_single_segment() -> None:
    # Two half-segments of equal z must compose to one full segment.
    z = -1.3 + 0.4j
    u0, du0 = 0.3 + 0.1j, -0.7 + 0.2j
    u1, du1 = propagate(u0, du0, z, 0.45)
    u2, du2 = propagate(u1, du1, z, 0.45)
    u_full, du_full = propagate(u0, du0, z, 0.9)
    assert u2 == pytest.approx(u_full, rel=1e-13)
    assert du2 == pytest.approx(du_full, rel=1e-13)


def test_propagate_with_dk_matches_finite_difference() -> None:
    length = 0.6
    v = 3.0

    def run(k: complex) -> tuple[complex, complex]:
        u, du = 1.0 + 0j, 1j * k
        u, du = propagate(u, du, k * k - v, length)
        return u, du

    k0 = 2.0 - 0.3j
    h = 1e-6
    u, du, uk, duk = propagate_with_dk(
        1.0 + 0j, 1j * k0, 0.0 + 0j, 1j, k0 * k0 - v, 2.0 * k0, length
    )
    up, dup = run(k0 + h)
    um, dum = run(k0 - h)
    assert u == pytest.approx(run(k0)[0], rel=1e-14)
    assert uk == pytest.approx((up - um) / (2 * h), rel=1e-6)
    assert duk == pytest.approx((dup - dum) / (2 * h), rel=1e-6)


def _brute_product(length: float, z1, a1, b1, z2, a2, b2) -> complex:
    nodes, weights = panel_nodes(0.0, length, 8, order=30)
    c1, s1 = kernels(np.full_like(nodes, z1, dtype=complex), nodes)
    c2, s2 = kernels(np.full_like(nodes, z2, dtype=complex), nodes)
    u1 = a1 * c1 + b1 * s1
    u2 = a2 * c2 + b2 * s2
    return complex(np.sum(weights * u1 * u2))


def test_product_integral_matches_quadrature(rng: np.random.Generator) -> None:
    for _ in range(12):
        z1, z2 = rng.normal(0, 3, 2) + 1j * rng.normal(0, 1, 2)
        a1, b1, a2, b2 = rng.normal(0, 1, 4) + 1j * rng.normal(0, 1, 4)
        closed = product_integral(1.1, z1, a1, b1, z2, a2, b2)
        brute = _brute_product(1.1, z1, a1, b1, z2, a2, b2)
        assert closed == pytest.approx(brute, rel=1e-11, abs=1e-11)


def test_product_integral_degenerate_arguments() -> None:
    # Equal z's hit the divided-difference fallback.
    z = 1.8 - 0.6j
    closed = product_integral(0.9, z, 1.0, 0.5j, z, -0.3, 1.0)
    brute = _brute_product(0.9, z, 1.0, 0.5j, z, -0.3, 1.0)
    assert closed == pytest.approx(brute, rel=1e-11)
    # Both z's zero: u_i = a_i + b_i x exactly.
    closed = product_integral(2.0, 0.0, 1.0, 2.0, 0.0, 3.0, -1.0)
    exact = 1.0 * 3.0 * 2.0 + (1.0 * -1.0 + 2.0 * 3.0) * 2.0 + 2.0 * -1.0 * 8.0 / 3.0
    assert closed == pytest.approx(exact, rel=1e-12)
    # One z zero, one finite.
    closed = product_integral(1.3, 0.0, 0.7, -0.2, 4.0, 0.5, 1.5)
    brute = _brute_product(1.3, 0.0, 0.7, -0.2, 4.0, 0.5, 1.5)
    assert closed == pytest.approx(brute, rel=1e-11)


def test_product_integral_symmetry() -> None:
    z1, z2 = 2.0 + 0.3j, -1.0 - 0.8j
    ab = (0.4 + 0.2j, 1.1, -0.6j, 0.9 - 0.1j)
    fwd = product_integral(0.75, z1, ab[0], ab[1], z2, ab[2], ab[3])
    rev = product_integral(0.75, z2, ab[2], ab[3], z1, ab[0], ab[1])
    assert fwd == pytest.approx(rev, rel=1e-13)


def test_gauss_legendre_polynomial_exactness() -> None:
    x, w = gauss_legendre(8)
    assert x.shape == w.shape == (8,)
    assert float(np.sum(w)) == pytest.approx(2.0, rel=1e-15)
    for p in range(16):  # exact through degree 2*order - 1
        integral = float(np.sum(w * x ** p))
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert integral == pytest.approx(exact, abs=1e-14)
    assert gauss_legendre(8) is gauss_legendre(8)  # cached


def test_panel_nodes_integrate_oscillatory_function() -> None:
    nodes, weights = panel_nodes(0.0, 3.0, 6, order=16)
    assert nodes.size == weights.size == 96
    assert float(np.sum(weights)) == pytest.approx(3.0, rel=1e-14)
    value = float(np.sum(weights * np.sin(5.0 * nodes)))
    exact = (1.0 - np.cos(15.0)) / 5.0
    assert value == pytest.approx(exact, abs=1e-13)
