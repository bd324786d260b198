import numpy as np
import pytest

from finitegap.errors import DepthExceedsWindow
from finitegap.flow import FlowState, potential_sampler
from finitegap.oracle import (constant_jacobi, energy_variation_check, finite_section_r,
                              finite_section_r00, integrate_schrodinger, j_monotonicity_check,
                              riccati_m)
from finitegap.transform import jacobi_r
from finitegap.weyl import m_derivative_real, weyl_m

X = 40.0


@pytest.fixture(scope="module")
def one_gap_q(one_gap, one_gap_div):
    return potential_sampler(one_gap, FlowState(one_gap_div), -X - 1.0, X + 1.0)


@pytest.mark.parametrize("w,ell", [(0.7, 3.0), (2.0, 1.3), (0.1, 10.0)])
def test_free_transfer_matrix(w, ell):
    tm = integrate_schrodinger(0.0, w * w, ell)
    u1, du1 = np.cos(w * ell), -w * np.sin(w * ell)
    u2, du2 = np.sin(w * ell) / w, np.cos(w * ell)
    assert np.allclose(tm.matrix, [[u1, du1], [u2, du2]], atol=1e-10)
    assert tm.error < 1e-6


def test_free_transfer_matrix_at_zero():
    tm = integrate_schrodinger(0.0, 0.0, 2.5)
    assert np.allclose(tm.matrix, [[1, 0], [2.5, 1]], atol=1e-12)


def test_wronskian_random():
    rng = np.random.default_rng(12)
    for _ in range(5):
        c = rng.normal(size=3)
        q = lambda x, c=c: c[0] + c[1] * np.sin(c[2] * x)
        lam = complex(rng.normal(), abs(rng.normal()))
        assert integrate_schrodinger(q, lam, rng.uniform(1, 5)).det_defect <= 1e-10


def test_riccati_constant_potential():
    lam = -2.0 + 0.1j
    est = riccati_m(lambda x: -1.0, lam, X)
    assert abs(est.value + np.sqrt(-1 - lam)) <= 1e-6
    minus = riccati_m(lambda x: -1.0, lam, X, side="-")
    assert abs(minus.value + np.sqrt(-1 - lam)) <= 1e-6


def test_riccati_one_gap(one_gap, one_gap_div, one_gap_q):
    for lam in [-0.8 + 0.3j, 0.5 + 0.5j, -2.0 + 0.1j, 1.0 + 1.0j, -0.3 + 0.6j]:
        est = riccati_m(one_gap_q, lam, X)
        assert abs(est.value - weyl_m("+", one_gap, one_gap_div, lam)) + est.error <= 1e-4
        est = riccati_m(one_gap_q, lam, X, side="-")
        assert abs(est.value - weyl_m("-", one_gap, one_gap_div, lam)) + est.error <= 1e-4


def test_riccati_converges_in_X(one_gap, one_gap_div, one_gap_q):
    lam = 0.5 + 0.5j
    ref = weyl_m("+", one_gap, one_gap_div, lam)
    errs = [abs(riccati_m(one_gap_q, lam, x).value - ref) for x in (10.0, 20.0, 40.0)]
    assert errs[0] > errs[1] > errs[2]


def test_energy_variation_constant_potential():
    l1, l2 = 0.3 + 0.4j, -1.5 + 0.2j
    ev = energy_variation_check(lambda x: -1.0, l1, l2, X)
    s1, s2 = np.sqrt(-1 - l1), np.sqrt(-1 - l2)
    assert abs(ev.integral - 1 / (s1 + s2)) <= 1e-10
    assert ev.defect <= 1e-10


def test_energy_variation_one_gap(one_gap, one_gap_div, one_gap_q):
    m = lambda lam: weyl_m("+", one_gap, one_gap_div, lam)
    ev = energy_variation_check(one_gap_q, 0.5 + 0.5j, -0.3 + 0.6j, X, m_func=m)
    assert ev.defect + ev.error <= 1e-6
    # without the closed form the Riccati values give the divided difference
    ev = energy_variation_check(one_gap_q, 0.5 + 0.5j, -0.3 + 0.6j, X)
    assert ev.defect + ev.error <= 1e-6


def test_energy_variation_confluent(one_gap, one_gap_div, one_gap_q):
    dm = lambda lam: m_derivative_real("+", one_gap, one_gap_div, lam.real)
    ev = energy_variation_check(one_gap_q, -2.0, -2.0, X, dm_func=dm)
    assert ev.defect + ev.error <= 1e-6
    fd = energy_variation_check(one_gap_q, -2.0 + 0.3j, -2.0 + 0.3j, X)
    assert fd.defect <= 1e-6


@pytest.mark.parametrize("lam", [0.3, -0.45, 2.0])
def test_j_identity_real(one_gap_q, lam):
    tm = integrate_schrodinger(one_gap_q, lam, 3.0)
    res = j_monotonicity_check(tm.matrix, lam)
    assert res.kind == "real" and res.norm <= 1e-10


@pytest.mark.parametrize("lam", [0.2 + 0.4j, -0.6 + 0.1j, 1.5 + 2.0j])
def test_j_quotient_nonpositive(one_gap_q, lam):
    res = j_monotonicity_check(integrate_schrodinger(one_gap_q, lam, 3.0).matrix, lam)
    assert res.kind == "complex" and res.nonpositive


@pytest.mark.parametrize("w", [0.5, 1.0, 2.0])
def test_j_identity_closed_form(w):
    ell = 1.7
    mat = np.array([[np.cos(w * ell), -w * np.sin(w * ell)], [np.sin(w * ell) / w, np.cos(w * ell)]])
    assert j_monotonicity_check(mat, w * w).norm <= 1e-14


def test_finite_section_free_closed_form(free_ctx):
    jac = constant_jacobi(0.25, 0.5, 200)
    est = finite_section_r(jac, -1.0, 200)
    assert abs(est.value - 4 * (3 - 2 * np.sqrt(2))) + est.error <= 1e-8


def test_finite_section_error_decreases(free_ctx):
    jac = constant_jacobi(0.25, 0.5, 200)
    z = 0.5 + 0.02j
    ref = jacobi_r("+", free_ctx, z)
    errs = [abs(finite_section_r(jac, z, n).value - ref) for n in (50, 100, 200)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= finite_section_r(jac, z, 200).error


def test_finite_section_two_sided_free():
    # diagonal of the free two-sided resolvent: -1/sqrt((z - b)^2 - 4 a^2)
    jac = constant_jacobi(0.25, 0.5, 200)
    z = 2.0
    est = finite_section_r00(jac, z)
    assert abs(est.value + 1 / np.sqrt((z - 0.5) ** 2 - 0.25)) + est.error <= 1e-10


def test_depth_exceeds_window():
    jac = constant_jacobi(0.25, 0.5, 10)
    with pytest.raises(DepthExceedsWindow):
        finite_section_r(jac, 2.0, 11)
    with pytest.raises(DepthExceedsWindow):
        finite_section_r00(jac, 2.0, 11)
