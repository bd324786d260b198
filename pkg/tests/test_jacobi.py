import numpy as np
import pytest

from conftest import random_divisor, random_gaps
from finitegap.domain import ChangeOfVariables, ZDivisor, ZSet, map_set, validate_divisor, validate_set
from finitegap.errors import MassDeficit, WindowMismatch
from finitegap.jacobi import (OneSided, R00_product, _signs_from_residues, assemble_two_sided,
                              extract_divisor, herglotz_to_measure, jacobi_from_context, lanczos,
                              measure_to_jacobi, window_r00)
from finitegap.oracle import finite_section_r00
from finitegap.transform import coupling_a0, r00_matrix, r_values, transform_context

FREE_Z = ZSet((0.0, 1.0), ())


@pytest.fixture(scope="module")
def free_measure(free_ctx):
    return herglotz_to_measure(lambda z: r_values("+", free_ctx, z), FREE_Z,
                               boundary=lambda x: r_values("+", free_ctx, x, boundary=True))


@pytest.fixture(scope="module")
def one_gap_pipeline(one_gap_ctx, one_gap_zset):
    return jacobi_from_context(one_gap_ctx, one_gap_zset)


@pytest.fixture(scope="module")
def two_gap_pipeline(two_gap_ctx, two_gap_zset):
    return jacobi_from_context(two_gap_ctx, two_gap_zset)


def test_free_density(free_measure, free_ctx):
    assert free_measure.total_mass == pytest.approx(1.0, abs=1e-6)
    assert free_measure.atoms == ()
    dens = np.imag(r_values("+", free_ctx, np.array([0.5]), boundary=True))[0] / np.pi
    assert dens == pytest.approx(4 / np.pi, abs=1e-12)
    (_, x, w, _), = free_measure.bands
    assert np.allclose(w, 8 / np.pi * np.sqrt(x * (1 - x)), atol=1e-12)


def test_free_density_by_extrapolation(free_ctx):
    meas = herglotz_to_measure(lambda z: r_values("+", free_ctx, z), FREE_Z)
    assert meas.total_mass == pytest.approx(1.0, abs=1e-6)


def test_free_coefficients(free_measure):
    half = measure_to_jacobi(free_measure, 21)
    err = np.abs(half.a[:20] - 0.25) + np.abs(half.b[:20] - 0.5)
    assert np.max(err) <= 1e-8


def test_equal_atoms_terminate():
    x = np.array([0.1, 0.4, 0.5, 0.9])
    half = lanczos(x, np.full(4, 0.25), 10)
    assert len(half.b) == 4
    # the recurrence reproduces the support as its eigenvalues
    mat = np.diag(half.b) + np.diag(half.a, 1) + np.diag(half.a, -1)
    assert np.allclose(np.linalg.eigvalsh(mat), x, atol=1e-12)


def test_symmetric_measure_has_constant_diagonal():
    x = np.linspace(0, 1, 301)
    w = 1 + np.cos(4 * np.pi * x) ** 2
    half = lanczos(x, w, 30)
    assert np.max(np.abs(half.b - 0.5)) < 1e-12


def test_coefficient_cap(free_measure):
    with pytest.raises(ValueError):
        measure_to_jacobi(free_measure, 61)


def test_mass_deficit(free_ctx):
    with pytest.raises(MassDeficit):
        herglotz_to_measure(lambda z: 2 * r_values("+", free_ctx, z), FREE_Z,
                            boundary=lambda x: 2 * r_values("+", free_ctx, x, boundary=True))


@pytest.mark.parametrize("eps,plus_atoms,minus_atoms", [(1, 1, 0), (-1, 0, 1)])
def test_one_gap_atoms(one_gap, eps, plus_atoms, minus_atoms):
    div = validate_divisor(one_gap, [(-0.4, eps)])
    ctx = transform_context(one_gap, div)
    zset, _ = map_set(ctx.cov, one_gap, div)
    _, meas = jacobi_from_context(ctx, zset)
    assert len(meas["+"].atoms) == plus_atoms
    assert len(meas["-"].atoms) == minus_atoms
    (a, b), = zset.gaps
    for x, w in meas["+"].atoms + meas["-"].atoms:
        assert a < x < b and w > 0


def test_zero_gap_assembly(free_ctx):
    zset = ZSet((0.0, 1.0), ())
    jac, _ = jacobi_from_context(free_ctx, zset)
    a = np.array(list(jac.a.values()))
    b = np.array(list(jac.b.values()))
    assert np.max(np.abs(a - 0.25)) < 1e-8
    assert np.max(np.abs(b - 0.5)) < 1e-8
    assert jac.a[0] == pytest.approx(0.25, abs=1e-12)


def test_window_mismatch():
    with pytest.raises(WindowMismatch):
        assemble_two_sided(OneSided(np.ones(2), np.ones(3)), OneSided(np.ones(3), np.ones(4)), 0.2)
    with pytest.raises(WindowMismatch):
        assemble_two_sided(OneSided(np.ones(2), np.ones(3)), OneSided(np.ones(2), np.ones(3)), 0.0)


@pytest.mark.parametrize("name", ["one", "two"])
def test_coefficient_bounds(name, one_gap_pipeline, two_gap_pipeline, one_gap_zset, two_gap_zset):
    (jac, _), zset = ((one_gap_pipeline, one_gap_zset) if name == "one"
                      else (two_gap_pipeline, two_gap_zset))
    lo, hi = zset.outer
    a = np.array(list(jac.a.values()))
    b = np.array(list(jac.b.values()))
    assert np.all(a > 0) and np.all(a <= (hi - lo) / 2)
    assert np.all(b >= lo) and np.all(b <= hi)


def test_finite_section_matches_r00(two_gap_ctx, two_gap_zset, two_gap_pipeline):
    jac, _ = two_gap_pipeline
    lo, hi = two_gap_zset.outer
    for z in [0.3 + 0.1j, 0.9 + 0.05j, 1.2 + 0.0j, -0.2 + 0.0j, 0.55 + 0.2j]:
        est = finite_section_r00(jac, z)
        ref = r00_matrix(two_gap_ctx, z)
        assert abs(est.value - ref) / abs(ref) <= 1e-5


def test_r00_product_zeros(two_gap_ctx, two_gap_zset):
    zdiv = extract_divisor(two_gap_ctx, two_gap_zset)
    assert np.allclose(R00_product(two_gap_zset, zdiv, np.array(zdiv.points)), 0, atol=1e-15)
    # and r00 from the matrix formula vanishes there as well
    for x in zdiv.points:
        assert abs(r00_matrix(two_gap_ctx, x)) < 1e-9


def test_extract_from_window_matches_context(two_gap_ctx, two_gap_zset, two_gap_pipeline):
    jac, _ = two_gap_pipeline
    a = extract_divisor(two_gap_ctx, two_gap_zset)
    b = extract_divisor(jac, two_gap_zset)
    assert np.max(np.abs(np.array(a.points) - np.array(b.points))) <= 1e-6
    assert a.signs == b.signs


@pytest.mark.parametrize("k", [0, 1])
def test_eps_flip_control(two_gap, k):
    cov = ChangeOfVariables(-2.0)
    base = [(-0.6, 1), (-0.2, -1)]
    flip = list(base)
    flip[k] = (flip[k][0], -flip[k][1])
    outs = []
    for entries in (base, flip):
        div = validate_divisor(two_gap, entries)
        zset, _ = map_set(cov, two_gap, div)
        outs.append(extract_divisor(transform_context(two_gap, div), zset))
    assert outs[0].signs[k] == -outs[1].signs[k]


def test_edge_root_gets_plus_sign():
    f = lambda z: 1.0 / (z - 0.3)
    assert _signs_from_residues(f, f, 0.2, 0.2, 0.4, 1e-6) == 1
    assert _signs_from_residues(f, f, 0.4, 0.2, 0.4, 1e-6) == 1


def test_round_trip_random_configurations():
    # signs are compared only where the window can resolve them: a 60-term
    # window does not see poles within ~1/(8*60) of a gap edge
    rng = np.random.default_rng(21)
    cov = ChangeOfVariables(-2.0)
    worst, compared = 0.0, 0
    for i in range(20):
        fgs = validate_set(random_gaps(rng, 1 + i % 2, min_width=0.08))
        div = random_divisor(rng, fgs, margin=0.15)
        ctx = transform_context(fgs, div)
        zset, _ = map_set(cov, fgs, div)
        jac, _ = jacobi_from_context(ctx, zset)
        a = extract_divisor(ctx, zset)
        b = extract_divisor(jac, zset)
        worst = max(worst, float(np.max(np.abs(np.array(a.points) - np.array(b.points)))))
        for (lo, hi), x, sa, sb in zip(zset.gaps, a.points, a.signs, b.signs):
            if min(x - lo, hi - x) >= 2e-3:
                assert sa == sb
                compared += 1
    assert worst <= 1e-6
    assert compared >= 20


def test_coefficients_recur(one_gap_pipeline):
    jac, _ = one_gap_pipeline
    a = np.array([jac.a[i] for i in range(1, 60)])
    x = a - a.mean()
    ac = np.correlate(x, x, "full")[len(x) - 1:] / (x @ x)
    assert np.max(ac[2:30]) > 0.8


def test_window_resolvent_matches_product(two_gap_ctx, two_gap_zset, two_gap_pipeline):
    jac, _ = two_gap_pipeline
    zdiv = extract_divisor(two_gap_ctx, two_gap_zset)
    z = 0.5 + 0.9j
    assert window_r00(jac, z) == pytest.approx(R00_product(two_gap_zset, zdiv, z), rel=1e-8)
    assert coupling_a0(two_gap_ctx) == jac.a[0]
