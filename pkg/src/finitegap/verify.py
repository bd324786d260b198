"""Scene-level identity suite shared by the ``verify`` subcommand and the tests."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .comb import abelian_basis, comb_data, comb_of_set, martin_map, set_from_comb
from .domain import Scene, map_set
from .flow import FlowState, detect_period, frequency_check, potential_sampler
from .jacobi import R00_product, extract_divisor, jacobi_from_context
from .oracle import (energy_variation_check, finite_section_r00, integrate_schrodinger,
                     j_monotonicity_check, riccati_m)
from .transform import coupling_a0, jacobi_reflectionless_defect, r00_matrix, transform_context
from .weyl import check_herglotz, m_derivative_real, reflectionless_defect, weyl_m


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def interior_points(intervals, n: int, margin: float = 0.02) -> np.ndarray:
    """``n`` points spread over the intervals, keeping ``margin`` (relative) off each end."""
    lengths = np.array([b - a for a, b in intervals], float)
    counts = np.maximum(1, np.round(n * lengths / lengths.sum()).astype(int))
    counts[-1] += n - counts.sum()
    out = []
    for (a, b), c in zip(intervals, counts):
        d = margin * (b - a)
        out.append(np.linspace(a + d, b - d, max(int(c), 1)))
    return np.concatenate(out)[:n]


def lambda_bands(fgs, upper: float | None = None):
    upper = (fgs.right[-1] if fgs.g else -1.0) + 1.0 if upper is None else upper
    return fgs.bands(upper)


def z_grid(zset, n: int) -> np.ndarray:
    """Mixed grid off the spectrum: a circle around the z-hull and points above the bands."""
    lo, hi = zset.outer
    c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    k = n // 2
    ring = c + 1.3 * r * np.exp(2j * np.pi * (np.arange(k) + 0.5) / k)
    near = interior_points(zset.bands(), n - k) + 0.05j * (hi - lo)
    return np.concatenate([ring, near])


def _timed(name, tol, fn, smaller=True):
    t = time.perf_counter()
    val = float(fn())
    ok = val <= tol if smaller else val >= tol
    return Check(name, val, tol, bool(ok and np.isfinite(val)), time.perf_counter() - t)


def run_checks(scene: Scene, grid: int = 50, tol: float | None = None,
               oracle: bool = True) -> list[Check]:
    """Identity suite for one scene.  ``tol`` overrides every default tolerance."""
    fgs, div, cov = scene.fgs, scene.divisor, scene.cov
    T = (lambda t: t) if tol is None else (lambda t: tol)
    checks = []
    ctx = transform_context(fgs, div, cov.lambda_star)
    zset, _ = map_set(cov, fgs, div)
    lam_pts = interior_points(lambda_bands(fgs), grid)
    z_pts = interior_points(zset.bands(), grid)

    checks.append(_timed("herglotz_min_im", 0.0, lambda: check_herglotz(
        fgs, div, lam_pts + 0.1j), smaller=False))
    checks.append(_timed("continuum_reflectionless_defect", T(1e-6),
                         lambda: reflectionless_defect(fgs, div, lam_pts)[0]))
    checks.append(_timed("jacobi_reflectionless_defect", T(1e-6),
                         lambda: jacobi_reflectionless_defect(ctx, z_pts)[0]))
    if fgs.g == 0:
        width = 1.0 / (-1.0 - cov.lambda_star)
        checks.append(_timed("a0_zero_gap", T(1e-12),
                             lambda: abs(coupling_a0(ctx) - width / 4.0)))
    jac, meas = jacobi_from_context(ctx, zset)
    checks.append(_timed("measure_mass_defect", T(1e-6), lambda: max(
        abs(meas["+"].total_mass - 1), abs(meas["-"].total_mass - 1))))
    if fgs.g == 0:
        width = 1.0 / (-1.0 - cov.lambda_star)
        half = jac.one_sided("+")
        checks.append(_timed("free_coefficients", T(1e-8), lambda: float(np.max(
            np.abs(half.a[:20] - width / 4) + np.abs(half.b[:20] - width / 2)))))
    zdiv = extract_divisor(ctx, zset)
    zs = z_grid(zset, grid)
    mat = r00_matrix(ctx, zs)
    prod = R00_product(zset, zdiv, zs)
    fs = np.array([finite_section_r00(jac, z).value for z in zs])
    checks.append(_timed("r00_matrix_vs_product", T(1e-5),
                         lambda: np.max(np.abs(mat - prod) / np.abs(mat))))
    checks.append(_timed("r00_matrix_vs_finite_section", T(1e-5),
                         lambda: np.max(np.abs(mat - fs) / np.abs(mat))))
    if fgs.g:
        jdiv = extract_divisor(jac, zset)
        checks.append(_timed("divisor_roundtrip_jacobi", T(1e-6), lambda: max(
            max(abs(a - b) for a, b in zip(zdiv.points, jdiv.points)),
            0.0 if zdiv.signs == jdiv.signs else np.inf)))
        gaps = np.array(fgs.gaps)
        checks.append(_timed("comb_roundtrip", T(1e-8), lambda: np.max(np.abs(
            np.array(set_from_comb(comb_of_set(fgs)).gaps) - gaps))))
        omegas = comb_data(martin_map(fgs)).omegas
        basis = abelian_basis(fgs)
        period = np.pi / min(omegas)
        ells = np.linspace(0.0, 10 * period, 400)
        rep = frequency_check(fgs, FlowState(div), ells, basis, omegas)
        checks.append(_timed("frequency_law_relative", T(1e-4 if fgs.g == 1 else 1e-3),
                             lambda: max(rep.relative_errors)))
        checks.append(_timed("phase_linear_residual", T(1e-6), lambda: max(rep.residuals)))
        if fgs.g == 1:
            checks.append(_timed("omega_times_period_minus_pi", T(1e-4), lambda: abs(
                omegas[0] * detect_period(fgs, FlowState(div)) - np.pi)))
    if oracle:
        checks.extend(_oracle_checks(scene, T))
    return checks


def _oracle_checks(scene: Scene, T) -> list[Check]:
    fgs, div = scene.fgs, scene.divisor
    X = 40.0
    q = potential_sampler(fgs, FlowState(div), -X - 1.0, X + 1.0)
    out = []
    lams = [-0.8 + 0.3j, 0.5 + 0.5j, -2.0 + 0.1j, 1.0 + 1.0j, -0.3 + 0.6j]

    def riccati_gap():
        worst = 0.0
        for lam in lams:
            est = riccati_m(q, lam, X)
            worst = max(worst, abs(est.value - weyl_m("+", fgs, div, lam)) + est.error)
        return worst

    out.append(_timed("riccati_vs_weyl_m", T(1e-4), riccati_gap))
    m_func = lambda lam: weyl_m("+", fgs, div, lam)

    def energy():
        ev = energy_variation_check(q, 0.5 + 0.5j, -0.3 + 0.6j, X, m_func=m_func)
        s = scene.cov.lambda_star
        conf = energy_variation_check(q, s, s, X,
                                      dm_func=lambda lam: m_derivative_real("+", fgs, div, lam.real))
        return max(ev.defect + ev.error, conf.defect + conf.error)

    out.append(_timed("energy_variation_defect", T(1e-6), energy))

    def jcheck():
        worst = 0.0
        for lam in (0.3, -0.45, 0.2 + 0.4j, -0.6 + 0.1j):
            tm = integrate_schrodinger(q, lam, 3.0)
            res = j_monotonicity_check(tm.matrix, lam)
            worst = max(worst, tm.det_defect)
            if res.kind == "real":
                worst = max(worst, res.norm)
            elif not res.nonpositive:
                worst = np.inf
        return worst

    out.append(_timed("transfer_matrix_identities", T(1e-10), jcheck))
    return out
