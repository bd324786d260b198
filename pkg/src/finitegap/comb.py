"""Comb map of a finite-gap set and related potential theory.

The map is ``Theta(lam) = int_{-1}^{lam} Theta'`` with

    Theta'(lam) = 1/2 * prod_k (lam - c_k) / (sqrt(lam + 1) prod_k sqrt((lam - lam_k^-)(lam - lam_k^+)))

Each square root is the principal one of ``lam - e``, so ``Theta'`` is
analytic in the upper half-plane and positive on the rightmost band.  The
constant ``1/2`` is what makes ``Theta(lam) ~ sqrt(lam)``.  The critical
points ``c_k`` make every gap integral vanish, so ``Im Theta`` drops back to
zero at each right gap edge.  Since the numerator is a monic polynomial, those
conditions are linear in its coefficients and are solved directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import BASE_POINT, CombData, FiniteGapSet, ZSet, validate_set
from .errors import NoConvergence, QuadratureFailure, SingularPeriodMatrix
from .quadrature import DEFAULT_TOL, integrate, ray_integral, segment_integral, sqrt_up


def _hat(points: np.ndarray, skip: tuple[int, ...], t) -> np.ndarray:
    """Product of ``sqrt_up(t - e)`` over branch points not in ``skip``."""
    t = np.asarray(t)
    out = np.ones(t.shape, dtype=complex)
    for i, e in enumerate(points):
        if i not in skip:
            out = out * sqrt_up(t - e)
    return out


def _gap_moments(points: np.ndarray, degree: int, tol: float) -> np.ndarray:
    """``M[k, m] = int_gap_k t**m / sqrt|R(t)| dt`` for gaps between points 2k+1, 2k+2."""
    ngaps = (len(points) - 1) // 2
    out = np.zeros((ngaps, degree + 1))
    for k in range(ngaps):
        i0, i1 = 2 * k + 1, 2 * k + 2
        a, b = points[i0], points[i1]
        for m in range(degree + 1):
            out[k, m] = segment_integral(
                lambda t, m=m: t ** m / np.abs(_hat(points, (i0, i1), t)), a, b, tol=tol).real
    return out


def _critical_polynomial(points: np.ndarray, tol: float) -> np.ndarray:
    """Monic polynomial (ascending coefficients) with zero gap integrals."""
    ngaps = (len(points) - 1) // 2
    if ngaps == 0:
        return np.array([1.0])
    mom = _gap_moments(points, ngaps, tol)
    coef = np.linalg.solve(mom[:, :ngaps], -mom[:, ngaps])
    return np.append(coef, 1.0)


def _gap_roots(poly: np.ndarray, points: np.ndarray) -> np.ndarray:
    roots = np.sort(np.roots(poly[::-1]).real)
    ngaps = (len(points) - 1) // 2
    for k in range(ngaps):
        a, b = points[2 * k + 1], points[2 * k + 2]
        if not a < roots[k] < b:
            raise NoConvergence("critical point not interior to its gap",
                                gap=(a, b), root=float(roots[k]))
    return roots


@dataclass(frozen=True)
class MartinMap:
    """Solved comb map: set, critical points and cached segment integrals."""

    fgs: FiniteGapSet
    critical_points: tuple[float, ...]
    residuals: tuple[float, ...]
    band_increments: tuple[float, ...]
    constant: float = 0.5
    tol: float = DEFAULT_TOL

    @property
    def points(self) -> np.ndarray:
        return self.fgs.branch_points

    def numerator(self, lam):
        out = np.full(np.shape(lam), self.constant, dtype=complex)
        for c in self.critical_points:
            out = out * (lam - c)
        return out

    def derivative(self, lam):
        """``Theta'(lam)`` (boundary value from above on the real line)."""
        lam = np.asarray(lam, dtype=complex)
        return self.numerator(lam) / _hat(self.points, (), lam)


def solve_critical_points(fgs: FiniteGapSet, tol: float = DEFAULT_TOL) -> list[float]:
    """Critical points ``c_k``, one interior point per gap."""
    return list(martin_map(fgs, tol).critical_points)


def martin_map(fgs: FiniteGapSet, tol: float = DEFAULT_TOL) -> MartinMap:
    pts = fgs.branch_points
    poly = _critical_polynomial(pts, tol)
    cs = _gap_roots(poly, pts) if fgs.g else np.array([])
    partial = MartinMap(fgs, tuple(float(c) for c in cs), (), (), tol=tol)
    seg = [_segment(partial, i) for i in range(len(pts) - 1)]
    res = tuple(abs(seg[i]) for i in range(1, len(seg), 2))
    scale = max([abs(v) for v in seg] + [1.0])
    if any(r > 1e-10 * scale for r in res):
        raise NoConvergence("gap integrals did not vanish", residuals=res)
    bands = tuple(float(seg[i].real) for i in range(0, len(seg), 2))
    return MartinMap(fgs, partial.critical_points, res, bands, tol=tol)


def _segment(mm: MartinMap, i: int, lo: float | None = None, hi: float | None = None) -> complex:
    """Integral of Theta' over (part of) the segment between branch points i, i+1."""
    pts = mm.points
    a, b = pts[i], pts[i + 1]

    def f(t):
        return mm.numerator(t) / (1j * _hat(pts, (i, i + 1), t))

    return complex(segment_integral(f, a, b, lo, hi, tol=mm.tol))


def _theta_real(mm: MartinMap, x: float) -> complex:
    pts = mm.points
    if x <= BASE_POINT:
        f = lambda t: mm.numerator(t) / (1j * _hat(pts, (0,), t))
        return complex(ray_integral(f, BASE_POINT, x, tol=mm.tol))
    total = 0j
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if x >= b:
            total += mm.band_increments[i // 2] if i % 2 == 0 else 0.0
            continue
        return total + _segment(mm, i, a, x)
    last = len(pts) - 1
    f = lambda t: mm.numerator(t) / _hat(pts, (last,), t)
    return total + complex(ray_integral(f, pts[last], x, tol=mm.tol))


def theta_eval(mm: MartinMap, lam: complex) -> complex:
    """Value of the comb map at ``lam``.

    Real arguments give the boundary value from the upper half-plane.  Points
    in the lower half-plane are handled by reflection.
    """
    lam = complex(lam)
    if lam.imag < 0:
        return theta_eval(mm, lam.conjugate()).conjugate()
    base = _theta_real(mm, lam.real)
    if lam.imag == 0:
        return base
    x, y = lam.real, lam.imag
    # s = u**2 tames the square-root behaviour when x sits on a branch point
    f = lambda u: 2j * u * mm.derivative(x + 1j * u * u)
    try:
        return base + complex(integrate(f, 0.0, np.sqrt(y), tol=mm.tol))
    except QuadratureFailure as exc:
        raise QuadratureFailure("vertical path integral failed", lam=lam) from exc


def comb_data(mm: MartinMap) -> CombData:
    """Frequencies ``omega_k = Re Theta`` on gap k and heights ``h_k = Im Theta(c_k)``."""
    omegas, heights = [], []
    acc = 0.0
    pts = mm.points
    for k in range(mm.fgs.g):
        acc += mm.band_increments[k]
        omegas.append(acc)
        i = 2 * k + 1
        heights.append(abs(_segment(mm, i, pts[i], mm.critical_points[k]).imag))
    return CombData(tuple(omegas), tuple(heights))


def comb_of_set(fgs: FiniteGapSet, tol: float = DEFAULT_TOL) -> CombData:
    return comb_data(martin_map(fgs, tol))


# ---------------------------------------------------------------- inversion

def _to_free(gaps: np.ndarray) -> np.ndarray:
    edges = np.concatenate([[BASE_POINT], gaps.ravel()])
    return np.log(np.diff(edges))


def _from_free(u: np.ndarray) -> np.ndarray:
    edges = BASE_POINT + np.cumsum(np.exp(u))
    return edges.reshape(-1, 2)


def _comb_vector(gaps: np.ndarray, tol: float) -> np.ndarray:
    cd = comb_of_set(FiniteGapSet(tuple(map(tuple, gaps))), tol)
    return np.concatenate([cd.omegas, cd.heights])


def _newton(target: np.ndarray, u0: np.ndarray, tol: float, max_iter: int,
            ftol: float) -> tuple[np.ndarray, float]:
    u = u0.copy()

    def resid(v):
        return _comb_vector(_from_free(v), tol) - target

    r = resid(u)
    nr = np.linalg.norm(r)
    for _ in range(max_iter):
        if nr < ftol:
            return u, nr
        n = u.size
        jac = np.empty((n, n))
        for j in range(n):
            h = 1e-6
            e = np.zeros(n)
            e[j] = h
            jac[:, j] = (resid(u + e) - resid(u - e)) / (2 * h)
        step = np.linalg.solve(jac, -r)
        t = 1.0
        while True:
            cand = u + t * step
            try:
                rc = resid(cand)
                nc = np.linalg.norm(rc)
            except (NoConvergence, QuadratureFailure, np.linalg.LinAlgError):
                nc = np.inf
            if nc < nr or t < 1e-6:
                break
            t *= 0.5
        if not np.isfinite(nc) or nc >= nr:
            break
        u, r, nr = cand, rc, nc
    return u, nr


def set_from_comb(comb: CombData, tol: float = DEFAULT_TOL, ftol: float = 1e-11,
                  max_iter: int = 60) -> FiniteGapSet:
    """Recover the gaps whose comb data equal ``comb``.

    Newton iteration on the ``2g`` endpoints, written in unconstrained log
    increments so ordering is preserved.  Each tooth is first fitted on its
    own as a one-gap problem, seeded by the small-gap asymptotics
    ``width ~ 4 h omega`` about ``omega**2 - 1``.
    """
    g = comb.g
    if g == 0:
        return FiniteGapSet(())
    om = np.asarray(comb.omegas, float)
    hs = np.asarray(comb.heights, float)
    if np.any(np.diff(om) <= 0) or np.any(om <= 0) or np.any(hs <= 0):
        raise NoConvergence("comb data must have increasing positive frequencies and positive heights")
    singles = []
    for w, h in zip(om, hs):
        c = w * w - 1.0
        half = min(2.0 * h * w, 0.45 * (c + 1.0))
        g0 = np.array([[c - half, c + half]])
        u1, _ = _newton(np.array([w, h]), _to_free(g0), tol, max_iter, 1e-6)
        singles.append(_from_free(u1)[0])
    guess = np.array(singles)
    flat = guess.ravel()
    if np.any(np.diff(np.concatenate([[BASE_POINT], flat])) <= 0):
        mids = np.array([w * w - 1.0 for w in om])
        spacing = np.diff(np.concatenate([[BASE_POINT], mids]))
        half = 0.25 * np.minimum(spacing, np.append(spacing[1:], spacing[-1]))
        guess = np.stack([mids - half, mids + half], axis=1)
    # iterate to stagnation; ftol only decides success
    u, nr = _newton(np.concatenate([om, hs]), _to_free(guess), tol, max_iter, 1e-15)
    if nr >= ftol:
        raise NoConvergence("comb inversion did not converge", residual=float(nr),
                            best=_from_free(u).tolist())
    return validate_set(_from_free(u).tolist())


# ---------------------------------------------------------------- abelian basis

@dataclass(frozen=True)
class AbelianBasis:
    """Rows ``Q_k`` (ascending coefficients), see :func:`abelian_basis`."""

    fgs: FiniteGapSet
    coefficients: np.ndarray
    period_matrix: np.ndarray

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.period_matrix))

    def q(self, k: int, lam):
        return np.polynomial.polynomial.polyval(lam, self.coefficients[k])


def abelian_basis(fgs: FiniteGapSet, tol: float = DEFAULT_TOL) -> AbelianBasis:
    """Normalised holomorphic differentials ``eta_k = Q_k(lam) dlam / sqrt(R(lam))``.

    ``R = (lam + 1) prod (lam - lam_j^-)(lam - lam_j^+)`` with the branch that
    is positive right of ``E``.  From the upper half-plane this branch equals
    ``i s_m sqrt|R|`` on gap ``m``, where ``s_m = (-1)**(g-1-m)``; the
    normalisation is ``i int_gap_m eta_k = delta_km``, i.e.
    ``int_gap_m Q_k / sqrt|R| = s_m delta_km``.  All leading coefficients are
    then positive.
    """
    g = fgs.g
    if g == 0:
        return AbelianBasis(fgs, np.zeros((0, 0)), np.zeros((0, 0)))
    mom = _gap_moments(fgs.branch_points, g - 1, tol)
    cond = np.linalg.cond(mom)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularPeriodMatrix("gap period matrix is singular", condition=float(cond))
    coef = gap_orientation(g)[:, None] * np.linalg.inv(mom.T)
    return AbelianBasis(fgs, coef, mom)


def gap_orientation(g: int) -> np.ndarray:
    """``s_m = (-1)**(g-1-m)``: sign of ``sqrt(R)/i`` on gap ``m``."""
    return np.array([(-1.0) ** (g - 1 - m) for m in range(g)])


def basis_periods(basis: AbelianBasis, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Recomputed ``i int_gap_m eta_k`` for every basis element (should be identity)."""
    pts = basis.fgs.branch_points
    g = basis.fgs.g
    out = np.zeros((g, g))
    for k in range(g):
        for m in range(g):
            i0, i1 = 2 * m + 1, 2 * m + 2
            out[k, m] = segment_integral(
                lambda t: basis.q(k, t) / np.abs(_hat(pts, (i0, i1), t)),
                pts[i0], pts[i1], tol=tol).real
    return out * gap_orientation(g)[None, :]


# ---------------------------------------------------------------- Widom sums

def green_critical_values(zset: ZSet, tol: float = DEFAULT_TOL) -> list[float]:
    """Green function (pole at infinity) of a compact finite-gap set at its critical points."""
    if zset.g == 0:
        return []
    edges = [zset.outer[0]]
    for a, b in sorted(zset.gaps):
        edges += [a, b]
    edges.append(zset.outer[1])
    pts = np.array(edges)
    poly = np.append(_critical_polynomial(pts, tol), [])
    cs = _gap_roots(poly, pts)
    vals = []
    for k, c in enumerate(cs):
        i0, i1 = 2 * k + 1, 2 * k + 2
        # product form: the monomial expansion cancels badly near clustered gaps
        f = lambda t: np.prod([t - r for r in cs], axis=0) / np.abs(_hat(pts, (i0, i1), t))
        vals.append(abs(segment_integral(f, pts[i0], pts[i1], pts[i0], c, tol=tol).real))
    return vals


def widom_diagnostic(set_generator, truncation: int, lambda_star: float = -2.0,
                     tol: float = DEFAULT_TOL) -> list[float]:
    """Partial sums of critical Green values for truncations ``0..truncation``.

    ``set_generator(g)`` returns the first ``g`` gaps of a nested family.
    """
    from .domain import ChangeOfVariables, map_set

    cov = ChangeOfVariables(lambda_star)
    sums = []
    for g in range(truncation + 1):
        fgs = validate_set(set_generator(g))
        zset, _ = map_set(cov, fgs)
        sums.append(float(sum(green_critical_values(zset, tol))))
    return sums
