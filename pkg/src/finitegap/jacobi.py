"""Spectral measures, recurrence coefficients and two-sided Jacobi windows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .domain import ZDivisor, ZSet
from .errors import (AmbiguousPole, EvalOnSpectrum, LostPositivity, MassDeficit,
                     SingularSection, WindowMismatch)
from .quadrature import gauss_legendre
from .transform import TransformContext, coupling_a0, r00_matrix, r_values
from .weyl import boundary_limit

NODES_PER_BAND = 200
MAX_COEFFICIENTS = 60


@dataclass(frozen=True)
class SpectralMeasure:
    """Discretised measure: band nodes with quadrature-weighted masses plus atoms.

    ``bands[i] = (interval, nodes, density, masses)`` where ``masses`` already
    include the quadrature weights, so ``sum(masses)`` is the band mass.
    """

    bands: tuple
    atoms: tuple[tuple[float, float], ...]

    @property
    def total_mass(self) -> float:
        return float(sum(b[3].sum() for b in self.bands) + sum(w for _, w in self.atoms))

    def discrete(self) -> tuple[np.ndarray, np.ndarray]:
        xs = [b[1] for b in self.bands] + [np.array([x for x, _ in self.atoms])]
        ws = [b[3] for b in self.bands] + [np.array([w for _, w in self.atoms])]
        return np.concatenate(xs), np.concatenate(ws)


def band_nodes(a: float, b: float, n: int = NODES_PER_BAND):
    """Gauss nodes in ``theta`` mapped by ``x = mid - half*cos(theta)``; returns nodes and dx weights."""
    t, w = gauss_legendre(n)
    th = 0.5 * np.pi * (t + 1.0)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid - half * np.cos(th)
    dx = 0.5 * np.pi * w * half * np.sin(th)
    return x, dx


def _residue(f, x0: float, radius: float, m: int = 64) -> complex:
    """``(1/2 pi i) * contour integral of f`` on a circle around ``x0`` (no real nodes)."""
    ang = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    z = x0 + radius * np.exp(1j * ang)
    return complex(np.mean(f(z) * (z - x0)))


def _inverse_real(r, xs: np.ndarray) -> np.ndarray:
    # Re(1/r) on real points, zero where r is infinite
    vals = r(xs.astype(complex))
    with np.errstate(invalid="ignore", divide="ignore"):
        inv = np.real(1.0 / vals)
    return np.where(np.isfinite(vals), inv, 0.0)


def herglotz_to_measure(r, zset: ZSet, boundary=None, n: int = NODES_PER_BAND,
                        mass_tol: float = 1e-6, scan: int = 4000) -> SpectralMeasure:
    """Measure of a Herglotz function supported on ``zset`` plus gap atoms.

    ``r(z)`` evaluates at complex points.  ``boundary(x)``, if given, returns
    the exact boundary value ``r(x + i0)``; otherwise the density comes from
    extrapolation in ``eta``.  Atoms are found where ``1/r`` falls through
    zero inside a gap; their weights are contour residues.
    """
    bands = []
    for a, b in zset.bands():
        x, dx = band_nodes(a, b, n)
        vals = boundary(x) if boundary is not None else boundary_limit(r, x)
        dens = np.maximum(np.imag(vals) / np.pi, 0.0)
        bands.append(((a, b), x, dens, dens * dx))
    atoms = []
    for a, b in sorted(zset.gaps):
        # clustered at the edges, where atoms of nearly closed gaps hide
        th = np.pi * np.arange(1, scan + 1) / (scan + 1)
        xs = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(th)
        inv = _inverse_real(r, xs)
        idx = np.nonzero((inv[:-1] > 0) & (inv[1:] <= 0))[0]
        for i in idx:
            f = lambda x: float(_inverse_real(r, np.array([x]))[0])
            x0 = brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15) if inv[i + 1] < 0 else xs[i + 1]
            rad = 0.5 * min(x0 - a, b - x0)
            w = -_residue(r, x0, rad).real
            if w > 0:
                atoms.append((float(x0), float(w)))
    meas = SpectralMeasure(tuple(bands), tuple(atoms))
    if abs(meas.total_mass - 1.0) > mass_tol:
        raise MassDeficit(f"total mass {meas.total_mass:.12g} differs from 1",
                          mass=meas.total_mass)
    return meas


@dataclass(frozen=True)
class OneSided:
    """Recurrence coefficients: ``b[i]`` diagonal, ``a[i]`` couples rows ``i`` and ``i+1``."""

    a: np.ndarray
    b: np.ndarray


def measure_to_jacobi(measure: SpectralMeasure, n: int) -> OneSided:
    """Lanczos on the discretised measure with full reorthogonalisation."""
    if n > MAX_COEFFICIENTS:
        raise ValueError(f"at most {MAX_COEFFICIENTS} coefficients are supported")
    x, w = measure.discrete()
    return lanczos(x, w, n)


def lanczos(x: np.ndarray, w: np.ndarray, n: int) -> OneSided:
    """Recurrence coefficients of ``sum_i w_i delta_{x_i}`` (stops early for small supports)."""
    keep = w > 0
    x, w = x[keep], w[keep]
    n = min(n, x.size)
    v = np.sqrt(w / w.sum())
    basis = np.zeros((n, x.size))
    a = np.zeros(max(n - 1, 0))
    b = np.zeros(n)
    prev = np.zeros_like(v)
    beta = 0.0
    for j in range(n):
        basis[j] = v
        u = x * v - beta * prev
        b[j] = v @ u
        u = u - b[j] * v
        for _ in range(2):
            u = u - basis[: j + 1].T @ (basis[: j + 1] @ u)
        if j == n - 1:
            break
        beta = float(np.linalg.norm(u))
        if not beta > 1e-13 * max(1.0, float(np.max(np.abs(x)))):
            if x.size <= j + 1:
                return OneSided(a[:j], b[: j + 1])
            raise LostPositivity(f"a_{j + 1}**2 <= 0 in the recurrence", index=j + 1)
        a[j] = beta
        prev, v = v, u / beta
    return OneSided(a, b)


@dataclass(frozen=True)
class JacobiOperator:
    """Two-sided window; ``b[n]`` for ``n`` in ``[-N, N-1]``, ``a[n]`` couples ``n-1`` and ``n``."""

    a: dict = field(default_factory=dict)
    b: dict = field(default_factory=dict)

    @property
    def window(self) -> tuple[int, int]:
        return min(self.b), max(self.b)

    def matrix(self, lo: int | None = None, hi: int | None = None) -> np.ndarray:
        w0, w1 = self.window
        lo = w0 if lo is None else lo
        hi = w1 if hi is None else hi
        idx = range(lo, hi + 1)
        m = np.diag([self.b[i] for i in idx])
        for i in range(lo + 1, hi + 1):
            m[i - lo, i - lo - 1] = m[i - lo - 1, i - lo] = self.a[i]
        return m

    def one_sided(self, side: str) -> OneSided:
        w0, w1 = self.window
        if side == "+":
            return OneSided(np.array([self.a[i] for i in range(1, w1 + 1)]),
                            np.array([self.b[i] for i in range(0, w1 + 1)]))
        return OneSided(np.array([self.a[-i] for i in range(1, -w0)]),
                        np.array([self.b[-i] for i in range(1, -w0 + 1)]))


def assemble_two_sided(minus: OneSided, plus: OneSided, a0: float) -> JacobiOperator:
    """Place ``J_-`` on negative indices (``b_{-1}`` first) and ``J_+`` on ``n >= 0``."""
    if len(minus.b) != len(plus.b) or len(minus.a) != len(plus.a):
        raise WindowMismatch("half-line windows differ in length",
                             minus=len(minus.b), plus=len(plus.b))
    if not a0 > 0:
        raise WindowMismatch("coupling a0 must be positive", a0=a0)
    n = len(plus.b)
    b = {i: float(plus.b[i]) for i in range(n)}
    b.update({-(i + 1): float(minus.b[i]) for i in range(n)})
    a = {0: float(a0)}
    a.update({i + 1: float(plus.a[i]) for i in range(n - 1)})
    a.update({-(i + 1): float(minus.a[i]) for i in range(n - 1)})
    return JacobiOperator(a, b)


def tridiagonal_resolvent(b: np.ndarray, a: np.ndarray, z: complex, row: int) -> complex:
    """``<(J - z)^{-1} e_row, e_row>`` for a finite symmetric tridiagonal ``J``."""
    n = len(b)
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = a
    ab[1] = np.asarray(b) - z
    ab[2, :-1] = a
    rhs = np.zeros(n, dtype=complex)
    rhs[row] = 1.0
    try:
        sol = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSection(f"finite section singular at z = {z}", z=z) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSection(f"finite section singular at z = {z}", z=z)
    return complex(sol[row])


def window_r00(jac: JacobiOperator, z: complex, half: int | None = None) -> complex:
    """Diagonal resolvent at ``delta_0`` of the window ``[-half, half-1]``."""
    w0, w1 = jac.window
    half = min(-w0, w1 + 1) if half is None else half
    idx = range(-half, half)
    b = np.array([jac.b[i] for i in idx])
    a = np.array([jac.a[i] for i in range(-half + 1, half)])
    return tridiagonal_resolvent(b, a, z, half)


def window_r(jac: JacobiOperator, side: str, z: complex) -> complex:
    os_ = jac.one_sided(side)
    return tridiagonal_resolvent(os_.b, os_.a, z, 0)


def R00_product(zset: ZSet, zdiv: ZDivisor, z, boundary: bool = False):
    """``-1/sqrt((z - z0^-)(z - z0^+)) * prod (z - x_k)/sqrt((z - z_k^-)(z - z_k^+))``.

    Each pair root is ``sqrt(z - a) sqrt(z - b)`` (principal factors), which
    is analytic off ``[a, b]`` and behaves like ``z``; so ``R00 ~ -1/z``.
    """
    z = np.asarray(z, dtype=complex)
    if not boundary and z.ndim == 0 and z.imag == 0 and zset.in_spectrum(z.real):
        raise EvalOnSpectrum(f"z = {z.real} lies on the spectrum", z=z.real)
    if boundary:
        z = np.where(z.imag == 0, z.real + 0j, z)

    def pair(a, b):
        return np.sqrt(z - a) * np.sqrt(z - b)

    out = -1.0 / pair(*zset.outer)
    for (a, b), xk in zip(zset.gaps, zdiv.points):
        out = out * (z - xk) / pair(a, b)
    return complex(out) if out.ndim == 0 else out


def _signs_from_residues(fp, fm, x0: float, a: float, b: float, thresh: float,
                         ratio: float = 0.1) -> int:
    # a window carries small spurious residues, so ambiguity is judged relative to the larger one
    if x0 <= a or x0 >= b:
        return 1
    rad = 0.5 * min(x0 - a, b - x0)
    rp = abs(_residue(fp, x0, rad))
    rm = abs(_residue(fm, x0, rad))
    if min(rp, rm) > max(thresh, ratio * max(rp, rm)):
        raise AmbiguousPole("both 1/r_+ and a0^2 r_- have a pole", x=x0, res_plus=rp, res_minus=rm)
    return 1 if rp >= rm else -1


def extract_divisor(source, zset: ZSet, thresh: float = 1e-6) -> ZDivisor:
    """Zeros of ``R_{0,0}`` in each gap with the pole-side sign.

    ``source`` is either a :class:`TransformContext` (closed form, real root
    bracketing) or a :class:`JacobiOperator` window (finite sections; the
    zeros come from a polynomial fit of ``R_{0,0}`` times the root factors
    at points well away from the spectrum).  Gap order follows ``zset.gaps``.
    """
    pts, sgs = [], []
    if isinstance(source, TransformContext):
        a0 = coupling_a0(source)
        fp = lambda z: 1.0 / r_values("+", source, z)
        fm = lambda z: a0 * a0 * r_values("-", source, z)
        for a, b in zset.gaps:
            f = lambda x: float(np.real(r00_matrix(source, x)))
            eps_edge = 1e-13 * (b - a)
            fa, fb = f(a + eps_edge), f(b - eps_edge)
            if fa * fb < 0:
                x0 = brentq(f, a + eps_edge, b - eps_edge, xtol=1e-15, rtol=1e-15)
            else:
                x0 = a if abs(fa) < abs(fb) else b
            pts.append(float(x0))
            sgs.append(_signs_from_residues(fp, fm, x0, a, b, thresh))
        return ZDivisor(tuple(pts), tuple(sgs))
    jac = source
    a0 = jac.a[0]
    roots = _fit_zeros(lambda z: window_r00(jac, z), zset)
    fp = np.vectorize(lambda z: 1.0 / window_r(jac, "+", z))
    fm = np.vectorize(lambda z: a0 * a0 * window_r(jac, "-", z))
    for (a, b), x0 in zip(zset.gaps, roots):
        x0 = min(max(x0, a), b)
        pts.append(float(x0))
        sgs.append(_signs_from_residues(fp, fm, x0, a, b, thresh))
    return ZDivisor(tuple(pts), tuple(sgs))


def _fit_zeros(r00, zset: ZSet, m: int = 48) -> list[float]:
    """Zeros of ``R00`` from ``-R00 * sqrt-factors`` fitted by a monic polynomial."""
    g = zset.g
    lo, hi = zset.outer
    c = 0.5 * (lo + hi)
    rad = 0.5 * (hi - lo) + 0.35 * (hi - lo)
    ang = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    zs = c + rad * np.exp(1j * ang)
    vals = []
    for z in zs:
        fac = np.sqrt(z - lo) * np.sqrt(z - hi)
        for a, b in zset.gaps:
            fac *= np.sqrt(z - a) * np.sqrt(z - b)
        vals.append(-r00(z) * fac)
    vals = np.array(vals)
    # monic: p(z) = z^g + sum c_j z^j
    A = np.stack([zs ** j for j in range(g)], axis=1) if g else np.zeros((m, 0))
    coef, *_ = np.linalg.lstsq(A, vals - zs ** g, rcond=None)
    roots = np.sort(np.roots(np.append(coef, 1.0)[::-1]).real) if g else np.array([])
    order = np.argsort([a for a, _ in zset.gaps])
    out = [0.0] * g
    for k, idx in enumerate(order):
        out[idx] = float(roots[k])
    return out


def jacobi_from_context(ctx: TransformContext, zset: ZSet, n: int = MAX_COEFFICIENTS,
                        nodes: int = NODES_PER_BAND) -> tuple[JacobiOperator, dict]:
    """Full pipeline ``r_pm -> measures -> coefficients -> two-sided window``."""
    out = {}
    halves = {}
    for side in ("+", "-"):
        meas = herglotz_to_measure(lambda z, s=side: r_values(s, ctx, z), zset,
                                   boundary=lambda x, s=side: r_values(s, ctx, x, boundary=True),
                                   n=nodes)
        out[side] = meas
        halves[side] = measure_to_jacobi(meas, n)
    return assemble_two_sided(halves["-"], halves["+"], coupling_a0(ctx)), out
