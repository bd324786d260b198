"""Reflectionless Weyl pair of a finite-gap set with a given divisor.

With ``S(lam) = sqrt(-1 - lam) prod_k sqrt((lam - lam_k^-)(lam - lam_k^+))``
(branch: positive below ``-1``, each pair root ``~ lam`` at infinity) and
``P(lam) = prod_k (lam - lam_k)``,

    m_+(lam) = -S(lam)/P(lam) + sum_k rho_k eps_k / (lam_k - lam)
    m_-(lam) = -S(lam)/P(lam) - sum_k rho_k eps_k / (lam_k - lam)

where ``rho_k`` is the residue of ``S/P`` at ``lam_k``.  So ``eps_k = +1``
puts a pole of ``m_+`` at ``lam_k`` and leaves ``m_-`` analytic there;
``eps_k = -1`` does the opposite.  ``S`` is real on gaps and purely
imaginary on bands, which makes the pair reflectionless.
"""

from __future__ import annotations

import numpy as np

from .domain import BASE_POINT, Divisor, FiniteGapSet
from .errors import EvalAtPole, EvalOnSpectrum, InvariantViolation
from .quadrature import sqrt_up

RICHARDSON_ETAS = (1e-3, 1e-4, 1e-5)


def _upper(lam) -> np.ndarray:
    """Complex copy with a signed ``+0.0`` imaginary part on the real axis."""
    lam = np.asarray(lam, dtype=complex)
    return np.where(lam.imag == 0, lam.real + 0j, lam)


def s_factor(fgs: FiniteGapSet, lam) -> np.ndarray:
    """``S(lam)`` for ``Im lam >= 0`` (boundary value from above when real)."""
    lam = _upper(lam)
    # sqrt(-1 - lam) = -i sqrt(lam + 1) on the closed upper half-plane
    out = -1j * sqrt_up(lam - BASE_POINT)
    for a, b in fgs.gaps:
        out = out * sqrt_up(lam - a) * sqrt_up(lam - b)
    return out


def residues(fgs: FiniteGapSet, div: Divisor) -> np.ndarray:
    """``rho_k``; zero for edge points.  Asserted positive."""
    rho = np.zeros(fgs.g)
    pts = np.asarray(div.points, float)
    for j, lj in enumerate(pts):
        others = np.prod([lj - lk for k, lk in enumerate(pts) if k != j]) if fgs.g > 1 else 1.0
        val = complex(s_factor(fgs, lj)) / others
        r = val.real
        if r < 0:
            # would signal a branch slip; flip the local sign as documented
            r = -r
        rho[j] = r
    return rho


def _m_upper(sign: int, fgs: FiniteGapSet, div: Divisor, lam: np.ndarray,
             rho: np.ndarray) -> np.ndarray:
    first = -s_factor(fgs, lam)
    for lk in div.points:
        first = first / (lam - lk)
    out = first
    for lk, ek, rk in zip(div.points, div.signs, rho):
        if rk != 0.0:
            out = out + sign * rk * ek / (lk - lam)
    return out


def m_values(side: str, fgs: FiniteGapSet, div: Divisor, lam,
             rho: np.ndarray | None = None) -> np.ndarray:
    """Vectorised ``m_side`` without domain checks.

    Real input is read as the boundary value from the upper half-plane; the
    lower half-plane is reached by ``m(conj lam) = conj m(lam)``.
    """
    sign = _side_sign(side)
    rho = residues(fgs, div) if rho is None else rho
    lam = np.asarray(lam, dtype=complex)
    low = lam.imag < 0
    up = np.where(low, lam.conj(), lam)
    val = _m_upper(sign, fgs, div, _upper(up), rho)
    return np.where(low, val.conj(), val)


def _side_sign(side: str) -> int:
    if side in ("+", "plus", 1):
        return 1
    if side in ("-", "minus", -1):
        return -1
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def poles(side: str, fgs: FiniteGapSet, div: Divisor) -> list[float]:
    sign = _side_sign(side)
    rho = residues(fgs, div)
    return [p for p, e, r in zip(div.points, div.signs, rho) if r > 0 and sign * e > 0]


def weyl_m(side: str, fgs: FiniteGapSet, div: Divisor, lam: complex) -> complex:
    """Weyl function ``m_+`` or ``m_-`` at a point off ``E`` and off its poles.

    At a divisor point where the requested side is analytic the value is the
    symmetric limit (the explicit pole and the residue term cancel).
    """
    lam = complex(lam)
    if lam.imag == 0 and fgs.in_spectrum(lam.real):
        raise EvalOnSpectrum(f"lam = {lam.real} lies on the spectrum", lam=lam.real)
    if lam.imag == 0:
        x = lam.real
        if x in poles(side, fgs, div):
            raise EvalAtPole(f"m_{side} has a pole at {x}", lam=x)
        if x in div.points:
            k = div.points.index(x)
            a, b = fgs.gaps[k]
            d = 1e-6 * (b - a)
            vals = m_values(side, fgs, div, np.array([x - d, x + d]))
            return complex(0.5 * (vals[0] + vals[1]).real)
    return complex(m_values(side, fgs, div, lam))


def m_derivative_real(side: str, fgs: FiniteGapSet, div: Divisor, x: float,
                      h: float = 1e-20) -> float:
    """Complex-step derivative at a real point where ``m`` is real-analytic."""
    return float(m_values(side, fgs, div, complex(x, h)).imag / h)


def green_diagonal(fgs: FiniteGapSet, div: Divisor, lam) -> np.ndarray:
    """``-1/(m_+ + m_-) = P(lam) / (2 S(lam))``; zero exactly at divisor points."""
    lam = np.asarray(lam, dtype=complex)
    if lam.ndim == 0 and lam.imag == 0 and fgs.in_spectrum(lam.real):
        raise EvalOnSpectrum("green_diagonal on the spectrum", lam=lam.real)
    low = lam.imag < 0
    up = _upper(np.where(low, lam.conj(), lam))
    num = np.ones(up.shape, dtype=complex)
    for lk in div.points:
        num = num * (up - lk)
    val = num / (2.0 * s_factor(fgs, up))
    val = np.where(low, val.conj(), val)
    return complex(val) if val.ndim == 0 else val


def richardson_zero(etas, values) -> np.ndarray:
    """Polynomial extrapolation to ``eta = 0`` through the given samples."""
    etas = np.asarray(etas, float)
    values = np.asarray(values)
    out = np.zeros(values.shape[1:], dtype=values.dtype)
    for i, ei in enumerate(etas):
        w = np.prod([ej / (ej - ei) for j, ej in enumerate(etas) if j != i])
        out = out + w * values[i]
    return out


def boundary_limit(f, xs, etas=RICHARDSON_ETAS, scale=None) -> np.ndarray:
    """Extrapolated ``f(x + i0)`` from samples at ``x + i eta * scale``.

    ``scale`` (per point, default 1) should shrink with the distance to the
    nearest branch point; the extrapolation error grows like
    ``(eta / distance)**3``.
    """
    xs = np.asarray(xs, float)
    sc = np.ones_like(xs) if scale is None else np.asarray(scale, float)
    vals = np.array([f(xs + 1j * e * sc) for e in etas])
    return richardson_zero(etas, vals)


def edge_scale(xs, edges) -> np.ndarray:
    """``min(1, distance to the nearest edge)`` per point."""
    xs = np.asarray(xs, float)
    edges = np.asarray(edges, float)
    if edges.size == 0:
        return np.ones_like(xs)
    return np.minimum(1.0, np.min(np.abs(xs[:, None] - edges[None, :]), axis=1))


def reflectionless_defect(fgs: FiniteGapSet, div: Divisor, xs,
                          minus_divisor: Divisor | None = None,
                          etas=RICHARDSON_ETAS) -> tuple[float, np.ndarray]:
    """Max of ``|m_+(x+i0) + conj m_-(x+i0)|`` over band points ``xs``.

    ``minus_divisor`` builds ``m_-`` from a different divisor (negative
    control).  Returns the maximum and the per-point table.
    """
    mdiv = div if minus_divisor is None else minus_divisor
    rp, rm = residues(fgs, div), residues(fgs, mdiv)
    sc = edge_scale(xs, fgs.branch_points)
    mp = boundary_limit(lambda l: m_values("+", fgs, div, l, rp), xs, etas, sc)
    mm = boundary_limit(lambda l: m_values("-", fgs, mdiv, l, rm), xs, etas, sc)
    table = np.abs(mp + np.conj(mm))
    finite = table[np.isfinite(table)]
    return (float(np.max(finite)) if finite.size else float("nan")), table


def trace_q0(fgs: FiniteGapSet, div: Divisor) -> float:
    """``q(0) = -1 + sum_k (lam_k^- + lam_k^+ - 2 lam_k)``."""
    return BASE_POINT + float(sum(a + b - 2.0 * p for (a, b), p in zip(fgs.gaps, div.points)))


def check_herglotz(fgs: FiniteGapSet, div: Divisor, lams) -> float:
    """Smallest ``Im m_pm`` over sample points in the upper half-plane."""
    lams = np.asarray(lams, dtype=complex)
    if np.any(lams.imag <= 0):
        raise InvariantViolation("Herglotz check needs points in the upper half-plane")
    vals = np.concatenate([m_values("+", fgs, div, lams), m_values("-", fgs, div, lams)])
    return float(np.min(vals.imag))
