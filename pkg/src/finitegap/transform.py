"""From the Weyl pair to the Jacobi side: ``a0``, ``r_pm`` and the 2x2 resolvent.

Index convention for the resolvent block: rows/columns are ``(-1, 0)``, so
``R[1, 1]`` is ``R_{0,0}`` and ``-1/R_{0,0} = -1/r_+ + a0**2 r_-``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import ChangeOfVariables, Divisor, FiniteGapSet
from .errors import EvalAtPole, EvalOnSpectrum, InvariantViolation, SingularMatrix
from .weyl import m_derivative_real, m_values, residues


@dataclass(frozen=True)
class TransformContext:
    cov: ChangeOfVariables
    fgs: FiniteGapSet
    div: Divisor
    m_plus: float = field(init=False)
    m_minus: float = field(init=False)
    dm_plus: float = field(init=False)
    dm_minus: float = field(init=False)
    rho: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = self.cov.lambda_star
        set_ = object.__setattr__
        set_(self, "rho", residues(self.fgs, self.div))
        set_(self, "m_plus", float(m_values("+", self.fgs, self.div, s, self.rho).real))
        set_(self, "m_minus", float(m_values("-", self.fgs, self.div, s, self.rho).real))
        set_(self, "dm_plus", m_derivative_real("+", self.fgs, self.div, s))
        set_(self, "dm_minus", m_derivative_real("-", self.fgs, self.div, s))
        if not self.m_plus + self.m_minus < 0:
            raise InvariantViolation("m_+(lambda_star) + m_-(lambda_star) must be negative",
                                     total=self.m_plus + self.m_minus)
        if not (self.dm_plus > 0 and self.dm_minus > 0):
            raise InvariantViolation("m derivatives at lambda_star must be positive")

    def m(self, side: str, lam) -> np.ndarray:
        return m_values(side, self.fgs, self.div, lam, self.rho)

    def lam_of(self, z) -> np.ndarray:
        return self.cov.lambda_star + 1.0 / np.asarray(z, dtype=complex)


def transform_context(fgs: FiniteGapSet, div: Divisor, lambda_star: float = -2.0) -> TransformContext:
    return TransformContext(ChangeOfVariables(lambda_star), fgs, div)


def coupling_a0(ctx: TransformContext) -> float:
    """``a0 = -sqrt(m_+'(l*) m_-'(l*)) / (m_+(l*) + m_-(l*))``."""
    return float(-np.sqrt(ctx.dm_plus * ctx.dm_minus) / (ctx.m_plus + ctx.m_minus))


def _ratio(own, other, vals):
    # (own - m)/(other + m), tending to -1 at a pole of m
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (own - vals) / (other + vals)
    return np.where(np.isinf(vals), -1.0 + 0j, out)


def r_values(side: str, ctx: TransformContext, z, boundary: bool = False) -> np.ndarray:
    """Vectorised ``r_side(z)``.

    ``boundary=True`` treats real ``z`` as ``z + i0`` (lambda approached from
    below).  ``z = 0`` (lambda at infinity) is handled as a limit.
    """
    z = np.asarray(z, dtype=complex)
    mp, mm = ctx.m_plus, ctx.m_minus
    total = mp + mm
    lam = ctx.cov.lambda_star + 1.0 / np.where(z == 0, 1.0, z)
    if boundary:
        vals_p = np.conj(ctx.m("+", lam.real))
        vals_m = np.conj(ctx.m("-", lam.real))
    else:
        vals_p = ctx.m("+", lam)
        vals_m = ctx.m("-", lam)
    if side == "+":
        ratio, scale = _ratio(mp, mm, vals_p), total / ctx.dm_plus
    elif side == "-":
        ratio, scale = _ratio(mm, mp, vals_m), total / ctx.dm_minus
    else:
        raise ValueError("side must be '+' or '-'")
    lim = -scale
    with np.errstate(invalid="ignore"):
        out = scale * ratio
        out = np.where(np.isfinite(out), out, np.inf)  # poles of r as a clean +inf
    return np.where(z == 0, lim, out)


def jacobi_r(side: str, ctx: TransformContext, z: complex) -> complex:
    """Half-line Jacobi Weyl function ``r_+`` or ``r_-`` at ``z`` off ``Et``."""
    z = complex(z)
    if z.imag == 0:
        lam = ctx.cov.lambda_star + 1.0 / z.real if z != 0 else np.inf
        if z != 0 and ctx.fgs.in_spectrum(lam):
            raise EvalOnSpectrum(f"z = {z.real} lies on the spectrum", z=z.real)
        val = complex(r_values(side, ctx, z))
        if not np.isfinite(val):
            raise EvalAtPole(f"r_{side} has a pole at z = {z.real}", z=z.real)
        return val
    return complex(r_values(side, ctx, z))


def resolvent_matrix(ctx: TransformContext, z: complex, boundary: bool = False) -> np.ndarray:
    """``R(z) = [[1/r_-, a0], [a0, 1/r_+]]^{-1}`` indexed by ``(-1, 0)``."""
    a0 = coupling_a0(ctx)
    rm = complex(r_values("-", ctx, z, boundary))
    rp = complex(r_values("+", ctx, z, boundary))
    mat = np.array([[1.0 / rm, a0], [a0, 1.0 / rp]], dtype=complex)
    det = mat[0, 0] * mat[1, 1] - a0 * a0
    if not np.isfinite(det) or abs(det) < 1e-14 * max(1.0, abs(mat[0, 0] * mat[1, 1])):
        raise SingularMatrix(f"resolvent block singular at z = {z}", z=z)
    return np.array([[mat[1, 1], -a0], [-a0, mat[0, 0]]]) / det


def r00_matrix(ctx: TransformContext, z, boundary: bool = False) -> np.ndarray:
    """Vectorised ``R_{0,0}`` from ``1/(1/r_+ - a0**2 r_-)``.

    Written as ``r_+ / (1 - a0**2 r_+ r_-)`` so exact zeros of ``r_+`` give 0
    rather than ``1/(-0j)``; poles of ``r_+`` fall back to ``-1/(a0**2 r_-)``
    and poles of ``r_-`` alone give 0.
    """
    a0 = coupling_a0(ctx)
    rp = r_values("+", ctx, z, boundary)
    rm = r_values("-", ctx, z, boundary)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = rp / (1.0 - a0 * a0 * rp * rm)
        out = np.where(np.isfinite(rp), out, -1.0 / (a0 * a0 * rm))
        out = np.where(np.isfinite(rm) | ~np.isfinite(rp), out, 0.0)
    return complex(out) if np.ndim(out) == 0 else out


def jacobi_reflectionless_defect(ctx: TransformContext, xs, exact: bool = False,
                                 minus_ctx: TransformContext | None = None
                                 ) -> tuple[float, np.ndarray]:
    """Max of ``|1/r_+(x+i0) - conj(a0**2 r_-(x+i0))|`` over band points ``xs``.

    Boundary values come from extrapolation in ``eta`` (scaled by the
    distance to the nearest edge) or, with ``exact=True``, from the closed
    form evaluated on the boundary.  ``minus_ctx`` takes ``r_-`` from another
    context (negative control); ``a0`` always comes from ``ctx``.
    """
    from .domain import map_set
    from .weyl import boundary_limit, edge_scale

    mctx = ctx if minus_ctx is None else minus_ctx
    a0 = coupling_a0(ctx)
    xs = np.asarray(xs, float)
    if exact:
        rp = r_values("+", ctx, xs, boundary=True)
        rm = r_values("-", mctx, xs, boundary=True)
    else:
        zset, _ = map_set(ctx.cov, ctx.fgs)
        edges = list(zset.outer) + [e for gap in zset.gaps for e in gap]
        sc = edge_scale(xs, edges)
        rp = boundary_limit(lambda z: r_values("+", ctx, z), xs, scale=sc)
        rm = boundary_limit(lambda z: r_values("-", mctx, z), xs, scale=sc)
    table = np.abs(1.0 / rp - np.conj(a0 * a0 * rm))
    return float(np.max(table)), table
