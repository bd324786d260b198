"""Schur functions of Verblunsky sequences and the periodic comb map.

Schur recursion: ``s = (v + phi s1) / (1 + phi conj(v) s1)``, truncated by
``s^(depth) = 0``.  ``s_+`` uses ``v_0, v_1, ...``; ``s_-`` uses
``-conj(v_{-1}), -conj(v_{-2}), ...``.  With this choice every periodic
sequence satisfies ``conj(phi s_+) = s_-`` on its spectrum (checked in the
tests for periods one and two).

The periodic comb map is built from

    Theta_2'(psi) = P(exp(i psi)) / prod_k sqrt(1 - exp(i(psi - alpha_k))) sqrt(1 - exp(i(psi - beta_k)))

with ``P`` a polynomial of degree ``g`` (teeth per period), ``P(0) = 1``
(so ``Theta_2' -> 1`` at ``i infinity``) and zero integral over every
slit preimage ``[alpha_k, beta_k]``.  For ``Im psi > 0`` each factor
``1 - exp(i(psi - a))`` has positive real part, so principal roots are
analytic and the boundary values on the real line are continuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthExceedsWindow, InvariantViolation, NoConvergence, SolverFailure
from .quadrature import integrate, segment_integral
from .weyl import richardson_zero

RADIAL_ETAS = (4e-3, 2e-3, 1e-3)
THETA2_HEIGHT = 40.0


@dataclass(frozen=True)
class VerblunskySeq:
    """``plus = (v_0, v_1, ...)`` and ``minus = (v_{-1}, v_{-2}, ...)``."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        for arr in (self.plus, self.minus):
            if np.any(np.abs(arr) >= 1.0):
                raise InvariantViolation("Verblunsky coefficients must lie in the open unit disk")

    @property
    def window(self) -> int:
        return min(len(self.plus), len(self.minus))

    def __getitem__(self, n: int) -> complex:
        return complex(self.plus[n] if n >= 0 else self.minus[-n - 1])

    @classmethod
    def from_function(cls, f, n: int) -> "VerblunskySeq":
        return cls(np.array([f(k) for k in range(n)], dtype=complex),
                   np.array([f(-k - 1) for k in range(n)], dtype=complex))

    @classmethod
    def constant(cls, c: complex, n: int) -> "VerblunskySeq":
        return cls.from_function(lambda k: c, n)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, radius: float = 0.9) -> "VerblunskySeq":
        def draw():
            r = radius * np.sqrt(rng.uniform(size=n))
            return r * np.exp(2j * np.pi * rng.uniform(size=n))
        return cls(draw(), draw())


def schur_coefficients(seq: VerblunskySeq, side: str) -> np.ndarray:
    if side == "+":
        return np.asarray(seq.plus, dtype=complex)
    if side == "-":
        return -np.conj(np.asarray(seq.minus, dtype=complex))
    raise ValueError("side must be '+' or '-'")


def schur_function(seq: VerblunskySeq, side: str, phi, depth: int):
    """Depth-truncated Schur continued fraction (vectorised in ``phi``)."""
    coefs = schur_coefficients(seq, side)
    if depth > len(coefs):
        raise DepthExceedsWindow(f"depth {depth} exceeds window {len(coefs)}",
                                 depth=depth, window=len(coefs))
    phi = np.asarray(phi, dtype=complex)
    s = np.zeros_like(phi)
    for v in coefs[:depth][::-1]:
        s = (v + phi * s) / (1.0 + phi * np.conj(v) * s)
    return complex(s) if s.ndim == 0 else s


def constant_schur(c: complex, phi: complex) -> complex:
    """Fixed point of the constant-coefficient recursion inside the unit disk."""
    c = complex(c)
    if c == 0:
        return 0j
    roots = np.roots([phi * np.conj(c), 1.0 - phi, -c])
    return complex(roots[np.argmin(np.abs(roots))])


def schur_rate(c: complex, phi: complex, depths=range(5, 60, 5)) -> float:
    """Measured geometric rate of ``|s_N - s_*|`` for constant ``v = c``."""
    target = constant_schur(c, phi)
    seq = VerblunskySeq.constant(c, max(depths))
    depths = np.asarray(list(depths))
    errs = np.array([abs(schur_function(seq, "+", phi, int(n)) - target) for n in depths])
    keep = errs > 1e-14
    if keep.sum() < 3:
        raise NoConvergence("too few resolvable truncation errors for a rate fit")
    slope = np.polyfit(depths[keep], np.log(errs[keep]), 1)[0]
    return float(np.exp(slope))


def schur_rate_exact(c: complex, phi: complex) -> float:
    """``|phi| (1 - |c|^2) / |1 + phi conj(c) s_*|^2``, the derivative of the step map."""
    s = constant_schur(c, phi)
    return float(abs(phi) * (1 - abs(c) ** 2) / abs(1 + phi * np.conj(c) * s) ** 2)


@dataclass(frozen=True)
class DefectReport:
    angles: np.ndarray
    defects: np.ndarray
    flagged: np.ndarray

    @property
    def max_defect(self) -> float:
        ok = ~self.flagged
        return float(np.max(self.defects[ok])) if ok.any() else float("nan")


def cmv_reflectionless_defect(seq: VerblunskySeq, angles, depth: int | None = None,
                              etas=RADIAL_ETAS, flag_tol: float = 1e-3) -> DefectReport:
    """``|conj(phi s_+) - s_-|`` at ``phi = exp(i angle)`` from radial extrapolation.

    Points where the two finest radii disagree by more than ``flag_tol`` are
    flagged as non-convergent.
    """
    depth = seq.window if depth is None else depth
    angles = np.asarray(angles, float)
    vals = []
    for eta in etas:
        phi = (1.0 - eta) * np.exp(1j * angles)
        sp = schur_function(seq, "+", phi, depth)
        sm = schur_function(seq, "-", phi, depth)
        vals.append(np.conj(phi * sp) - sm)
    vals = np.array(vals)
    lim = richardson_zero(etas, vals)
    flagged = np.abs(vals[-1] - lim) > flag_tol
    return DefectReport(angles, np.abs(lim), flagged)


# ------------------------------------------------------------ periodic comb

@dataclass(frozen=True)
class PeriodicComb:
    """Teeth ``(omega_k, h_k)`` per period ``2 pi``."""

    omegas: tuple[float, ...] = ()
    heights: tuple[float, ...] = ()

    def __post_init__(self):
        om = np.asarray(self.omegas, float)
        if len(self.omegas) != len(self.heights):
            raise InvariantViolation("omegas and heights differ in length")
        if np.any(np.diff(om) <= 0) or np.any(om < 0) or np.any(om >= 2 * np.pi):
            raise InvariantViolation("omegas must increase strictly inside [0, 2 pi)")
        if np.any(np.asarray(self.heights, float) <= 0):
            raise InvariantViolation("heights must be positive")

    @property
    def g(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class Theta2Map:
    alphas: np.ndarray
    betas: np.ndarray
    coefficients: np.ndarray  # P in ascending powers of exp(i psi)
    offset: float = 0.0  # Theta_2(psi) - psi -> i*offset at i infinity

    @property
    def g(self) -> int:
        return len(self.alphas)

    def derivative(self, psi):
        psi = np.asarray(psi, dtype=complex)
        w = np.exp(1j * psi)
        num = np.polynomial.polynomial.polyval(w, self.coefficients)
        den = np.ones_like(psi)
        for a, b in zip(self.alphas, self.betas):
            den = den * np.sqrt(1.0 - w * np.exp(-1j * a)) * np.sqrt(1.0 - w * np.exp(-1j * b))
        return num / den

    def critical_points(self) -> np.ndarray:
        """Preimages of the tips: roots of ``P`` on the unit circle, one per slit."""
        if self.g == 0:
            return np.zeros(0)
        roots = np.polynomial.polynomial.polyroots(self.coefficients)
        ang = np.angle(roots)
        out = []
        for a, b in zip(self.alphas, self.betas):
            rel = np.mod(ang - a, 2 * np.pi)
            i = int(np.argmin(np.where(rel <= b - a, np.abs(np.abs(roots) - 1.0), np.inf)))
            out.append(a + rel[i])
        return np.array(out)


def theta2_map(alphas, betas) -> Theta2Map:
    """Solve the linear conditions for ``P`` given slit preimages ``[alpha_k, beta_k]``."""
    alphas = np.asarray(alphas, float)
    betas = np.asarray(betas, float)
    g = len(alphas)
    if g == 0:
        return Theta2Map(alphas, betas, np.array([1.0 + 0j]))
    if np.any(betas <= alphas) or np.any(alphas[1:] <= betas[:-1]) or betas[-1] - alphas[0] >= 2 * np.pi:
        raise SolverFailure("slit preimages must be disjoint inside one period")
    # columns: integral of w^m / prod(...) over each slit
    cols = []
    for m in range(g + 1):
        e = np.zeros(g + 1, dtype=complex)
        e[m] = 1.0
        basis = Theta2Map(alphas, betas, e)
        cols.append([_regular_slit_integral(basis, a, b) for a, b in zip(alphas, betas)])
    mat = np.array(cols).T  # g x (g+1)
    # P(0) = 1 fixes coefficient 0; solve for the rest
    rhs = -mat[:, 0]
    try:
        rest = np.linalg.solve(mat[:, 1:], rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure("slit condition matrix is singular") from exc
    raw = Theta2Map(alphas, betas, np.concatenate([[1.0 + 0j], rest]))
    band = 0.5 * (betas[-1] + alphas[0] + 2 * np.pi)
    return Theta2Map(alphas, betas, raw.coefficients, -theta2_eval(raw, band).imag)


def _regular_slit_integral(mp: Theta2Map, a: float, b: float) -> complex:
    """``int_a^b Theta_2'(x) dx`` via the endpoint-regularising substitution."""
    return complex(segment_integral(
        lambda x: mp.derivative(x) * np.sqrt(np.maximum((x - a) * (b - x), 0.0)), a, b, tol=1e-13))


def theta2_eval(mp: Theta2Map, psi, height: float = THETA2_HEIGHT) -> complex:
    """``Theta_2(psi) = psi + i*offset - int_psi^{psi + i inf} (Theta_2' - 1)``.

    The offset makes ``Im Theta_2`` vanish on the real boundary outside the
    slit preimages (the mean boundary height).  The vertical integral uses ``y = u^2`` so real ``psi`` on a slit end is
    handled; beyond ``height`` the integrand is below ``exp(-height)``.
    """
    psi = complex(psi)
    if psi.imag < 0:
        raise ValueError("theta2_eval needs Im psi >= 0")
    if mp.g == 0:
        return psi
    x, y0 = psi.real, psi.imag
    f = lambda u: (mp.derivative(x + 1j * (y0 + u * u)) - 1.0) * 2j * u
    return psi + 1j * mp.offset - complex(integrate(f, 0.0, np.sqrt(height), tol=1e-13))


def periodicity_defect(mp: Theta2Map, points) -> float:
    """``max |int_psi^{psi + 2 pi} Theta_2' - 2 pi|`` over the test points (horizontal paths)."""
    out = 0.0
    for psi in points:
        psi = complex(psi)
        val = integrate(lambda t: mp.derivative(psi + t), 0.0, 2 * np.pi, tol=1e-13)
        out = max(out, abs(val - 2 * np.pi))
    return float(out)


def periodicity_check(mp: Theta2Map, points) -> float:
    """``max |Theta_2(psi + 2 pi) - Theta_2(psi) - 2 pi|`` with both values from vertical paths,
    combined with the horizontal-path defect."""
    d = 0.0
    for psi in points:
        psi = complex(psi)
        d = max(d, abs(theta2_eval(mp, psi + 2 * np.pi) - theta2_eval(mp, psi) - 2 * np.pi))
    return max(d, periodicity_defect(mp, points))


def comb_of_map(mp: Theta2Map) -> PeriodicComb:
    """Tooth positions and heights of a solved map."""
    if mp.g == 0:
        return PeriodicComb()
    tips = [theta2_eval(mp, c) for c in mp.critical_points()]
    om = [float(np.mod(t.real, 2 * np.pi)) for t in tips]
    order = np.argsort(om)
    return PeriodicComb(tuple(om[i] for i in order), tuple(float(tips[i].imag) for i in order))


def theta2_solve(comb: PeriodicComb, tol: float = 1e-12, max_iter: int = 50) -> Theta2Map:
    """Newton for the slit preimages so that the tips land on ``omega_k + i h_k``.

    Unknowns are ``(centre_k, log half-width_k)``; seeds come from the
    single-slit map ``psi -> omega + sqrt((psi - omega)^2 - h^2)``.
    """
    g = comb.g
    if g == 0:
        return theta2_map([], [])
    om = np.asarray(comb.omegas, float)
    hh = np.asarray(comb.heights, float)
    target = np.concatenate([om, hh])

    def build(v):
        c, lw = v[:g], v[g:]
        w = np.exp(lw)
        return theta2_map(c - w, c + w)

    def resid(v):
        mp = build(v)
        tips = np.array([theta2_eval(mp, c) for c in mp.critical_points()])
        re = tips.real - om
        re = (re + np.pi) % (2 * np.pi) - np.pi
        return np.concatenate([re, tips.imag - hh])

    v = np.concatenate([om, np.log(np.minimum(hh, 0.4 * np.pi / max(g, 1)))])
    r = resid(v)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return build(v)
        jac = np.zeros((2 * g, 2 * g))
        for i in range(2 * g):
            dv = np.zeros(2 * g)
            dv[i] = 1e-7
            jac[:, i] = (resid(v + dv) - resid(v - dv)) / 2e-7
        step = np.linalg.solve(jac, -r)
        lam = 1.0
        while lam > 1e-4:
            try:
                cand = v + lam * step
                rc = resid(cand)
                if np.max(np.abs(rc)) < np.max(np.abs(r)):
                    break
            except SolverFailure:
                pass
            lam *= 0.5
        else:
            break
        v, r = cand, rc
    if np.max(np.abs(r)) < 1e3 * tol:
        return build(v)
    raise SolverFailure("comb inversion did not converge", residual=float(np.max(np.abs(r))),
                        target=target.tolist())
