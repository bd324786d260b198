"""Independent brute-force checks: ODE transfer matrices, Riccati m-functions,
finite-section resolvents.  Every result carries an error estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUp, DepthExceedsWindow, StepFailure
from .jacobi import JacobiOperator, tridiagonal_resolvent

JFORM = np.array([[0.0, -1.0], [1.0, 0.0]])
ODE_RTOL = 1e-12
ODE_ATOL = 1e-13


@dataclass(frozen=True)
class Estimate:
    value: complex
    error: float


@dataclass(frozen=True)
class TransferMatrix:
    """Rows ``(u1, u1')`` and ``(u2, u2')`` at ``ell``; ``u1, u2`` start as the identity."""

    matrix: np.ndarray
    lam: complex
    ell: float
    error: float

    @property
    def det_defect(self) -> float:
        return float(abs(np.linalg.det(self.matrix) - 1.0))


def _qval(q, x):
    return q(x) if callable(q) else q


def integrate_schrodinger(q, lam: complex, ell: float, rtol: float = ODE_RTOL) -> TransferMatrix:
    """Integrate ``-u'' + q u = lam u`` from 0 to ``ell`` (DOP853, complex arithmetic).

    ``q`` is a callable sampler or a constant.  The error estimate compares
    with a run at a hundred times looser tolerance.
    """
    lam = complex(lam)

    def rhs(x, y):
        c = _qval(q, x) - lam
        return np.array([y[1], c * y[0], y[3], c * y[2]])

    y0 = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex)

    def run(tol):
        if ell == 0:
            return y0
        sol = solve_ivp(rhs, (0.0, ell), y0, method="DOP853", rtol=tol, atol=tol * 0.1)
        if not sol.success:
            raise StepFailure(f"transfer matrix integration failed: {sol.message}", lam=lam, ell=ell)
        return sol.y[:, -1]

    fine, coarse = run(rtol), run(min(rtol * 100, 1e-6))
    mat = fine.reshape(2, 2)
    return TransferMatrix(mat, lam, ell, float(np.max(np.abs(fine - coarse))))


def _riccati(q, lam: complex, X: float, side: str, rtol: float) -> complex:
    # m_+ = u'/u from X down to 0; m_- = -u'/u from -X up to 0
    def rhs(x, m):
        return _qval(q, x) - lam - m * m

    if side == "+":
        seed = 1j * np.sqrt(complex(lam - _qval(q, X)))
        span = (X, 0.0)
    else:
        seed = -1j * np.sqrt(complex(lam - _qval(q, -X)))
        span = (-X, 0.0)
    sol = solve_ivp(rhs, span, np.array([seed], dtype=complex), method="DOP853",
                    rtol=rtol, atol=rtol * 1e-2)
    val = complex(sol.y[0, -1]) if sol.success else complex("nan")
    return val if side == "+" else -val


def riccati_m(q, lam: complex, X: float, side: str = "+", rtol: float = ODE_RTOL) -> Estimate:
    """``m_+`` (or ``m_-``) at 0 by Riccati integration from the far end.

    The seed ``i sqrt(lam - q(X))`` is exact for a constant tail; its
    influence decays along the integration.  The error estimate is the
    change when the start point moves from ``0.75 X`` to ``X``.
    """
    lam = complex(lam)
    for attempt in range(3):
        x = X * (1.0 + 0.1 * attempt)
        full = _riccati(q, lam, x, side, rtol)
        part = _riccati(q, lam, 0.75 * x, side, rtol)
        if np.isfinite(full) and np.isfinite(part):
            return Estimate(full, float(abs(full - part)))
    raise BlowUp("Riccati integration did not stay finite", lam=lam, X=X)


def _kernel_integral(q, lam1: complex, lam2: complex, X: float, rtol: float) -> np.ndarray:
    """Backward system for ``(m1, m2, K)``; ``K(0) = int_0^inf u1 u2`` with ``u(0) = 1``."""
    def rhs(x, y):
        qx = _qval(q, x)
        m1, m2, k = y
        return np.array([qx - lam1 - m1 * m1, qx - lam2 - m2 * m2, -1.0 - (m1 + m2) * k])

    qX = _qval(q, X)
    s1 = 1j * np.sqrt(complex(lam1 - qX))
    s2 = 1j * np.sqrt(complex(lam2 - qX))
    y0 = np.array([s1, s2, -1.0 / (s1 + s2)], dtype=complex)
    sol = solve_ivp(rhs, (X, 0.0), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise StepFailure(f"energy-variation integration failed: {sol.message}")
    return sol.y[:, -1]


@dataclass(frozen=True)
class EnergyVariation:
    integral: complex
    target: complex
    defect: float
    error: float


def energy_variation_check(q, lam1: complex, lam2: complex, X: float,
                           m_func=None, dm_func=None, rtol: float = ODE_RTOL) -> EnergyVariation:
    """Compare ``int_0^inf u_+(x, lam1) u_+(x, lam2) dx`` with the divided difference of ``m_+``.

    ``u_+`` is normalised by ``u_+(0) = 1`` and built from the Riccati
    solutions.  The divided difference uses ``m_func`` when given (closed
    form) and the Riccati values otherwise.  For ``lam1 == lam2`` the target
    is ``m_+'(lam1)``, from ``dm_func`` or a central difference of Riccati values.
    """
    lam1, lam2 = complex(lam1), complex(lam2)
    full = _kernel_integral(q, lam1, lam2, X, rtol)
    part = _kernel_integral(q, lam1, lam2, 0.75 * X, rtol)
    integral = complex(full[2])
    err = float(abs(full[2] - part[2]))
    if lam1 != lam2:
        if m_func is not None:
            target = (m_func(lam1) - m_func(lam2)) / (lam1 - lam2)
        else:
            target = (full[0] - full[1]) / (lam1 - lam2)
    elif dm_func is not None:
        target = dm_func(lam1)
    else:
        h = 1e-4
        up = riccati_m(q, lam1 + h, X, rtol=rtol).value
        dn = riccati_m(q, lam1 - h, X, rtol=rtol).value
        target = (up - dn) / (2 * h)
    return EnergyVariation(integral, complex(target), float(abs(integral - target)), err)


@dataclass(frozen=True)
class JCheck:
    kind: str
    norm: float
    eigenvalues: np.ndarray

    @property
    def nonpositive(self) -> bool:
        return bool(np.all(self.eigenvalues <= 1e-10 * max(1.0, float(np.max(np.abs(self.eigenvalues))))))


def j_monotonicity_check(mat: np.ndarray, lam: complex, jform: np.ndarray = JFORM) -> JCheck:
    """``||A J A* - J||`` for real ``lam``; eigenvalues of ``(A J A* - J)/(lam - conj lam)`` otherwise."""
    mat = np.asarray(mat, dtype=complex)
    lam = complex(lam)
    diff = mat @ jform @ mat.conj().T - jform
    if lam.imag == 0:
        return JCheck("real", float(np.linalg.norm(diff)), np.zeros(0))
    quot = diff / (lam - lam.conjugate())
    quot = 0.5 * (quot + quot.conj().T)
    return JCheck("complex", float(np.linalg.norm(diff)), np.linalg.eigvalsh(quot))


def constant_jacobi(a: float, b: float, n: int) -> JacobiOperator:
    """Two-sided window ``[-n, n-1]`` with constant coefficients."""
    return JacobiOperator({i: float(a) for i in range(-n + 1, n)}, {i: float(b) for i in range(-n, n)})


def finite_section_r(jac: JacobiOperator, z: complex, n: int, side: str = "+") -> Estimate:
    """``<(J_N - z)^{-1} delta_0, delta_0>`` on the one-sided ``N x N`` truncation.

    The error estimate is the change from ``N/2`` to ``N``.
    """
    half = jac.one_sided(side)
    if n > len(half.b):
        raise DepthExceedsWindow(f"window holds {len(half.b)} rows, {n} requested")

    def val(m):
        return tridiagonal_resolvent(half.b[:m], half.a[: m - 1], complex(z), 0)

    v = val(n)
    return Estimate(v, float(abs(v - val(max(n // 2, 1)))))


def finite_section_r00(jac: JacobiOperator, z: complex, n: int | None = None) -> Estimate:
    """Two-sided diagonal resolvent at ``delta_0`` on the window ``[-n, n-1]``."""
    w0, w1 = jac.window
    top = min(-w0, w1 + 1)
    n = top if n is None else n
    if n > top:
        raise DepthExceedsWindow(f"window holds {top} rows per side, {n} requested")

    def val(m):
        idx = range(-m, m)
        b = np.array([jac.b[i] for i in idx])
        a = np.array([jac.a[i] for i in range(-m + 1, m)])
        return tridiagonal_resolvent(b, a, complex(z), m)

    v = val(n)
    return Estimate(v, float(abs(v - val(max(n // 2, 1)))))
