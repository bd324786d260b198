"""Adaptive Gauss-Legendre panels and square-root helpers.

All integrands in this package are algebraic with inverse-square-root
endpoint behaviour.  The callers remove those singularities by a change of
variables (``t = mid - half*cos(theta)`` on a finite segment, ``t = e + s**2``
on a half-line) and hand a smooth integrand to :func:`integrate`.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure

DEFAULT_TOL = 1e-13


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_rule(a: np.ndarray, b: np.ndarray, n: int):
    x, w = gauss_legendre(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes, weights


def integrate(f, a: float, b: float, tol: float = DEFAULT_TOL, n: int = 20,
              max_panels: int = 4096) -> complex:
    """Integrate a smooth vectorised ``f`` over ``[a, b]``.

    Each panel is compared against its two halves; panels that disagree by
    more than their share of ``tol`` (relative to the running magnitude) are
    split.  Raises :class:`QuadratureFailure` if the panel budget runs out.
    """
    if a == b:
        return 0.0
    length = b - a
    todo_a = np.array([a], dtype=float)
    todo_b = np.array([b], dtype=float)
    total = 0.0
    scale = 0.0
    used = 0
    while todo_a.size:
        used += todo_a.size
        if used > max_panels:
            raise QuadratureFailure("panel budget exhausted", interval=(a, b), tol=tol)
        mid = 0.5 * (todo_a + todo_b)
        la = np.concatenate([todo_a, todo_a, mid])
        lb = np.concatenate([todo_b, mid, todo_b])
        nodes, weights = _panel_rule(la, lb, n)
        vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
        if not np.all(np.isfinite(vals)):
            raise QuadratureFailure("non-finite integrand", interval=(a, b))
        sums = np.sum(vals * weights, axis=1)
        k = todo_a.size
        coarse = sums[:k]
        fine = sums[k:2 * k] + sums[2 * k:]
        scale = max(scale, float(np.max(np.abs(fine))) * length / np.max(todo_b - todo_a), 1.0)
        share = tol * scale * (todo_b - todo_a) / abs(length)
        ok = np.abs(fine - coarse) <= share
        total = total + np.sum(fine[ok])
        todo_a = np.concatenate([todo_a[~ok], mid[~ok]])
        todo_b = np.concatenate([mid[~ok], todo_b[~ok]])
    return total


def sqrt_up(x) -> np.ndarray:
    """Boundary value from the upper half-plane of the principal root.

    Real negative input gives ``+i*sqrt(|x|)``; complex input uses the
    principal branch.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.sqrt(x)
    return np.where(x >= 0, np.sqrt(np.abs(x)) + 0j, 1j * np.sqrt(np.abs(x)))


def segment_integral(f, a: float, b: float, lo: float | None = None,
                     hi: float | None = None, tol: float = DEFAULT_TOL) -> complex:
    """Integrate ``f(t) dt / sqrt((t-a)(b-t))`` over ``[lo, hi]`` inside ``[a, b]``.

    ``f`` must be smooth on the closed segment.  The substitution
    ``t = mid - half*cos(theta)`` absorbs both endpoint singularities.
    """
    lo = a if lo is None else lo
    hi = b if hi is None else hi
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return integrate(lambda th: f(mid - half * np.cos(th)),
                     _angle(a, b, lo), _angle(a, b, hi), tol=tol)


def _angle(a: float, b: float, t: float) -> float:
    """``theta`` with ``t = mid - half*cos(theta)``, stable near both ends."""
    if t - a <= b - t:
        return 2.0 * np.arcsin(np.sqrt(max(t - a, 0.0) / (b - a)))
    return np.pi - 2.0 * np.arcsin(np.sqrt(max(b - t, 0.0) / (b - a)))


def ray_integral(f, e: float, t: float, tol: float = DEFAULT_TOL) -> complex:
    """Integrate ``f(s) ds / sqrt(|s - e|)`` from ``e`` to ``t`` (either side).

    ``f`` must be smooth near ``e``.  Uses ``s = e +/- u**2``.
    """
    if t == e:
        return 0.0
    sign = 1.0 if t > e else -1.0
    u1 = np.sqrt(abs(t - e))
    return sign * integrate(lambda u: 2.0 * f(e + sign * u * u), 0.0, u1, tol=tol)
