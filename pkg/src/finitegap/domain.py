"""Spectral sets, divisors, comb data and the lambda <-> z change of variables.

Conventions
-----------
* ``E = [-1, inf)`` minus ``g`` open gaps ``(lam_k^-, lam_k^+)``.
* ``z = 1/(lam - lam_star)`` with ``lam_star < -1``.  It maps the upper
  half-plane to the lower one and ``E`` onto the compact set
  ``Et = [0, 1/(-1 - lam_star)]`` minus gaps.  The gap ``k`` goes to
  ``(z_k^-, z_k^+) = (1/(lam_k^+ - lam_star), 1/(lam_k^- - lam_star))``:
  each gap keeps its orientation but the gap order is reversed, so the
  first lambda gap is the rightmost z gap.
* A divisor point sitting on a gap edge always carries ``eps = +1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (DivisorMismatch, GapOrdering, GapOutOfRange,
                     LambdaStarOutOfRange, PoleAtLambdaStar, PoleAtZero,
                     SceneError)

BASE_POINT = -1.0


@dataclass(frozen=True)
class FiniteGapSet:
    gaps: tuple[tuple[float, float], ...] = ()

    @property
    def g(self) -> int:
        return len(self.gaps)

    @property
    def left(self) -> np.ndarray:
        return np.array([a for a, _ in self.gaps], dtype=float)

    @property
    def right(self) -> np.ndarray:
        return np.array([b for _, b in self.gaps], dtype=float)

    @property
    def branch_points(self) -> np.ndarray:
        """``-1`` followed by the gap endpoints in increasing order."""
        pts = [BASE_POINT]
        for a, b in self.gaps:
            pts += [a, b]
        return np.array(pts, dtype=float)

    def bands(self, upper: float | None = None) -> list[tuple[float, float]]:
        """Closed bands of ``E``; the last one is cut at ``upper`` (default inf)."""
        pts = self.branch_points
        out = [(pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2)]
        out.append((pts[-1], math.inf if upper is None else upper))
        return out

    def gap_of(self, x: float) -> int | None:
        """Index of the open gap containing ``x``, else None."""
        for k, (a, b) in enumerate(self.gaps):
            if a < x < b:
                return k
        return None

    def in_spectrum(self, x: float) -> bool:
        return x >= BASE_POINT and self.gap_of(x) is None


@dataclass(frozen=True)
class Divisor:
    points: tuple[float, ...] = ()
    signs: tuple[int, ...] = ()

    @property
    def g(self) -> int:
        return len(self.points)

    def flipped(self) -> "Divisor":
        return Divisor(self.points, tuple(-s for s in self.signs))


@dataclass(frozen=True)
class CombData:
    omegas: tuple[float, ...] = ()
    heights: tuple[float, ...] = ()

    @property
    def g(self) -> int:
        return len(self.omegas)

    @property
    def widom_sum(self) -> float:
        return float(sum(self.heights))


@dataclass(frozen=True)
class ChangeOfVariables:
    lambda_star: float = -2.0

    def __post_init__(self):
        if not (math.isfinite(self.lambda_star) and self.lambda_star < BASE_POINT):
            raise LambdaStarOutOfRange(
                f"lambda_star must satisfy lambda_star < -1 (got {self.lambda_star})",
                lambda_star=self.lambda_star)


@dataclass(frozen=True)
class ZSet:
    """Image of ``E`` under the change of variables (a compact set)."""

    outer: tuple[float, float]
    gaps: tuple[tuple[float, float], ...]

    @property
    def g(self) -> int:
        return len(self.gaps)

    def bands(self) -> list[tuple[float, float]]:
        """Bands in increasing z order."""
        gs = sorted(self.gaps)
        edges = [self.outer[0]]
        for a, b in gs:
            edges += [a, b]
        edges.append(self.outer[1])
        return [(edges[i], edges[i + 1]) for i in range(0, len(edges), 2)]

    def in_spectrum(self, x: float) -> bool:
        if not self.outer[0] <= x <= self.outer[1]:
            return False
        return not any(a < x < b for a, b in self.gaps)


@dataclass(frozen=True)
class ZDivisor:
    points: tuple[float, ...]
    signs: tuple[int, ...]


def validate_set(raw: Iterable[Sequence[float]]) -> FiniteGapSet:
    """Validate a list of gaps and return them sorted by left endpoint.

    Raises
    ------
    GapOrdering
        If an interval is inverted or degenerate, or two gaps touch/overlap.
    GapOutOfRange
        If an endpoint is not finite or lies at or below ``-1``.
    """
    gaps = []
    for item in raw:
        try:
            a, b = (float(v) for v in item)
        except (TypeError, ValueError) as exc:
            raise GapOrdering(f"gap {item!r} is not a pair of reals") from exc
        if not (math.isfinite(a) and math.isfinite(b)):
            raise GapOutOfRange(f"gap ({a}, {b}) has a non-finite endpoint", gap=(a, b))
        if a >= b:
            raise GapOrdering(f"gap ({a}, {b}) is inverted or empty", gap=(a, b))
        if a <= BASE_POINT:
            raise GapOutOfRange(f"gap ({a}, {b}) must lie in (-1, inf)", gap=(a, b))
        gaps.append((a, b))
    gaps.sort()
    for (a0, b0), (a1, b1) in zip(gaps, gaps[1:]):
        if a1 <= b0:
            raise GapOrdering(f"gaps ({a0}, {b0}) and ({a1}, {b1}) overlap or touch",
                              gaps=((a0, b0), (a1, b1)))
    return FiniteGapSet(tuple(gaps))


def validate_divisor(fgs: FiniteGapSet, entries: Iterable) -> Divisor:
    """Build a divisor from ``(lam, eps)`` pairs, one per gap.

    Edge points are canonicalised to ``eps = +1``.
    """
    entries = sorted(((float(lam), eps) for lam, eps in entries), key=lambda e: e[0])
    if len(entries) != fgs.g:
        raise DivisorMismatch(f"divisor has {len(entries)} points for {fgs.g} gaps")
    pts, sg = [], []
    for (a, b), (lam, eps) in zip(fgs.gaps, entries):
        lam = float(lam)
        if eps not in (1, -1):
            raise DivisorMismatch(f"sign {eps!r} is not +1 or -1")
        if not a <= lam <= b:
            raise DivisorMismatch(f"divisor point {lam} outside gap ({a}, {b})",
                                  point=lam, gap=(a, b))
        if lam == a or lam == b:
            eps = 1
        pts.append(lam)
        sg.append(int(eps))
    return Divisor(tuple(pts), tuple(sg))


def to_z(cov: ChangeOfVariables, lam):
    """``z = 1/(lam - lam_star)``; ``lam = inf`` maps to ``0``."""
    if np.isscalar(lam):
        if lam == cov.lambda_star:
            raise PoleAtLambdaStar("lam equals lambda_star", lambda_star=cov.lambda_star)
        if isinstance(lam, float) and math.isinf(lam):
            return 0.0
        return 1.0 / (lam - cov.lambda_star)
    lam = np.asarray(lam)
    if np.any(lam == cov.lambda_star):
        raise PoleAtLambdaStar("lam equals lambda_star", lambda_star=cov.lambda_star)
    return 1.0 / (lam - cov.lambda_star)


def from_z(cov: ChangeOfVariables, z):
    """Inverse of :func:`to_z`: ``lam = lam_star + 1/z``."""
    if np.any(np.asarray(z) == 0):
        raise PoleAtZero("z = 0 corresponds to lam = inf")
    return cov.lambda_star + 1.0 / np.asarray(z) if not np.isscalar(z) \
        else cov.lambda_star + 1.0 / z


def map_set(cov: ChangeOfVariables, fgs: FiniteGapSet,
            divisor: Divisor | None = None) -> tuple[ZSet, ZDivisor | None]:
    """Image of the set (and optionally a divisor) in the z variable.

    Gap ``k`` keeps its index; see the module docstring for orientation.
    """
    s = cov.lambda_star
    outer = (0.0, 1.0 / (BASE_POINT - s))
    zg = tuple((1.0 / (b - s), 1.0 / (a - s)) for a, b in fgs.gaps)
    zset = ZSet(outer, zg)
    if divisor is None:
        return zset, None
    zd = ZDivisor(tuple(1.0 / (p - s) for p in divisor.points), tuple(divisor.signs))
    return zset, zd


@dataclass(frozen=True)
class Scene:
    fgs: FiniteGapSet
    divisor: Divisor
    cov: ChangeOfVariables


SCENE_KEYS = {"gaps", "divisor", "lambda_star"}


def parse_scene(data: dict) -> Scene:
    """Validate a scene mapping ``{"gaps", "divisor", "lambda_star"}``.

    Unknown keys are rejected.  A missing divisor defaults to left edges.
    """
    if not isinstance(data, dict):
        raise SceneError("scene must be a JSON object")
    extra = set(data) - SCENE_KEYS
    if extra:
        raise SceneError(f"unknown scene keys: {sorted(extra)}", keys=sorted(extra))
    fgs = validate_set(data.get("gaps", []))
    cov = ChangeOfVariables(float(data.get("lambda_star", -2.0)))
    raw_div = data.get("divisor")
    if raw_div is None:
        entries = [(a, 1) for a, _ in fgs.gaps]
    else:
        entries = []
        for item in raw_div:
            if not isinstance(item, dict) or set(item) - {"lambda", "eps"}:
                raise SceneError(f"bad divisor entry {item!r}")
            entries.append((item["lambda"], item.get("eps", 1)))
    return Scene(fgs, validate_divisor(fgs, entries), cov)
