"""Translation flow of the divisor, trace-formula potentials and Abel phases.

Each divisor point lives on a circle: ``lam_j = mid_j - half_j cos(theta_j)``
with the sheet read off ``sin(theta_j)``.  The curve sheet is
``tau_j = -sign(sin theta_j)``, and the divisor sign is ``eps_j = s_j tau_j``
with ``s_j`` the sign of ``sqrt(R)/i`` on gap ``j`` (``eps_j = +1`` at the
edges).  In this chart the flow

    d lam_j / d ell = -2 eps_j |sqrt(-R(lam_j)) / prod_{k != j} (lam_j - lam_k)|

becomes the smooth system ``theta_j' = 2 H_j(lam_j) / prod_{k != j}(lam_j - lam_k)``
with ``H_j = sqrt(-R / ((lam - lam_j^-)(lam_j^+ - lam)))``.  Edge hits are
ordinary points of the chart, so reflection and the sign flip come for free;
they are still logged as events.

``ell`` is the translation parameter: the divisor at ``ell`` belongs to the
shifted potential ``q(. - ell)``.  Hence the potential at ``x`` is the trace
formula applied to the divisor at ``ell = -x``.  This sign was fixed by
matching Riccati m-functions of the sampled potential (see the tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .comb import AbelianBasis, gap_orientation, martin_map, theta_eval
from .domain import BASE_POINT, Divisor, FiniteGapSet
from .errors import StepFailure
from .quadrature import integrate, segment_integral

FLOW_RTOL = 1e-12
FLOW_ATOL = 1e-12


@dataclass(frozen=True)
class FlowState:
    divisor: Divisor
    position: float = 0.0
    events: tuple = field(default=())


@dataclass(frozen=True)
class AbelPhases:
    phases: tuple[float, ...]


def _geometry(fgs: FiniteGapSet):
    g = np.asarray(fgs.gaps, float).reshape(-1, 2)
    return 0.5 * (g[:, 0] + g[:, 1]), 0.5 * (g[:, 1] - g[:, 0])


def angles_from_divisor(fgs: FiniteGapSet, div: Divisor) -> np.ndarray:
    mid, half = _geometry(fgs)
    orient = gap_orientation(fgs.g)
    th = np.zeros(fgs.g)
    for j, (lam, eps) in enumerate(zip(div.points, div.signs)):
        c = np.clip((mid[j] - lam) / half[j], -1.0, 1.0)
        base = float(np.arccos(c))
        tau = eps * orient[j]
        th[j] = base if tau == -1 or base in (0.0, np.pi) else 2.0 * np.pi - base
    return th


def divisor_from_angles(fgs: FiniteGapSet, theta) -> Divisor:
    mid, half = _geometry(fgs)
    theta = np.asarray(theta, float)
    lam = mid - half * np.cos(theta)
    lam = np.clip(lam, mid - half, mid + half)
    sn = np.sin(theta)
    tau = np.where(np.abs(sn) < 1e-14, 0.0, -np.sign(sn))  # sin(pi) is not exactly 0
    eps = np.where(tau == 0, 1, tau * gap_orientation(fgs.g)).astype(int)
    return Divisor(tuple(float(x) for x in lam), tuple(int(e) for e in eps))


def _h(fgs: FiniteGapSet, j: int, lam):
    out = lam - BASE_POINT
    for k, (a, b) in enumerate(fgs.gaps):
        if k != j:
            out = out * (lam - a) * (lam - b)
    return np.sqrt(np.maximum(out, 0.0))


def _rhs_factory(fgs: FiniteGapSet):
    mid, half = _geometry(fgs)
    g = fgs.g

    def rhs(_ell, theta):
        lam = mid - half * np.cos(theta)
        out = np.empty(g)
        for j in range(g):
            den = 1.0
            for k in range(g):
                if k != j:
                    den *= lam[j] - lam[k]
            out[j] = 2.0 * _h(fgs, j, lam[j]) / den
        return out

    return rhs


def _solve(fgs: FiniteGapSet, theta0, span, dense: bool = False, events: bool = False,
           rtol: float = FLOW_RTOL, t_eval=None):
    rhs = _rhs_factory(fgs)
    evs = None
    if events:
        evs = []
        for j in range(fgs.g):
            ev = (lambda j: (lambda t, y: np.sin(y[j])))(j)
            evs.append(ev)
    sol = solve_ivp(rhs, span, np.asarray(theta0, float), method="DOP853", rtol=rtol,
                    atol=FLOW_ATOL, dense_output=dense, events=evs, t_eval=t_eval)
    if not sol.success:
        raise StepFailure(f"flow integration failed: {sol.message}", span=span)
    return sol


def dubrovin_flow(fgs: FiniteGapSet, state: FlowState, dl: float,
                  rtol: float = FLOW_RTOL) -> FlowState:
    """Flow the divisor by ``dl``; edge hits are appended to the event log."""
    if fgs.g == 0 or dl == 0:
        return FlowState(state.divisor, state.position + dl, state.events)
    th0 = angles_from_divisor(fgs, state.divisor)
    l0 = state.position
    sol = _solve(fgs, th0, (l0, l0 + dl), events=True, rtol=rtol)
    log = []
    for j, (ts, ys) in enumerate(zip(sol.t_events, sol.y_events)):
        for t, y in zip(ts, ys):
            if abs(t - l0) < 1e-14:
                continue
            edge = "left" if np.cos(y[j]) > 0 else "right"
            log.append((float(t), j, edge))
    log.sort()
    return FlowState(divisor_from_angles(fgs, sol.y[:, -1]), l0 + dl, state.events + tuple(log))


class Trajectory:
    """Dense angle trajectory over ``[lo, hi]`` around the start position."""

    def __init__(self, fgs: FiniteGapSet, state: FlowState, lo: float, hi: float,
                 rtol: float = FLOW_RTOL):
        self.fgs = fgs
        self.origin = state.position
        self.theta0 = angles_from_divisor(fgs, state.divisor)
        self._parts = []
        lo, hi = min(lo, self.origin), max(hi, self.origin)
        self.span = (lo, hi)
        if fgs.g == 0:
            return
        if hi > self.origin:
            self._parts.append((self.origin, hi, _solve(fgs, self.theta0, (self.origin, hi),
                                                         dense=True, rtol=rtol).sol))
        if lo < self.origin:
            self._parts.append((lo, self.origin, _solve(fgs, self.theta0, (self.origin, lo),
                                                         dense=True, rtol=rtol).sol))

    def theta(self, ell) -> np.ndarray:
        """Angles with shape ``(g, len(ell))``."""
        ell = np.atleast_1d(np.asarray(ell, float))
        lo, hi = self.span
        if ell.size and (ell.min() < lo - 1e-12 or ell.max() > hi + 1e-12):
            raise ValueError(f"ell outside the integrated range [{lo}, {hi}]")
        out = np.tile(self.theta0[:, None], (1, ell.size))
        for lo, hi, f in self._parts:
            sel = (ell >= lo) & (ell <= hi) & (ell != self.origin)
            if np.any(sel):
                out[:, sel] = f(ell[sel])
        return out

    def lam(self, ell) -> np.ndarray:
        mid, half = _geometry(self.fgs)
        return mid[:, None] - half[:, None] * np.cos(self.theta(ell))

    def q(self, x):
        """Potential at ``x``, i.e. the trace formula at ``ell = -x``."""
        return self.trace(-np.asarray(x, float))

    def trace(self, ell):
        """Trace formula ``-1 + sum (lam_k^- + lam_k^+ - 2 lam_k)`` at ``ell``."""
        scalar = np.ndim(ell) == 0
        if self.fgs.g == 0:
            q = np.full(np.shape(np.atleast_1d(ell)), BASE_POINT)
        else:
            g = np.asarray(self.fgs.gaps, float)
            q = BASE_POINT + np.sum(g[:, 0:1] + g[:, 1:2] - 2.0 * self.lam(ell), axis=0)
        return float(q[0]) if scalar else q


def sample_potential(fgs: FiniteGapSet, state: FlowState, xs) -> np.ndarray:
    """``q(x)`` on a sorted grid; ``q(0)`` is the trace of ``state.divisor``."""
    xs = np.asarray(xs, float)
    if xs.size and np.any(np.diff(xs) < 0):
        raise ValueError("x grid must be sorted")
    if xs.size == 0:
        return xs
    return Trajectory(fgs, state, -xs[-1], -xs[0]).q(xs)


def potential_sampler(fgs: FiniteGapSet, state: FlowState, lo: float, hi: float,
                      ell: float = 0.0):
    """Callable ``x -> q(x - ell)`` for ``x`` in ``[lo, hi]``.

    Its m-functions are those of the divisor flowed to ``ell``.
    """
    traj = Trajectory(fgs, state, ell - hi, ell - lo)
    return lambda x: traj.q(np.asarray(x, float) - ell)


def _phase_integral(basis: AbelianBasis, k: int, j: int, lam: float) -> float:
    a, b = basis.fgs.gaps[j]
    f = lambda t: basis.q(k, t) / _h(basis.fgs, j, t)
    return float(np.real(segment_integral(f, a, b, a, lam)))


def abel_phases(fgs: FiniteGapSet, basis: AbelianBasis, div: Divisor) -> AbelPhases:
    """``phi_k = 1/2 sum_j eps_j int_{lam_j^-}^{lam_j} i eta_k`` mod 1.

    On gap ``j`` the boundary value of ``i eta_k`` is ``Q_k / (s_j sqrt|R|)``.
    Going once around a cycle the signed sum winds twice, hence the factor
    one half.
    """
    orient = gap_orientation(fgs.g)
    out = []
    for k in range(fgs.g):
        s = sum(e * orient[j] * _phase_integral(basis, k, j, lam)
                for j, (lam, e) in enumerate(zip(div.points, div.signs)))
        out.append(float(np.mod(0.5 * s, 1.0)))
    return AbelPhases(tuple(out))


def _cycle_integral(basis: AbelianBasis, k: int, j: int, theta: float) -> float:
    """``F_kj(theta) = int_0^theta Q_k(lam(t)) / H_j(lam(t)) dt`` for any real ``theta``."""
    a, b = basis.fgs.gaps[j]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    f = lambda t: basis.q(k, mid - half * np.cos(t)) / _h(basis.fgs, j, mid - half * np.cos(t))
    turns, rest = divmod(theta, 2.0 * np.pi)
    full = 2.0 * float(np.real(integrate(f, 0.0, np.pi))) if turns else 0.0
    return turns * full + float(np.real(integrate(f, 0.0, rest)))


def unwrapped_phases(basis: AbelianBasis, theta: np.ndarray) -> np.ndarray:
    """Continuous phases ``-1/2 sum_j F_kj(theta_j)``; ``theta`` has shape ``(g, n)``."""
    g, n = theta.shape
    out = np.zeros((g, n))
    for k in range(g):
        for i in range(n):
            out[k, i] = -0.5 * sum(_cycle_integral(basis, k, j, theta[j, i]) for j in range(g))
    return out


@dataclass(frozen=True)
class FrequencyReport:
    slopes: tuple[float, ...]
    expected: tuple[float, ...]
    relative_errors: tuple[float, ...]
    residuals: tuple[float, ...]


def frequency_check(fgs: FiniteGapSet, state: FlowState, ells, basis: AbelianBasis,
                    omegas) -> FrequencyReport:
    """Fit ``2 pi phi_k(ell)`` by a line; expected slope ``-2 omega_k``."""
    if fgs.g == 0:
        return FrequencyReport((), (), (), ())
    ells = np.asarray(ells, float)
    traj = Trajectory(fgs, state, ells.min(), ells.max())
    ph = 2.0 * np.pi * unwrapped_phases(basis, traj.theta(ells))
    slopes, exp, rel, res = [], [], [], []
    for k in range(fgs.g):
        coef = np.polyfit(ells, ph[k], 1)
        slopes.append(float(coef[0]))
        res.append(float(np.max(np.abs(np.polyval(coef, ells) - ph[k]))))
        exp.append(-2.0 * float(omegas[k]))
        rel.append(abs(slopes[-1] - exp[-1]) / abs(exp[-1]))
    return FrequencyReport(tuple(slopes), tuple(exp), tuple(rel), tuple(res))


def detect_period(fgs: FiniteGapSet, state: FlowState, rtol: float = FLOW_RTOL) -> float:
    """Return time of a one-gap flow (the angle advances by one full turn)."""
    if fgs.g != 1:
        raise ValueError("period detection is defined for one gap")
    th0 = angles_from_divisor(fgs, state.divisor)
    target = th0[0] + 2.0 * np.sign(_rhs_factory(fgs)(0.0, th0)[0]) * np.pi
    ev = lambda t, y: y[0] - target
    ev.terminal = True
    sol = solve_ivp(_rhs_factory(fgs), (0.0, 1e4), th0, method="DOP853", rtol=rtol,
                    atol=FLOW_ATOL, events=ev)
    if not sol.t_events[0].size:
        raise StepFailure("no return detected")
    return float(sol.t_events[0][0])


@dataclass(frozen=True)
class RecurrenceProfile:
    shifts: np.ndarray
    distance: np.ndarray

    @property
    def best(self) -> tuple[float, float]:
        i = int(np.argmin(self.distance))
        return float(self.shifts[i]), float(self.distance[i])

    def local_minima(self) -> list[tuple[float, float]]:
        d = self.distance
        idx = [i for i in range(1, len(d) - 1) if d[i] <= d[i - 1] and d[i] <= d[i + 1]]
        return [(float(self.shifts[i]), float(d[i])) for i in idx]


def almost_periodicity_scan(fgs: FiniteGapSet, state: FlowState, shifts, xs,
                            traj: Trajectory | None = None) -> RecurrenceProfile:
    """``d(ell) = max_x |q(x - ell) - q(x)|`` over the window ``xs``."""
    shifts = np.asarray(shifts, float)
    xs = np.asarray(xs, float)
    if fgs.g == 0:
        return RecurrenceProfile(shifts, np.zeros_like(shifts))
    if traj is None:
        traj = Trajectory(fgs, state, -xs.max() + min(shifts.min(), 0.0),
                          -xs.min() + max(shifts.max(), 0.0))
    base = traj.q(xs)
    pts = (xs[None, :] - shifts[:, None]).ravel()
    shifted = traj.q(pts).reshape(shifts.size, xs.size)
    return RecurrenceProfile(shifts, np.max(np.abs(shifted - base[None, :]), axis=1))


def almost_period_candidates(omegas, lo: float, hi: float, tol: float) -> np.ndarray:
    """Shifts in ``[lo, hi]`` with every ``omega_k ell / pi`` within ``tol`` of an integer."""
    omegas = np.asarray(omegas, float)
    w0 = omegas[0]
    n0, n1 = int(np.ceil(lo * w0 / np.pi)), int(np.floor(hi * w0 / np.pi))
    out = []
    for n in range(n0, n1 + 1):
        ell = n * np.pi / w0
        frac = omegas * ell / np.pi
        if np.all(np.abs(frac - np.round(frac)) <= tol):
            out.append(ell)
    return np.array(out)


def translation_phase(fgs: FiniteGapSet, ell: float, lam: complex, mm=None) -> complex:
    """``exp(i ell Theta(lam))`` for ``lam`` in the closed upper half-plane."""
    lam = complex(lam)
    if lam.imag < 0:
        raise ValueError("translation_phase needs Im lam >= 0")
    if ell == 0:
        return 1.0 + 0j
    mm = martin_map(fgs) if mm is None else mm
    return complex(np.exp(1j * ell * theta_eval(mm, lam)))


def find_almost_period(fgs: FiniteGapSet, state: FlowState, lo: float, hi: float,
                       eps: float, xs, omegas, traj: Trajectory | None = None):
    """First shift in ``[lo, hi]`` with ``d(ell) <= eps``, or ``None``.

    Candidates come from simultaneous rational approximation of the
    rotation numbers ``omega_k / pi``; each is refined by a local minimisation.
    """
    from scipy.optimize import minimize_scalar

    xs = np.asarray(xs, float)
    if traj is None:
        traj = Trajectory(fgs, state, min(lo, 0.0) - xs.max() - 1.0,
                          max(hi, 0.0) - xs.min() + 1.0)
    seen = set()
    for tol in (0.02, 0.04, 0.08):
        for ell in almost_period_candidates(omegas, lo, hi, tol):
            key = round(ell, 6)
            if key in seen:
                continue
            seen.add(key)
            a, b = max(lo, ell - 0.3), min(hi, ell + 0.3)
            res = minimize_scalar(
                lambda s: almost_periodicity_scan(fgs, state, [s], xs, traj).distance[0],
                bounds=(a, b), method="bounded", options={"xatol": 1e-6})
            if res.fun <= eps:
                return float(res.x), float(res.fun)
    return None
