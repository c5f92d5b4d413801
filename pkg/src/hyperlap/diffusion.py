"""Deterministic diffusion d(phi)/dt = -L phi.

Explicit Euler, with the step shortened so that no two distinct values of
``f`` cross strictly inside a step: the rate vector is only piecewise smooth
and changes form when values meet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import DEFAULT_TOL, Hypergraph, Space, StateVector, convert, equilibrium
from .operator import rates

MIN_STEP = 1e-15


class SimulationError(RuntimeError):
    pass


class MixingBoundViolation(AssertionError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # measure space, one row per recorded time
    rayleigh: np.ndarray
    norm2: np.ndarray  # ||f||_w^2
    energy: np.ndarray  # <f, L_w f>_w
    grad2: np.ndarray  # ||L_w f||_w^2
    l1_eq: np.ndarray  # ||phi_t - phi*||_1
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, H: Hypergraph) -> str:
        head = ["t"] + [f"phi_{u}" for u in H.nodes] + ["rayleigh", "l1_to_equilibrium"]
        lines = [",".join(head)]
        for t, phi, R, l1 in zip(self.times, self.states, self.rayleigh, self.l1_eq):
            row = [repr(float(t))] + [repr(float(p)) for p in phi] + [repr(float(R)), repr(float(l1))]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def diagnostics(H: Hypergraph, phi: np.ndarray, r: np.ndarray) -> tuple[float, float, float, float, float]:
    w = H.node_weights
    f = phi / w
    norm2 = float(np.dot(w, f * f))
    energy = float(-np.dot(w * f, r))
    grad2 = float(np.dot(w, r * r))
    R = energy / norm2 if norm2 > 0 else 0.0
    l1 = float(np.abs(phi - equilibrium(H, phi)).sum())
    return R, norm2, energy, grad2, l1


def crossing_time(f: np.ndarray, r: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Earliest time at which two currently distinct values meet under f + t r."""
    order = np.argsort(f, kind="stable")
    fs, rs = f[order], r[order]
    breaks = np.flatnonzero(np.diff(fs) > tol) + 1
    if breaks.size == 0:
        return math.inf
    starts = np.concatenate(([0], breaks))
    fmin = np.minimum.reduceat(fs, starts)
    fmax = np.maximum.reduceat(fs, starts)
    rmin = np.minimum.reduceat(rs, starts)
    rmax = np.maximum.reduceat(rs, starts)
    gap = fmin[1:] - fmax[:-1]
    closing = rmax[:-1] - rmin[1:]
    hit = closing > 0
    if not np.any(hit):
        return math.inf
    return float(np.min(gap[hit] / closing[hit]))


def euler_drift(H: Hypergraph, phi: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """d(phi)/dt at ``phi``, as a measure-space vector."""
    w = H.node_weights
    return w * rates(H, phi / w, tol)


def _as_measure(H: Hypergraph, phi0) -> np.ndarray:
    if isinstance(phi0, StateVector):
        return convert(H, phi0, Space.MEASURE).values.copy()
    phi = np.array(phi0, dtype=float)
    if phi.shape != (H.n,):
        raise ValueError(f"initial vector has shape {phi.shape}, expected ({H.n},)")
    return phi


def simulate(
    H: Hypergraph,
    phi0,
    t_end: float,
    dt_max: float = 1e-3,
    tol: float = DEFAULT_TOL,
    event_guard: bool = True,
    record_every: int = 1,
    stop_l1: float | None = None,
) -> Trajectory:
    """Integrate the diffusion from measure vector ``phi0`` up to ``t_end``.

    With ``event_guard=False`` the step is exactly ``dt_max`` every time (times
    ``k * dt_max``), which is the path the stochastic simulator reproduces at
    zero noise.  ``stop_l1`` ends the run at the first recorded state within
    that l1 distance of equilibrium.
    """
    if not t_end > 0 or not dt_max > 0:
        raise ValueError("t_end and dt_max must be positive")
    w = H.node_weights
    phi = _as_measure(H, phi0)
    t = 0.0
    k = 0
    rows, times, diag = [], [], []
    n_steps = int(round(t_end / dt_max)) if not event_guard else None
    events = 0
    while True:
        r = rates(H, phi / w, tol)
        d = diagnostics(H, phi, r)
        done = (t >= t_end) if event_guard else (k >= n_steps)
        reached = stop_l1 is not None and d[4] <= stop_l1
        if k % record_every == 0 or done or reached:
            rows.append(phi.copy())
            times.append(t)
            diag.append(d)
        if done or reached:
            break
        if event_guard:
            dt = min(dt_max, t_end - t)
            tc = crossing_time(phi / w, r, tol)
            if tc < dt:
                dt = tc
                events += 1
            if dt < MIN_STEP:
                raise SimulationError(
                    f"step underflow dt={dt:.3e} at t={t!r}; f={(phi / w).tolist()} r={r.tolist()}"
                )
            phi = phi + dt * (w * r)
            t = t_end if dt >= t_end - t else t + dt
        else:
            phi = phi + dt_max * (w * r)
            k_next = k + 1
            t = k_next * dt_max
        k += 1
    diag = np.array(diag)
    return Trajectory(
        np.array(times),
        np.array(rows),
        diag[:, 0],
        diag[:, 1],
        diag[:, 2],
        diag[:, 3],
        diag[:, 4],
        meta={"steps": k, "events": events, "dt_max": dt_max, "tol": tol, "event_guard": event_guard},
    )


@dataclass
class DerivativeReport:
    analytic: tuple[float, float, float]
    numeric: tuple[float, float, float]
    errors: tuple[float, float, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e <= self.tolerance for e in self.errors)


def derivative_checks(H: Hypergraph, f, h: float = 1e-6, tol: float = DEFAULT_TOL) -> DerivativeReport:
    """Compare one-step right differences with the closed-form first derivatives.

    1. d||f||^2/dt        = -2 <f, L_w f>
    2. d<f, L_w f>/dt     = -2 ||L_w f||^2
    3. dR/dt              = -2 (||f||^2 ||L_w f||^2 - <f, L_w f>^2) / ||f||^4
    """
    w = H.node_weights
    f = convert(H, f, Space.WEIGHTED).values if isinstance(f, StateVector) else np.asarray(f, dtype=float)
    norm2 = float(np.dot(w, f * f))
    if norm2 == 0.0:
        raise ValueError("derivative checks need a nonzero vector")
    r = rates(H, f, tol)
    energy = -float(np.dot(w * f, r))
    grad2 = float(np.dot(w, r * r))
    R = energy / norm2
    analytic = (
        -2.0 * energy,
        -2.0 * grad2,
        -2.0 * (norm2 * grad2 - energy**2) / norm2**2,
    )
    g = f + h * r
    norm2_g = float(np.dot(w, g * g))
    energy_g = -float(np.dot(w * g, rates(H, g, tol)))
    numeric = (
        (norm2_g - norm2) / h,
        (energy_g - energy) / h,
        (energy_g / norm2_g - R) / h,
    )
    floors = (norm2 * (1 + R), norm2 * (1 + R) ** 2, (1 + R) ** 2)
    errors = tuple(
        abs(a - b) / max(abs(a), 1e-6 * fl) for a, b, fl in zip(analytic, numeric, floors)
    )
    return DerivativeReport(analytic, numeric, errors, max(1e-4, 10 * h))


@dataclass
class MixingResult:
    t_mix: float
    bound: float
    gamma2: float
    trajectory: Trajectory | None = None

    @property
    def within_bound(self) -> bool:
        return self.t_mix <= self.bound


def mixing_bound(H: Hypergraph, delta: float, gamma2: float) -> float:
    phi_min = float(H.node_weights.min() / H.total_weight)
    return math.log(1.0 / (delta * math.sqrt(phi_min))) / gamma2


def mixing_time(
    H: Hypergraph,
    phi0,
    delta: float,
    gamma2: float | None = None,
    dt_max: float = 1e-3,
    tol: float = DEFAULT_TOL,
    strict: bool = True,
    seed: int = 0,
    record_every: int = 10**9,
) -> MixingResult:
    """First simulated time with ||phi_t - phi*||_1 <= delta, next to the spectral-gap bound.

    The returned trajectory keeps every ``record_every``-th state plus the last one.
    """
    phi = _as_measure(H, phi0)
    if np.any(phi < 0) or abs(phi.sum() - 1.0) > 1e-9:
        raise ValueError("phi0 must be a probability vector")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if gamma2 is None:
        from .spectral import gamma2 as _gamma2

        gamma2 = _gamma2(H, seed=seed)[0]
    bound = mixing_bound(H, delta, gamma2)
    traj = simulate(H, phi, t_end=2 * bound + 1.0, dt_max=dt_max, tol=tol, stop_l1=delta, record_every=record_every)
    if traj.l1_eq[-1] > delta:
        t_mix = math.inf
    else:
        t_mix = float(traj.times[-1])
    result = MixingResult(t_mix, bound, gamma2, traj)
    if strict and not result.within_bound:
        raise MixingBoundViolation(f"t_mix={t_mix} exceeds bound {bound}")
    return result
