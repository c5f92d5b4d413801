"""Stochastic diffusion d(Phi) = -L Phi dt + sqrt(eta) W^{1/2} dB (Euler-Maruyama).

Each trajectory draws its Gaussians from its own Philox stream keyed by
``seed ^ trajectory_index``, so any trajectory of an ensemble can be replayed
alone.  Trajectories of an ensemble are advanced together as one array.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .diffusion import Trajectory, diagnostics
from .hypergraph import DEFAULT_TOL, Hypergraph, equilibrium, projection_off_constant
from .operator import rates, rates_batch

NOISE_CHUNK = 1024
QUANTILES = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class SdeConfig:
    eta: float
    dt: float = 1e-3
    t_end: float = 1.0
    n_trajectories: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if not self.dt > 0 or not self.t_end > 0 or self.dt > self.t_end:
            raise ValueError("need 0 < dt <= t_end")
        if self.n_trajectories < 1:
            raise ValueError("need at least one trajectory")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed ^ index))


class _Noise:
    """Per-trajectory Gaussian streams consumed in chunks of steps."""

    def __init__(self, seed: int, indices, n: int):
        self.gens = [trajectory_rng(seed, i) for i in indices]
        self.n = n
        self.buf = None
        self.pos = NOISE_CHUNK

    def next(self) -> np.ndarray:
        if self.pos == NOISE_CHUNK:
            self.buf = np.stack([g.standard_normal((NOISE_CHUNK, self.n)) for g in self.gens])
            self.pos = 0
        out = self.buf[:, self.pos, :]
        self.pos += 1
        return out


def _advance(H: Hypergraph, phi: np.ndarray, cfg: SdeConfig, noise: _Noise | None, tol: float) -> np.ndarray:
    w = H.node_weights
    if phi.shape[0] == 1:
        drift = (w * rates(H, phi[0] / w, tol))[None, :]
    else:
        drift = w * rates_batch(H, phi / w, tol)
    phi = phi + cfg.dt * drift
    if noise is not None:
        phi = phi + math.sqrt(cfg.eta * cfg.dt) * np.sqrt(w) * noise.next()
    return phi


def _run(H, phi0, cfg, indices, record_steps, tol):
    """Advance the trajectories in ``indices``; yields (step, phi) at each step in ``record_steps``."""
    phi = np.tile(np.asarray(phi0, dtype=float), (len(indices), 1))
    noise = _Noise(cfg.seed, indices, H.n) if cfg.eta > 0 else None
    record_steps = set(record_steps)
    if 0 in record_steps:
        yield 0, phi
    for k in range(1, cfg.n_steps + 1):
        phi = _advance(H, phi, cfg, noise, tol)
        if k in record_steps:
            yield k, phi


def simulate_sde(
    H: Hypergraph,
    phi0,
    cfg: SdeConfig,
    trajectory_index: int = 0,
    record_every: int = 1,
    tol: float = DEFAULT_TOL,
) -> Trajectory:
    steps = list(range(0, cfg.n_steps + 1, record_every))
    if steps[-1] != cfg.n_steps:
        steps.append(cfg.n_steps)
    rows, diag = [], []
    w = H.node_weights
    for _, phi in _run(H, phi0, cfg, [trajectory_index], steps, tol):
        rows.append(phi[0].copy())
        diag.append(diagnostics(H, phi[0], rates(H, phi[0] / w, tol)))
    diag = np.array(diag)
    return Trajectory(
        np.array(steps) * cfg.dt,
        np.array(rows),
        diag[:, 0],
        diag[:, 1],
        diag[:, 2],
        diag[:, 3],
        diag[:, 4],
        meta={"eta": cfg.eta, "dt": cfg.dt, "seed": cfg.seed, "trajectory_index": trajectory_index},
    )


def simulate_ensemble(
    H: Hypergraph, phi0, cfg: SdeConfig, checkpoints, tol: float = DEFAULT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """States at the checkpoint times: returns (times, array of shape (C, N, n))."""
    steps = sorted({int(round(t / cfg.dt)) for t in checkpoints})
    if steps and (steps[0] < 0 or steps[-1] > cfg.n_steps):
        raise ValueError("checkpoints must lie in [0, t_end]")
    out = [phi.copy() for _, phi in _run(H, phi0, cfg, range(cfg.n_trajectories), steps, tol)]
    return np.array(steps) * cfg.dt, np.array(out)


@dataclass
class CheckpointStats:
    t: float
    l1_mean: float
    l1_var: float
    l1_se: float
    l1_quantiles: dict
    pix2_mean: float
    pix2_var: float
    pix2_se: float
    pix_quantiles: dict
    dominating_quantiles: dict
    exceedance: dict
    exceedance_limit: dict
    mass_increment_var: float
    mass_increment_var_expected: float
    mass_increment_var_se: float

    @property
    def dominated(self) -> bool:
        return all(self.exceedance[q] <= self.exceedance_limit[q] for q in self.exceedance)


@dataclass
class EnsembleStats:
    eta: float
    gamma2: float
    n_trajectories: int
    reference_scale: float  # eta * w(V) / (2 gamma2)
    l1_limit: float  # sqrt(eta * n * w(V) / (2 gamma2))
    checkpoints: list[CheckpointStats] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for cp in d["checkpoints"]:
            for key in ("l1_quantiles", "pix_quantiles", "dominating_quantiles", "exceedance", "exceedance_limit"):
                cp[key] = {str(q): v for q, v in cp[key].items()}
        return d


def dominating_quantile(q: float, t: float, pix0_norm: float, eta: float, gamma2: float, n: int) -> float:
    """q-quantile of ||e^{-g t} Pi X_0 + sqrt(eta (1 - e^{-2 g t}) / (2 g)) N(0, I_n)||."""
    shift = math.exp(-gamma2 * t) * pix0_norm
    s2 = eta * (1 - math.exp(-2 * gamma2 * t)) / (2 * gamma2)
    if s2 <= 0:
        return shift
    nc = shift**2 / s2
    if nc == 0:
        return math.sqrt(s2 * stats.chi2.ppf(q, n))
    return math.sqrt(s2 * stats.ncx2.ppf(q, n, nc))


def ensemble_stats(
    H: Hypergraph,
    phi0,
    cfg: SdeConfig,
    checkpoints,
    gamma2: float | None = None,
    tol: float = DEFAULT_TOL,
) -> EnsembleStats:
    if gamma2 is None:
        from .spectral import gamma2 as _gamma2

        gamma2 = _gamma2(H, seed=cfg.seed)[0]
    phi0 = np.asarray(phi0, dtype=float)
    w = H.node_weights
    n, N, wV = H.n, cfg.n_trajectories, H.total_weight
    times, states = simulate_ensemble(H, phi0, cfg, checkpoints, tol)
    pix0 = float(np.linalg.norm(projection_off_constant(H, phi0 / np.sqrt(w))))
    result = EnsembleStats(cfg.eta, gamma2, N, cfg.eta * wV / (2 * gamma2), math.sqrt(cfg.eta * n * wV / (2 * gamma2)))
    for t, Phi in zip(times, states):
        eq = Phi.sum(axis=1, keepdims=True) / wV * w
        l1 = np.abs(Phi - eq).sum(axis=1)
        X = Phi / np.sqrt(w)
        pix = np.linalg.norm(X - (X @ np.sqrt(w))[:, None] / wV * np.sqrt(w), axis=1)
        pix2 = pix**2
        incr = Phi.sum(axis=1) - phi0.sum()
        ddof = 1 if N > 1 else 0
        dom = {q: dominating_quantile(q, float(t), pix0, cfg.eta, gamma2, n) for q in QUANTILES}
        exceed = {q: float(np.mean(pix > dom[q] * (1 + 1e-12) + 1e-15)) for q in QUANTILES}
        limit = {q: (1 - q) + 3 * math.sqrt(q * (1 - q) / N) for q in QUANTILES}
        var_incr = float(np.var(incr, ddof=ddof))
        expected = cfg.eta * float(t) * wV
        result.checkpoints.append(
            CheckpointStats(
                t=float(t),
                l1_mean=float(l1.mean()),
                l1_var=float(l1.var(ddof=ddof)),
                l1_se=float(l1.std(ddof=ddof) / math.sqrt(N)),
                l1_quantiles={q: float(np.quantile(l1, q)) for q in QUANTILES},
                pix2_mean=float(pix2.mean()),
                pix2_var=float(pix2.var(ddof=ddof)),
                pix2_se=float(pix2.std(ddof=ddof) / math.sqrt(N)),
                pix_quantiles={q: float(np.quantile(pix, q)) for q in QUANTILES},
                dominating_quantiles=dom,
                exceedance=exceed,
                exceedance_limit=limit,
                mass_increment_var=var_incr,
                mass_increment_var_expected=expected,
                mass_increment_var_se=expected * math.sqrt(2.0 / max(N - 1, 1)),
            )
        )
    return result
