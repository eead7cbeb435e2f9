"""Quenched walk simulation and the CLT experiment.

Walkers move on the unwrapped lattice while the environment repeats with
the torus period, so X_n / sqrt(n) keeps its meaning and every kernel
lookup lands on a stored site.  Each walker owns a counter-based stream
derived from (seed, walker index): paths are reproducible bit for bit
regardless of batching, backend, or thread count.

The martingale decomposition X_n = M_n - chi(X_n) (for origin starts) is
checked two ways: algebraically site by site, and statistically through
the covariance split of the ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend, rng
from .analysis import _offset_fields
from .corrector import CorrectorField
from .environment import Environment
from .errors import ParameterError


@dataclass(eq=False)
class WalkPath:
    """One trajectory: unwrapped integer positions, shape (n+1, d)."""

    start: np.ndarray
    positions: np.ndarray
    stream_seed: int

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.positions, axis=0)

    def shadow_sites(self, side: int) -> np.ndarray:
        """Torus coordinates under the walk, shape (n+1, d)."""
        return np.mod(self.positions, side)


def _cum_table(env: Environment) -> np.ndarray:
    # shared by both backends so the sampled index is the same bit pattern
    return np.cumsum(env.step_probs, axis=1)


def simulate_walk(env: Environment, start, n: int, stream_seed: int) -> WalkPath:
    """Quenched walk of n steps; fully determined by the arguments."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    start = np.asarray(start, dtype=np.int64)
    if start.shape != (env.dimension,):
        raise ParameterError(f"start must have shape ({env.dimension},)")
    pos = backend.walk_path(
        _cum_table(env), env.steps, env.side, env.strides, start, stream_seed, n
    )
    return WalkPath(start=start, positions=pos, stream_seed=int(stream_seed))


def walk_ensemble_positions(
    env: Environment, start, checkpoints, seed: int, walkers: int
) -> np.ndarray:
    """Unwrapped positions at each checkpoint, shape (n_cp, walkers, d).

    Walker w runs on the stream derived from (seed, w); all checkpoints
    come from the same run, so prefixes are consistent across horizons.
    """
    start = np.asarray(start, dtype=np.int64)
    cps = np.asarray(checkpoints, dtype=np.int64)
    if len(cps) == 0 or np.any(cps < 0):
        raise ParameterError("checkpoints must be nonnegative")
    streams = rng.walker_streams(seed, walkers)
    return backend.walk_ensemble(
        _cum_table(env), env.steps, env.side, env.strides, start, streams, cps
    )


def martingale_residual(env: Environment, corrector: CorrectorField) -> float:
    """max over sites of the one-step conditional-mean drift of X + chi.

    Recomputed from the raw environment tables, independent of the solver
    internals: residual(y) = || sum_z p_z(y) (z + chi(y+z) - chi(y)) ||_inf.
    Zeroing the corrector turns this into max |d0|, the negative control.
    """
    chi = corrector.chi
    probs = env.step_probs
    nbr = env.neighbor_index
    steps = env.steps.astype(float)
    resid = np.zeros_like(chi)
    for k in range(steps.shape[0]):
        resid += probs[:, k : k + 1] * (steps[k][None, :] + chi[nbr[:, k]] - chi)
    return float(np.abs(resid).max())


@dataclass
class CheckpointStats:
    """Ensemble statistics of X_n / sqrt(n) at one horizon."""

    n: int
    mean: np.ndarray  # (d,)
    cov: np.ndarray  # (d, d)
    se: np.ndarray  # (d, d) normal-theory standard errors of cov entries
    z_scores: np.ndarray  # (cov - target) / se
    martingale_mean: np.ndarray  # (d,) for M_n = X_n + chi(X_n); E[M_n] = 0 at every n
    martingale_cov: np.ndarray  # (d, d)
    corrector_share: float  # tr cov(chi(X_n)) / tr cov(X_n)


@dataclass
class CltResult:
    """Quenched CLT experiment against the exact covariance target."""

    n_steps: int
    walkers: int
    target: np.ndarray  # (d, d)
    checkpoints: list
    final_positions: np.ndarray | None = None

    @property
    def final(self) -> CheckpointStats:
        return self.checkpoints[-1]

    @property
    def empirical_cov(self) -> np.ndarray:
        return self.final.cov

    @property
    def mean_drift(self) -> np.ndarray:
        """Mean of X_N / N at the final horizon."""
        return self.final.mean / np.sqrt(self.final.n)


def _cov_se(cov: np.ndarray, walkers: int) -> np.ndarray:
    diag = np.diagonal(cov)
    return np.sqrt((np.outer(diag, diag) + cov**2) / (walkers - 1))


def quenched_clt_experiment(
    env: Environment,
    corrector: CorrectorField,
    n_steps: int,
    walkers: int,
    seed: int,
    checkpoints=None,
    keep_positions: bool = False,
) -> CltResult:
    """Ensemble of origin walks vs the covariance matrix of the corrector.

    Reports, per horizon, the empirical covariance of X_n / sqrt(n) with
    normal-theory standard errors and z-scores against the target, the
    mean and covariance of the martingale part M_n = X_n + chi(X_n), and
    the corrector's share of the total variance (which must shrink as n
    grows).  M_n has mean exactly zero at every n; the raw position mean
    carries the bounded transient -E[chi(X_n)] and is reported as is.
    """
    if n_steps < 1:
        raise ParameterError("n_steps must be positive")
    if walkers < 100:
        raise ParameterError("need at least 100 walkers for covariance estimates")
    if checkpoints is None:
        checkpoints = sorted({max(1, n_steps // 16), max(1, n_steps // 4), n_steps})
    cps = np.asarray(sorted(checkpoints), dtype=np.int64)
    if cps[-1] != n_steps:
        raise ParameterError("last checkpoint must equal n_steps")
    origin = np.zeros(env.dimension, dtype=np.int64)
    positions = walk_ensemble_positions(env, origin, cps, seed, walkers)

    target = corrector.A
    stats = []
    for i, n in enumerate(cps):
        pos = positions[i].astype(float)
        scale = 1.0 / np.sqrt(float(n))
        x = pos * scale
        sites = np.mod(positions[i], env.side) @ env.strides
        chi_at = corrector.chi[sites]
        m = x + chi_at * scale
        cov = np.cov(x, rowvar=False, ddof=1)
        se = _cov_se(cov, walkers)
        stats.append(
            CheckpointStats(
                n=int(n),
                mean=x.mean(axis=0),
                cov=cov,
                se=se,
                z_scores=(cov - target) / se,
                martingale_mean=m.mean(axis=0),
                martingale_cov=np.cov(m, rowvar=False, ddof=1),
                corrector_share=float(
                    np.trace(np.cov(chi_at, rowvar=False, ddof=1)) / np.trace(np.cov(pos, rowvar=False, ddof=1))
                ),
            )
        )
    return CltResult(
        n_steps=int(n_steps),
        walkers=int(walkers),
        target=target,
        checkpoints=stats,
        final_positions=positions[-1].copy() if keep_positions else None,
    )


@dataclass
class EmpiricalGaussian:
    """Exact n-step law from the origin against the Gaussian envelope."""

    n: int
    c0: float
    profile: np.ndarray  # (S,) site probabilities
    distance_sq: np.ndarray  # (S,) squared torus distance from the origin
    saturated: bool


def empirical_gaussian_check(env: Environment, n: int) -> EmpiricalGaussian:
    """Evolve the origin row of Q^n exactly and fit the smallest C with
    P(X_n = y) <= C n^(-d/2) exp(-dist(0,y)^2 / (C n)) over all y.

    No sampling is involved.  The saturation flag mirrors the decay
    analysis: once max P/pi flattens at its stationary floor, n is past
    the useful window and the fit only bounds the flat profile.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    probs = env.step_probs
    nbr = env.neighbor_index
    d = env.dimension
    dist = np.zeros(probs.shape[0])
    dist[0] = 1.0
    for _ in range(n):
        nxt = np.zeros_like(dist)
        np.add.at(nxt, nbr.reshape(-1), (dist[:, None] * probs).reshape(-1))
        dist = nxt
    d2, _ = _offset_fields(env.side, d)

    def violation(c: float) -> float:
        return float((dist - c * float(n) ** (-d / 2.0) * np.exp(-d2 / (c * n))).max())

    hi = 1.0
    while violation(hi) > 0:
        hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi) if lo > 0 else hi / 2.0
        if violation(mid) <= 0:
            hi = mid
        else:
            lo = mid
        if lo > 0 and (hi - lo) <= 1e-6 * hi:
            break

    period = 2 if np.all(env.steps.sum(axis=1) % 2 == 1) else 1
    flat = period / float(env.mass.sum())
    saturated = bool((dist / env.mass).max() <= 1.1 * flat)
    return EmpiricalGaussian(n=int(n), c0=float(hi), profile=dist, distance_sq=d2, saturated=saturated)


def path_functional(path: WalkPath, n_steps: int, times) -> np.ndarray:
    """The rescaled polygonal path at the requested times in [0, 1].

    beta(t) linearly interpolates k/n -> X_k / sqrt(n); grid points are
    exact.  Returns shape (len(times), d).
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(times > 1):
        raise ParameterError("times must lie in [0, 1]")
    if path.n_steps < n_steps:
        raise ParameterError(f"path has {path.n_steps} steps, need at least {n_steps}")
    scaled = times * n_steps
    k = np.minimum(scaled.astype(np.int64), n_steps - 1)
    frac = scaled - k
    base = path.positions[k].astype(float)
    ahead = path.positions[k + 1].astype(float)
    return (base + frac[:, None] * (ahead - base)) / np.sqrt(float(n_steps))


def occupation_relative_entropy(env: Environment, path: WalkPath, n: int) -> float:
    """KL divergence of the first-n visit frequencies from pi / sum(pi)."""
    if n < 1 or n > path.n_steps + 1:
        raise ParameterError("n must lie in [1, path length]")
    sites = np.mod(path.positions[:n], env.side) @ env.strides
    counts = np.bincount(sites, minlength=env.mass.shape[0]).astype(float)
    emp = counts / counts.sum()
    stat = env.mass / env.mass.sum()
    nz = emp > 0
    return float(np.sum(emp[nz] * np.log(emp[nz] / stat[nz])))
