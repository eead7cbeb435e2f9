"""Pure-numpy implementations of the hot kernels.

Reference semantics for the compiled backend: same signatures, same
accumulation order (step columns ascending), so results agree with the
numba path to rounding, and walker paths agree bit for bit (they are
integer sequences driven by identical counter-based uniforms).
"""

from __future__ import annotations

import numpy as np

from . import rng

NAME = "numpy"


def kernel_power_step(probs: np.ndarray, nbr: np.ndarray, p: np.ndarray) -> np.ndarray:
    """One multiplication P <- Q P for row-sparse Q.

    probs, nbr: (S, k) step probabilities and wrapped target site indices.
    p: (S, S) dense n-step matrix.  Returns the (n+1)-step matrix.
    """
    out = probs[:, 0:1] * p[nbr[:, 0], :]
    for k in range(1, probs.shape[1]):
        out += probs[:, k : k + 1] * p[nbr[:, k], :]
    return out


def apply_markov(probs: np.ndarray, nbr: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(Qf)(x) = sum_k probs[x,k] f(nbr[x,k]) for f of shape (S,) or (S, m)."""
    if f.ndim == 1:
        out = probs[:, 0] * f[nbr[:, 0]]
        for k in range(1, probs.shape[1]):
            out += probs[:, k] * f[nbr[:, k]]
        return out
    out = probs[:, 0:1] * f[nbr[:, 0], :]
    for k in range(1, probs.shape[1]):
        out += probs[:, k : k + 1] * f[nbr[:, k], :]
    return out


def poisson_sweeps(
    probs: np.ndarray,
    nbr: np.ndarray,
    rhs: np.ndarray,
    q: np.ndarray,
    theta: float,
    tol: float,
    max_sweeps: int,
    u0: np.ndarray,
) -> tuple[np.ndarray, float, int]:
    """Damped deflated fixed-point iteration for (I - Q) u = rhs.

    rhs: (S,), must have zero q-mean (q the normalized invariant weights);
    the constant mode is projected out every sweep.  theta = 1/2 keeps the
    iteration convergent even for kernels with a period-2 mode.  u0 = None
    starts from zero.  Returns (u, residual, sweeps) where residual =
    max |(I - Q) u - rhs|.
    """
    u = np.zeros_like(rhs) if u0 is None else u0.copy()
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        v = rhs + apply_markov(probs, nbr, u)
        residual = float(np.abs(u - v).max())
        if residual < tol:
            return u, residual, sweep - 1
        v -= q @ v
        u = (1.0 - theta) * u + theta * v
    return u, residual, max_sweeps


def resolvent_sweeps(
    probs: np.ndarray,
    nbr: np.ndarray,
    rhs: np.ndarray,
    lam: float,
    tol: float,
    max_sweeps: int,
    u0: np.ndarray,
) -> tuple[np.ndarray, float, int]:
    """Fixed-point iteration u <- (rhs + Q u) / (1 + lam).

    rhs: (S,); u0 = None starts from zero.  Contraction with factor
    1/(1+lam); residual = max |(1+lam) u - Q u - rhs|.
    """
    u = np.zeros_like(rhs) if u0 is None else u0.copy()
    scale = 1.0 / (1.0 + lam)
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        v = (rhs + apply_markov(probs, nbr, u)) * scale
        residual = float((1.0 + lam) * np.abs(u - v).max())
        if residual < tol:
            return u, residual, sweep - 1
        u = v
    return u, residual, max_sweeps


def walk_ensemble(
    cum: np.ndarray,
    steps: np.ndarray,
    side: int,
    strides: np.ndarray,
    start: np.ndarray,
    stream_seeds: np.ndarray,
    checkpoints: np.ndarray,
) -> np.ndarray:
    """Simulate all walkers to max(checkpoints) steps; snapshot positions.

    cum: (S, k) per-site cumulative step probabilities (last column 1.0).
    Returns int64 positions of shape (len(checkpoints), n_walkers, d),
    unwrapped.  Step t of walker w is driven by u01(mix64(seed_w ^ t)), so
    paths are independent of batching and identical across backends.
    """
    n_walkers = stream_seeds.shape[0]
    d = steps.shape[1]
    n_steps = int(checkpoints.max()) if len(checkpoints) else 0
    cpset = {int(c): i for i, c in enumerate(checkpoints)}
    pos = np.tile(start.astype(np.int64), (n_walkers, 1))
    out = np.empty((len(checkpoints), n_walkers, d), dtype=np.int64)
    if 0 in cpset:
        out[cpset[0]] = pos
    for t in range(n_steps):
        site = np.mod(pos, side) @ strides
        h = rng.mix64_array(stream_seeds ^ np.uint64(t))
        u = (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        rows = cum[site]
        k = np.minimum((u[:, None] >= rows).sum(axis=1), rows.shape[1] - 1)
        pos += steps[k]
        if t + 1 in cpset:
            out[cpset[t + 1]] = pos
    return out


def walk_path(
    cum: np.ndarray,
    steps: np.ndarray,
    side: int,
    strides: np.ndarray,
    start: np.ndarray,
    stream_seed: int,
    n_steps: int,
) -> np.ndarray:
    """One full trajectory, positions (n_steps + 1, d), unwrapped."""
    d = steps.shape[1]
    path = np.empty((n_steps + 1, d), dtype=np.int64)
    pos = start.astype(np.int64).copy()
    path[0] = pos
    seed = int(stream_seed)
    n_cols = cum.shape[1]
    for t in range(n_steps):
        site = 0
        for a in range(d):
            site += (pos[a] % side) * strides[a]
        u = rng.u01(rng.mix64(seed ^ t))
        row = cum[site]
        k = 0
        while k < n_cols - 1 and u >= row[k]:
            k += 1
        pos += steps[k]
        path[t + 1] = pos
    return path
