"""Compiled implementations of the hot kernels.

Mirrors _backend_numpy function for function.  Accumulation order inside
each output entry matches the numpy path (step columns ascending), and the
walker loop consumes the same counter-based uniforms, so integer paths are
bit-identical across backends and float results agree to rounding.

Parallel loops only ever split independent output slices (matrix rows,
walkers), never reductions, so results do not depend on the thread count.
"""

from __future__ import annotations

import os

# Respect an explicit user choice; otherwise prefer the always-available
# workqueue layer so importing inside minimal containers stays quiet.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np
from numba import njit, prange

NAME = "numba"

_U64 = np.uint64
_INV_2_53 = 1.0 / (1 << 53)


@njit(cache=True)
def _mix64(h):
    h = h + _U64(0x9E3779B97F4A7C15)
    h = (h ^ (h >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    h = (h ^ (h >> _U64(27))) * _U64(0x94D049BB133111EB)
    return h ^ (h >> _U64(31))


@njit(cache=True)
def mix64(h: np.uint64) -> np.uint64:
    return _mix64(_U64(h))


@njit(cache=True, parallel=True)
def kernel_power_step(probs, nbr, p):
    n_sites, n_cols = probs.shape
    out = np.zeros_like(p)
    for x in prange(n_sites):
        for k in range(n_cols):
            w = probs[x, k]
            row = p[nbr[x, k]]
            for y in range(n_sites):
                out[x, y] += w * row[y]
    return out


@njit(cache=True)
def _apply_markov_2d(probs, nbr, f):
    n_sites, n_cols = probs.shape
    m = f.shape[1]
    out = np.zeros((n_sites, m))
    for x in range(n_sites):
        for k in range(n_cols):
            w = probs[x, k]
            j = nbr[x, k]
            for c in range(m):
                out[x, c] += w * f[j, c]
    return out


def apply_markov(probs, nbr, f):
    if f.ndim == 1:
        return _apply_markov_2d(probs, nbr, f.reshape(-1, 1)).reshape(-1)
    return _apply_markov_2d(probs, nbr, f)


@njit(cache=True)
def _poisson_sweeps(probs, nbr, rhs, q, theta, tol, max_sweeps, u0):
    n_sites = rhs.shape[0]
    n_cols = probs.shape[1]
    u = u0.copy()
    v = np.empty(n_sites)
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        residual = 0.0
        for x in range(n_sites):
            acc = rhs[x]
            for k in range(n_cols):
                acc += probs[x, k] * u[nbr[x, k]]
            v[x] = acc
            r = abs(u[x] - acc)
            if r > residual:
                residual = r
        if residual < tol:
            return u, residual, sweep - 1
        mean = 0.0
        for x in range(n_sites):
            mean += q[x] * v[x]
        for x in range(n_sites):
            u[x] = (1.0 - theta) * u[x] + theta * (v[x] - mean)
    return u, residual, max_sweeps


def poisson_sweeps(probs, nbr, rhs, q, theta, tol, max_sweeps, u0):
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    start = np.zeros_like(rhs) if u0 is None else np.ascontiguousarray(u0, dtype=np.float64)
    u, r, s = _poisson_sweeps(probs, nbr, rhs, q, float(theta), float(tol), int(max_sweeps), start)
    return u, float(r), int(s)


@njit(cache=True)
def _resolvent_sweeps(probs, nbr, rhs, lam, tol, max_sweeps, u0):
    n_sites = rhs.shape[0]
    n_cols = probs.shape[1]
    u = u0.copy()
    v = np.empty(n_sites)
    scale = 1.0 / (1.0 + lam)
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        residual = 0.0
        for x in range(n_sites):
            acc = rhs[x]
            for k in range(n_cols):
                acc += probs[x, k] * u[nbr[x, k]]
            acc *= scale
            v[x] = acc
            r = abs(u[x] - acc)
            if r > residual:
                residual = r
        residual *= 1.0 + lam
        if residual < tol:
            return u, residual, sweep - 1
        tmp = u
        u = v
        v = tmp
    return u, residual, max_sweeps


def resolvent_sweeps(probs, nbr, rhs, lam, tol, max_sweeps, u0):
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    start = np.zeros_like(rhs) if u0 is None else np.ascontiguousarray(u0, dtype=np.float64)
    u, r, s = _resolvent_sweeps(probs, nbr, rhs, float(lam), float(tol), int(max_sweeps), start)
    return u, float(r), int(s)


@njit(cache=True, parallel=True)
def _walk_ensemble(cum, steps, side, strides, start, stream_seeds, checkpoints):
    n_walkers = stream_seeds.shape[0]
    d = steps.shape[1]
    n_cols = cum.shape[1]
    n_cp = checkpoints.shape[0]
    n_steps = 0
    for i in range(n_cp):
        if checkpoints[i] > n_steps:
            n_steps = checkpoints[i]
    out = np.empty((n_cp, n_walkers, d), dtype=np.int64)
    for w in prange(n_walkers):
        pos = np.empty(d, dtype=np.int64)
        for a in range(d):
            pos[a] = start[a]
        seed = stream_seeds[w]
        for i in range(n_cp):
            if checkpoints[i] == 0:
                for a in range(d):
                    out[i, w, a] = pos[a]
        for t in range(n_steps):
            site = 0
            for a in range(d):
                site += (pos[a] % side) * strides[a]
            u = np.float64(_mix64(seed ^ _U64(t)) >> _U64(11)) * _INV_2_53
            k = 0
            while k < n_cols - 1 and u >= cum[site, k]:
                k += 1
            for a in range(d):
                pos[a] += steps[k, a]
            for i in range(n_cp):
                if checkpoints[i] == t + 1:
                    for a in range(d):
                        out[i, w, a] = pos[a]
    return out


def walk_ensemble(cum, steps, side, strides, start, stream_seeds, checkpoints):
    return _walk_ensemble(
        cum,
        steps,
        np.int64(side),
        strides,
        start.astype(np.int64),
        stream_seeds,
        checkpoints.astype(np.int64),
    )


@njit(cache=True)
def _walk_path(cum, steps, side, strides, start, stream_seed, n_steps):
    d = steps.shape[1]
    n_cols = cum.shape[1]
    path = np.empty((n_steps + 1, d), dtype=np.int64)
    pos = np.empty(d, dtype=np.int64)
    for a in range(d):
        pos[a] = start[a]
        path[0, a] = pos[a]
    for t in range(n_steps):
        site = 0
        for a in range(d):
            site += (pos[a] % side) * strides[a]
        u = np.float64(_mix64(stream_seed ^ _U64(t)) >> _U64(11)) * _INV_2_53
        k = 0
        while k < n_cols - 1 and u >= cum[site, k]:
            k += 1
        for a in range(d):
            pos[a] += steps[k, a]
            path[t + 1, a] = pos[a]
    return path


def walk_path(cum, steps, side, strides, start, stream_seed, n_steps):
    return _walk_path(
        cum,
        steps,
        np.int64(side),
        strides,
        start.astype(np.int64),
        _U64(stream_seed),
        np.int64(n_steps),
    )
