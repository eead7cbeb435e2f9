"""Periodized environments and their step laws.

An environment is a realization of every cycle's weight field on a torus of
side L (one weight per cycle per translate).  All walk quantities derive
from it:

    mass      M(x)   = sum_i sum_j W_i(x - z_{i,j})          (points j)
    step law  p_z(x) = (1/M(x)) sum_i sum_{edges a->b, b-a=z} W_i(x - a)

Translates wrap around the torus; walk positions themselves are kept
unwrapped by consumers and only reduced mod L for lookups.  The side must
exceed twice the largest cycle diameter so a translate never covers a site
twice.

Weights are counter-hashed from (seed, cycle index, site), so environments
are reproducible bit for bit and two models sharing a seed share nothing
structurally.  A coupled pair consumes a single Bernoulli draw per site,
addressed by the first index of the pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng
from .cycles import CycleModel
from .errors import ModelError, ParameterError


@dataclass
class StepDistribution:
    """One site's step law over the model range, in fixed support order."""

    site: tuple[int, ...]
    support: np.ndarray  # (k, d) int64, lexicographic
    probs: np.ndarray  # (k,) float64, sums to 1


@dataclass
class ValidationReport:
    """Outcome of the standing-assumption checks on one environment."""

    model: str
    side: int
    seed: int
    mass_min: float
    mass_max: float
    declared_mass_bounds: tuple[float, float]
    range_b: int
    n_steps: int
    probe_n: int
    probe_eps: float
    eps0: float
    witness: dict | None
    passed: dict[str, bool]

    @property
    def certified(self) -> bool:
        return all(self.passed.values())


@dataclass(eq=False)
class Environment:
    """Sampled weight fields on a torus, plus derived step tables.

    Treat as immutable after construction; derived tables are cached.
    weights has shape (n_cycles, n_sites) with sites flattened in C order.
    """

    model: CycleModel
    side: int
    seed: int
    weights: np.ndarray

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def n_sites(self) -> int:
        return self.side ** self.dimension

    @cached_property
    def strides(self) -> np.ndarray:
        d = self.dimension
        return np.array([self.side ** (d - 1 - k) for k in range(d)], dtype=np.int64)

    def flat_index(self, x) -> int:
        """Flat site index of a (possibly unwrapped) lattice point."""
        x = np.asarray(x, dtype=np.int64)
        return int(np.dot(np.mod(x, self.side), self.strides))

    def site_coords(self, flat: int) -> tuple[int, ...]:
        out = []
        for s in self.strides:
            out.append(int(flat // s))
            flat = flat % s
        return tuple(out)

    def _grid(self, flat_field: np.ndarray) -> np.ndarray:
        return flat_field.reshape((self.side,) * self.dimension)

    @cached_property
    def mass(self) -> np.ndarray:
        """M at every site, shape (n_sites,)."""
        d = self.dimension
        grid_shape = (self.side,) * d
        total = np.zeros(grid_shape)
        for i, cyc in enumerate(self.model.cycles):
            w = self.weights[i].reshape(grid_shape)
            for p in cyc.points[:-1]:
                total += np.roll(w, shift=p, axis=tuple(range(d)))
        return total.reshape(-1)

    @cached_property
    def steps(self) -> np.ndarray:
        """The model range as a (k, d) array in lexicographic order."""
        steps, _ = self.model.range_set()
        return steps

    @cached_property
    def range_b(self) -> int:
        _, b = self.model.range_set()
        return b

    @cached_property
    def step_weights(self) -> np.ndarray:
        """Unnormalized step weights, shape (n_sites, k)."""
        d = self.dimension
        grid_shape = (self.side,) * d
        steps = self.steps
        col_of = {tuple(z): k for k, z in enumerate(steps)}
        out = np.zeros((self.n_sites, len(steps)))
        for i, cyc in enumerate(self.model.cycles):
            w = self.weights[i].reshape(grid_shape)
            for a, b in cyc.edges():
                z = tuple(int(bb - aa) for aa, bb in zip(a, b))
                rolled = np.roll(w, shift=a, axis=tuple(range(d)))
                out[:, col_of[z]] += rolled.reshape(-1)
        return out

    @cached_property
    def step_probs(self) -> np.ndarray:
        """p_z at every site, shape (n_sites, k); rows sum to 1."""
        m = self.mass
        if np.any(m <= 0):
            bad = int(np.argmin(m))
            raise ModelError(
                f"zero mass at site {self.site_coords(bad)}; step law undefined"
            )
        return self.step_weights / m[:, None]

    @cached_property
    def neighbor_index(self) -> np.ndarray:
        """Flat index of x + z for every site x and range step z, (n_sites, k)."""
        d = self.dimension
        grid = np.arange(self.n_sites, dtype=np.int64).reshape((self.side,) * d)
        cols = []
        for z in self.steps:
            cols.append(np.roll(grid, shift=tuple(-int(c) for c in z), axis=tuple(range(d))).reshape(-1))
        return np.stack(cols, axis=1)

    @cached_property
    def reversed_(self) -> "Environment":
        """The same weights driving the time-reversed cycles."""
        env = Environment(
            model=self.model.reversed_(), side=self.side, seed=self.seed, weights=self.weights
        )
        return env

    def shifted(self, v) -> "Environment":
        """The environment seen from lattice point v (weights translated)."""
        v = tuple(int(c) for c in np.asarray(v, dtype=np.int64))
        d = self.dimension
        grid_shape = (self.side,) * d
        rolled = np.stack(
            [
                np.roll(w.reshape(grid_shape), shift=tuple(-c for c in v), axis=tuple(range(d))).reshape(-1)
                for w in self.weights
            ]
        )
        return Environment(model=self.model, side=self.side, seed=self.seed, weights=rolled)


def build_environment(model: CycleModel, side: int, seed: int) -> Environment:
    """Sample every cycle's weight field on the torus of the given side."""
    d = model.dimension
    min_side = 2 * model.max_diameter_inf() + 1
    if side <= min_side - 1 or side < 2:
        worst = max(model.cycles, key=lambda c: c.diameter_inf())
        raise ModelError(
            f"side {side} too small: cycle {worst.points} has sup-norm diameter "
            f"{worst.diameter_inf()}, need side > {2 * model.max_diameter_inf()}"
        )
    n_sites = side ** d
    coords = np.indices((side,) * d).reshape(d, n_sites)
    coord_cols = [coords[k] for k in range(d)]

    weights = np.empty((model.n_cycles, n_sites))
    done: set[int] = set()
    for i in range(model.n_cycles):
        if i in done:
            continue
        j = model.coupling_partner(i)
        if j is None:
            cols = [np.full(n_sites, i, dtype=np.uint64)] + coord_cols
            u = rng.u01_array(rng.hash_fold_array(seed, cols))
            weights[i] = model.laws[i].sample(u)
        else:
            first = min(i, j)
            cols = [np.full(n_sites, first, dtype=np.uint64)] + coord_cols
            u = rng.u01_array(rng.hash_fold_array(seed, cols))
            w_first = (u < model.laws[first].p).astype(np.float64)
            weights[first] = w_first
            weights[max(i, j)] = 1.0 - w_first
            done.add(max(i, j))
    return Environment(model=model, side=side, seed=seed, weights=weights)


def mass_at(env: Environment, x) -> float:
    """Total covering weight M at a lattice point."""
    m = float(env.mass[env.flat_index(x)])
    if m == 0.0:
        raise ModelError(f"zero mass at site {tuple(np.mod(np.asarray(x), env.side))}")
    return m


def step_distribution(env: Environment, x) -> StepDistribution:
    """The walk's one-step law at x."""
    i = env.flat_index(x)
    probs = env.step_probs[i]
    return StepDistribution(
        site=tuple(int(c) % env.side for c in np.asarray(x, dtype=np.int64)),
        support=env.steps,
        probs=probs.copy(),
    )


def step_distribution_reversed(env: Environment, x) -> StepDistribution:
    """One-step law of the time reversal (reversed cycles, same weights)."""
    return step_distribution(env.reversed_, x)


def _maximin_reach(env: Environment, n_max: int) -> np.ndarray:
    """Best worst-step probability over paths of length <= n_max.

    Returns U of shape (n_sites, (2R+1)^d offset grid) where R = n_max * B:
    U[x, o] is the largest eps such that some path of at most n_max steps
    from x to x + o uses only steps of probability >= eps (0 if none).
    """
    d = env.dimension
    r = n_max * env.range_b
    width = 2 * r + 1
    off_shape = (width,) * d
    n_off = width ** d
    u = np.zeros((env.n_sites, n_off))
    center = tuple(r for _ in range(d))
    u_grid = u.reshape((env.n_sites,) + off_shape)
    u_grid[(slice(None),) + center] = np.inf

    probs = env.step_probs
    nbr = env.neighbor_index
    best = u_grid.copy()
    cur = u_grid
    for _ in range(n_max):
        nxt = cur.copy()
        for k, z in enumerate(env.steps):
            gathered = cur[nbr[:, k]]
            # offset axes shift by -z with zero fill: a path starting with
            # step z and continuing to offset o-z from the neighbor
            shifted = np.zeros_like(gathered)
            src = [slice(None)]
            dst = [slice(None)]
            ok = True
            for c in z:
                c = int(c)
                lo_src = max(0, -c)
                hi_src = width - max(0, c)
                if hi_src <= lo_src:
                    ok = False
                    break
                src.append(slice(lo_src, hi_src))
                dst.append(slice(lo_src + c, hi_src + c))
            if not ok:
                continue
            shifted[tuple(dst)] = gathered[tuple(src)]
            cand = np.minimum(probs[:, k].reshape((-1,) + (1,) * d), shifted)
            np.maximum(nxt, cand, out=nxt)
        cur = nxt
        np.maximum(best, cur, out=best)
    return best.reshape(env.n_sites, n_off)


def validate_assumptions(env: Environment, probe_n: int, probe_eps: float) -> ValidationReport:
    """Check mass bounds and bounded-length irreducibility on one environment.

    The irreducibility probe computes, for every site x and unit direction
    e, the exact best level eps such that x reaches x + e within probe_n
    steps each of probability >= eps; the certified eps0 is the minimum
    over all pairs.  Certification requires eps0 >= probe_eps.
    """
    if probe_n < 1:
        raise ParameterError("probe_n must be at least 1")
    if not 0 < probe_eps <= 1:
        raise ParameterError("probe_eps must lie in (0, 1]")
    d = env.dimension
    mass = env.mass
    mass_min = float(mass.min())
    mass_max = float(mass.max())
    declared = env.model.mass_bounds()
    tol = 1e-12 * max(1.0, abs(declared[1]))

    passed = {
        "mass_positive": mass_min > 0,
        "mass_within_bounds": (mass_min >= declared[0] - tol) and (mass_max <= declared[1] + tol),
    }

    eps0 = 0.0
    witness = None
    if passed["mass_positive"]:
        best = _maximin_reach(env, probe_n)
        r = probe_n * env.range_b
        width = 2 * r + 1
        # offset grid flat index of +-e_k
        eps0 = np.inf
        for axis in range(d):
            for sign in (1, -1):
                off = [r] * d
                off[axis] += sign
                flat_off = 0
                for c in off:
                    flat_off = flat_off * width + c
                vals = best[:, flat_off]
                site = int(np.argmin(vals))
                if vals[site] < eps0:
                    eps0 = float(vals[site])
                    e = tuple(sign if k == axis else 0 for k in range(d))
                    witness = {
                        "site": env.site_coords(site),
                        "direction": e,
                        "best_eps": float(vals[site]),
                    }
        passed["irreducible"] = eps0 >= probe_eps
        if passed["irreducible"]:
            witness = None
    else:
        passed["irreducible"] = False

    return ValidationReport(
        model=env.model.name,
        side=env.side,
        seed=env.seed,
        mass_min=mass_min,
        mass_max=mass_max,
        declared_mass_bounds=declared,
        range_b=env.range_b,
        n_steps=len(env.steps),
        probe_n=probe_n,
        probe_eps=probe_eps,
        eps0=float(eps0),
        witness=witness,
        passed=passed,
    )


def reversal_identity_residual(env: Environment) -> float:
    """Flux match between the walk and its time reversal, checked per step.

    For every site y and step z of the reversed walk, p*_z(y) M(y) must
    equal p_{-z}(y + z) M(y + z): reversing the cycles preserves every
    edge's flow.  Returns the max absolute mismatch.
    """
    rev = env.reversed_
    shape = (env.side,) * env.dimension
    axes = tuple(range(env.dimension))
    col_of = {tuple(z): j for j, z in enumerate(env.steps.tolist())}
    flux_fwd = env.step_weights  # p_z M = summed covering weights per step
    flux_rev = rev.step_weights
    worst = 0.0
    for j, z in enumerate(rev.steps.tolist()):
        back = col_of[tuple(-c for c in z)]
        lhs = flux_rev[:, j].reshape(shape)
        rhs = np.roll(
            flux_fwd[:, back].reshape(shape), shift=tuple(-c for c in z), axis=axes
        )
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def square_triangle_mass_residual(env: Environment) -> float:
    """Closed-form mass check for the coupled plaquette model.

    There M(x) = 3 + W_square(x - e_2): three points are always covered,
    and the fourth only when the translate anchored below-left carries the
    square.  Only defined for the builtin square/triangle pair.
    """
    if env.model.name != "square_triangle":
        raise ModelError(f"closed-form mass only holds for square_triangle, got {env.model.name!r}")
    shape = (env.side,) * env.dimension
    w_square = env.weights[0].reshape(shape)
    predicted = 3.0 + np.roll(w_square, shift=(0, 1), axis=(0, 1))
    return float(np.abs(env.mass.reshape(shape) - predicted).max())
