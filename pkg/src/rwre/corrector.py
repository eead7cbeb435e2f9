"""The environment chain, the corrector, and the effective covariance.

Shifting the environment along the walk gives a Markov chain on torus
sites with kernel (Rf)(x) = sum_z f(x+z) p_z(x) and invariant probability
q(x) = M(x)/Z.  The corrector chi makes x + chi(x) harmonic: each
coordinate of u solves the Poisson problem (I - R)u = d0 with <u>_q = 0,
and chi(x) = u(x) - u(0).  The martingale X_n + chi(X_n) then has exactly
computable step covariance A.

Solves run coordinatewise: damped deflated fixed-point sweeps by default,
a dense rank-one-augmented solve as an oracle on small tori.  The sector
and H-minus-one checks probe their variational bounds with counter-seeded
random functions, so every reported ratio is replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend, rng
from .analysis import TorusKernel, assemble_kernel
from .environment import Environment
from .errors import ContractError, NumericalError, ParameterError

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 10**6
DENSE_SITE_CAP = 4096


@dataclass(eq=False)
class EnvChain:
    """Environment viewed from the walker, as a chain on torus sites."""

    env: Environment
    kernel: TorusKernel  # R
    kernel_star: TorusKernel  # R*, the q-adjoint
    q: np.ndarray  # invariant probability vector
    z_mass: float  # normalization sum(M)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.kernel.apply(f)

    def apply_star(self, f: np.ndarray) -> np.ndarray:
        return self.kernel_star.apply(f)

    def energy(self, f: np.ndarray, g: np.ndarray) -> float:
        """<f, (I - R) g> in L^2(q)."""
        return float(np.dot(self.q * f, g - self.kernel.apply(g)))


def build_env_chain(env: Environment) -> EnvChain:
    """Assemble R, its adjoint R* (the reversed-cycle kernel), and q."""
    kernel = assemble_kernel(env)
    kernel_star = assemble_kernel(env.reversed_)
    z = float(env.mass.sum())
    return EnvChain(env=env, kernel=kernel, kernel_star=kernel_star, q=env.mass / z, z_mass=z)


def adjoint_identity_check(chain: EnvChain, trials: int, seed: int) -> float:
    """max over random pairs of |<R*f, g>_q - <f, Rg>_q|.

    Also folds in the invariance claim |int Rf dq - int f dq| for the same
    functions.  Scale-free up to the O(1) test functions used.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    n = chain.kernel.n_sites
    worst = 0.0
    for t in range(trials):
        f = rng.normals(seed, rng.substream(rng.TAG_TESTFUNC, 2 * t), n)
        g = rng.normals(seed, rng.substream(rng.TAG_TESTFUNC, 2 * t + 1), n)
        rf = chain.apply(f)
        lhs = float(np.dot(chain.q * chain.apply_star(f), g))
        rhs = float(np.dot(chain.q * f, chain.apply(g)))
        worst = max(worst, abs(lhs - rhs))
        worst = max(worst, abs(float(np.dot(chain.q, rf)) - float(np.dot(chain.q, f))))
    return worst


@dataclass
class DriftField:
    """Per-site one-step mean displacement d0(x) = sum_z z p_z(x)."""

    vectors: np.ndarray  # (S, d)
    q_mean: np.ndarray  # (d,) should vanish: cycle displacements telescope

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.vectors).max())


def local_drift(chain: EnvChain) -> DriftField:
    vectors = chain.kernel.probs @ chain.kernel.steps.astype(float)
    return DriftField(vectors=vectors, q_mean=chain.q @ vectors)


def resolvent_solve(
    chain: EnvChain,
    drift: DriftField,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = MAX_SWEEPS,
    u0: np.ndarray | None = None,
) -> np.ndarray:
    """Solve ((1+lam) I - R) u = d0 coordinatewise, returning u of shape (S, d).

    The iteration u <- (d0 + Ru)/(1+lam) contracts at rate 1/(1+lam); the
    stopping rule bounds the operator residual sup-norm by tol.
    """
    if lam <= 0:
        raise ParameterError("lam must be positive")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    k = chain.kernel
    out = np.empty_like(drift.vectors)
    for a in range(drift.vectors.shape[1]):
        start = None if u0 is None else u0[:, a]
        u, residual, _ = backend.resolvent_sweeps(
            k.probs, k.nbr, drift.vectors[:, a], lam, tol, max_sweeps, start
        )
        if residual >= tol:
            raise NumericalError(
                f"resolvent solve (lam={lam}) stalled at residual {residual:.3e}"
            )
        out[:, a] = u
    return out


@dataclass
class CorrectorField:
    """Solved corrector with its diagnostics.

    chi anchors at the origin site; A is the stationary covariance of the
    harmonic-coordinate increments.
    """

    u: np.ndarray  # (S, d), <u>_q = 0 per coordinate
    chi: np.ndarray  # (S, d), chi = u - u[origin]
    A: np.ndarray  # (d, d)
    residuals: dict = field(default_factory=dict)
    sweeps: int = 0
    lambda_diag: object | None = None


def _poisson_solve_dense(chain: EnvChain, rhs: np.ndarray) -> np.ndarray:
    # rank-one augmentation pins the constant mode: (I - R + 1 q^T) u = rhs
    n = chain.kernel.n_sites
    op = np.eye(n) - chain.kernel.to_dense() + np.outer(np.ones(n), chain.q)
    return np.linalg.solve(op, rhs)


def poisson_solve(
    chain: EnvChain,
    drift: DriftField,
    tol: float = DEFAULT_TOL,
    method: str = "iterative",
    max_sweeps: int = MAX_SWEEPS,
    theta: float = 0.5,
    check_cocycle: bool = True,
) -> CorrectorField:
    """Solve (I - R) u = d0 with <u>_q = 0 and assemble the corrector.

    Damped deflated sweeps by default ("iterative"); "dense" does an exact
    rank-one-augmented solve on small tori as an oracle.  Postconditions
    checked here: drift cancellation at every site and, when
    check_cocycle, agreement of chi increments with independently solved
    shifted environments.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    solvability = float(np.abs(drift.q_mean).max())
    if solvability > max(tol, 1e-12):
        raise ContractError(
            f"drift not centered under q (|mean| = {solvability:.3e}); cycles must telescope"
        )
    k = chain.kernel
    n, d = drift.vectors.shape
    u = np.empty((n, d))
    total_sweeps = 0
    worst_residual = 0.0
    if method == "dense":
        if n > DENSE_SITE_CAP:
            raise ParameterError(f"dense solve capped at {DENSE_SITE_CAP} sites, got {n}")
        for a in range(d):
            u[:, a] = _poisson_solve_dense(chain, drift.vectors[:, a])
            v = drift.vectors[:, a] + k.apply(u[:, a])
            worst_residual = max(worst_residual, float(np.abs(u[:, a] - v + np.dot(chain.q, v)).max()))
    elif method == "iterative":
        for a in range(d):
            ua, residual, sweeps = backend.poisson_sweeps(
                k.probs, k.nbr, drift.vectors[:, a], chain.q, theta, tol, max_sweeps, None
            )
            if residual >= tol:
                raise NumericalError(
                    f"poisson solve stalled at residual {residual:.3e} after {sweeps} sweeps"
                )
            u[:, a] = ua
            total_sweeps += sweeps
            worst_residual = max(worst_residual, residual)
    else:
        raise ParameterError(f"unknown method {method!r}")

    u -= chain.q @ u
    chi = u - u[0]
    a_matrix = _covariance_from_chi(chain, chi)
    residuals = {
        "poisson": worst_residual,
        "drift_cancellation": _drift_cancellation_residual(chain, drift, chi),
    }
    if check_cocycle:
        residuals["cocycle"] = _cocycle_residual(chain, chi, tol, method, max_sweeps, theta)
    out = CorrectorField(u=u, chi=chi, A=a_matrix, residuals=residuals, sweeps=total_sweeps)
    _assert_spd(out.A)
    return out


def _drift_cancellation_residual(chain: EnvChain, drift: DriftField, chi: np.ndarray) -> float:
    """max over sites of |R chi - chi + d0|: the harmonicity of x + chi."""
    return float(np.abs(chain.apply(chi) - chi + drift.vectors).max())


def _cocycle_residual(
    chain: EnvChain, chi: np.ndarray, tol: float, method: str, max_sweeps: int, theta: float
) -> float:
    """chi(x + e) - chi(x) vs the corrector of the e-shifted environment.

    The shifted solve is fully independent, so this cross-validates both
    the solver and the shift structure of the corrector.
    """
    env = chain.env
    dims = env.dimension
    shape = (env.side,) * dims
    worst = 0.0
    for axis in range(dims):
        shift = tuple(1 if a == axis else 0 for a in range(dims))
        shifted_chain = build_env_chain(env.shifted(np.array(shift)))
        shifted = poisson_solve(
            shifted_chain,
            local_drift(shifted_chain),
            tol=tol,
            method=method,
            max_sweeps=max_sweeps,
            theta=theta,
            check_cocycle=False,
        )
        for a in range(chi.shape[1]):
            grid = chi[:, a].reshape(shape)
            rolled = np.roll(grid, shift=tuple(-s for s in shift), axis=tuple(range(dims)))
            # chi of the shifted environment must equal chi(y+e) - chi(e)
            expected = rolled - rolled[(0,) * dims]
            worst = max(worst, float(np.abs(shifted.chi[:, a] - expected.reshape(-1)).max()))
    return worst


def _covariance_from_chi(chain: EnvChain, chi: np.ndarray) -> np.ndarray:
    k = chain.kernel
    steps = k.steps.astype(float)
    d = steps.shape[1]
    a_matrix = np.zeros((d, d))
    for col in range(steps.shape[0]):
        v = steps[col][None, :] + chi[k.nbr[:, col]] - chi
        w = chain.q * k.probs[:, col]
        a_matrix += np.einsum("x,xi,xj->ij", w, v, v)
    return 0.5 * (a_matrix + a_matrix.T)


def covariance_matrix(chain: EnvChain, corrector: CorrectorField) -> np.ndarray:
    """Stationary covariance of the martingale increments z + chi-step."""
    a_matrix = _covariance_from_chi(chain, corrector.chi)
    _assert_spd(a_matrix)
    return a_matrix


def _assert_spd(a_matrix: np.ndarray) -> None:
    sym = float(np.abs(a_matrix - a_matrix.T).max())
    if sym > 1e-12 * max(1.0, float(np.abs(a_matrix).max())):
        raise NumericalError(f"covariance asymmetric by {sym:.3e}; corrector unconverged")
    eigs = np.linalg.eigvalsh(a_matrix)
    if eigs.min() <= 0:
        raise NumericalError(f"covariance not positive definite (min eig {eigs.min():.3e})")


@dataclass
class SectorCheck:
    bound: float
    max_ratio: float
    trials: int
    skipped: int

    @property
    def ok(self) -> bool:
        return self.max_ratio <= self.bound * (1 + 1e-12)


def sector_bound(env: Environment) -> float:
    """4 (max_i n_i)^2 over cycle lengths n_i."""
    return 4.0 * max(c.length for c in env.model.cycles) ** 2


def sector_condition_check(chain: EnvChain, trials: int, seed: int) -> SectorCheck:
    """Probe <f,(I-R)g>_q^2 <= bound * E(f,f) E(g,g) with random pairs.

    Pairs with (near-)zero energy carry no information and are skipped.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    n = chain.kernel.n_sites
    bound = sector_bound(chain.env)
    worst = 0.0
    skipped = 0
    for t in range(trials):
        f = rng.normals(seed, rng.substream(rng.TAG_TESTFUNC, 2 * t), n)
        g = rng.normals(seed, rng.substream(rng.TAG_TESTFUNC, 2 * t + 1), n)
        ef = chain.energy(f, f)
        eg = chain.energy(g, g)
        if ef <= 1e-14 or eg <= 1e-14:
            skipped += 1
            continue
        cross = chain.energy(f, g)
        worst = max(worst, cross * cross / (ef * eg))
    return SectorCheck(bound=bound, max_ratio=worst, trials=trials, skipped=skipped)


@dataclass
class HMinusOneCheck:
    bound: float
    max_ratio: float
    direction: np.ndarray
    trials: int
    skipped: int

    @property
    def ok(self) -> bool:
        return self.max_ratio <= self.bound * (1 + 1e-12)


def h_minus_one_bound(env: Environment) -> float:
    """2 max_i sum_j ||z_ij||^2 over each cycle's anchored points."""
    return 2.0 * max(c.anchored_norm_sq_sum() for c in env.model.cycles)


def h_minus_one_check(
    chain: EnvChain, drift: DriftField, direction: np.ndarray, trials: int, seed: int
) -> HMinusOneCheck:
    """Probe <d0 . a, f>_q^2 <= bound * E(f,f) with random functions.

    This is the variational form of the drift lying in the dual energy
    space; the bound depends on the cycles' anchored representatives.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    direction = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(direction))
    if norm == 0:
        raise ParameterError("direction must be nonzero")
    direction = direction / norm
    scalar_drift = drift.vectors @ direction
    bound = h_minus_one_bound(chain.env)
    n = chain.kernel.n_sites
    worst = 0.0
    skipped = 0
    for t in range(trials):
        f = rng.normals(seed, rng.substream(rng.TAG_TESTFUNC, t), n)
        ef = chain.energy(f, f)
        if ef <= 1e-14:
            skipped += 1
            continue
        pairing = float(np.dot(chain.q * scalar_drift, f))
        worst = max(worst, pairing * pairing / ef)
    return HMinusOneCheck(
        bound=bound, max_ratio=worst, direction=direction, trials=trials, skipped=skipped
    )


@dataclass
class LambdaSweep:
    """Resolvent diagnostics along a decreasing lambda schedule."""

    lambdas: np.ndarray
    resolvent_norms: np.ndarray  # ||lam u_lam||_{L^2(q)} per lambda
    increment_norms: np.ndarray  # (len-1, d) unit-shift L^2(q) norms of u_k - u_{k+1}
    solutions: list


def lambda_sweep(
    chain: EnvChain,
    drift: DriftField,
    lambdas: list[float],
    tol: float = DEFAULT_TOL,
) -> LambdaSweep:
    """Solve the resolvent equation along lambdas (positive, decreasing).

    Reports ||lam u_lam||_{L^2(q)} and, for consecutive solutions, the
    L^2(q) norms of the unit-shift increments of their difference; both
    shrink as lambda drops, which is the finite-volume echo of the
    corrector limit.  Consecutive solves warm-start from the previous one.
    """
    lams = np.asarray(lambdas, dtype=float)
    if len(lams) < 1 or np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise ParameterError("lambdas must be positive and strictly decreasing")
    env = chain.env
    dims = env.dimension
    shape = (env.side,) * dims
    sols = []
    norms = np.empty(len(lams))
    prev = None
    for i, lam in enumerate(lams):
        u = resolvent_solve(chain, drift, lam, tol=tol, u0=prev)
        sols.append(u)
        norms[i] = np.sqrt(float(np.einsum("x,xa,xa->", chain.q, u, u))) * lam
        prev = u
    inc = np.empty((max(len(lams) - 1, 0), dims))
    for i in range(len(lams) - 1):
        diff = sols[i] - sols[i + 1]
        for axis in range(dims):
            shifted = np.stack(
                [
                    np.roll(diff[:, a].reshape(shape), shift=-1, axis=axis).reshape(-1)
                    for a in range(diff.shape[1])
                ],
                axis=1,
            )
            delta = shifted - diff
            inc[i, axis] = np.sqrt(float(np.einsum("x,xa,xa->", chain.q, delta, delta)))
    return LambdaSweep(lambdas=lams, resolvent_norms=norms, increment_norms=inc, solutions=sols)


def edge_dirichlet_form(chain: EnvChain, f: np.ndarray) -> float:
    """E(f, f) recomputed from cycle edges and raw weight fields.

    (1/2Z) sum_x sum_i W_i(x) sum_edges (f(x+b) - f(x+a))^2, which must
    match the kernel-based Dirichlet form.
    """
    env = chain.env
    dims = env.dimension
    shape = (env.side,) * dims
    fgrid = np.asarray(f, dtype=float).reshape(shape)
    axes = tuple(range(dims))
    total = 0.0
    for i, cyc in enumerate(env.model.cycles):
        w = env.weights[i].reshape(shape)
        acc = np.zeros(shape)
        for a, b in cyc.edges():
            fa = np.roll(fgrid, shift=tuple(-c for c in a), axis=axes)
            fb = np.roll(fgrid, shift=tuple(-c for c in b), axis=axes)
            acc += (fb - fa) ** 2
        total += float((w * acc).sum())
    return total / (2.0 * chain.z_mass)
