"""Acceptance gate: eight criteria, one test and one verdict line each.

Each criterion pins its own models, sizes, seeds, tolerances, and (where
stated) wall-clock budgets.  Heavy objects are built once per module and
shared.  A printed PASS/FAIL line accompanies every assertion block so a
failing run names the criterion, not just the assert.
"""

import time

import numpy as np
import pytest

from rwre import analysis, corrector as corr
from rwre import cycles, environment as envmod, montecarlo as mc

SQUARE_TRIANGLE_SEED = 7
CONSTANT_SEED = 3
ELLIPTIC_SEED = 11


def _verdict(num: int, label: str, ok: bool) -> None:
    print(f"criterion {num} ({label}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({label}) failed"


@pytest.fixture(scope="module")
def st16():
    env = envmod.build_environment(cycles.square_triangle(), 16, SQUARE_TRIANGLE_SEED)
    chain = corr.build_env_chain(env)
    drift = corr.local_drift(chain)
    sol = corr.poisson_solve(chain, drift)
    return env, chain, drift, sol


@pytest.fixture(scope="module")
def const16():
    env = envmod.build_environment(
        cycles.random_conductance(lo=1.0, hi=1.0), 16, CONSTANT_SEED
    )
    chain = corr.build_env_chain(env)
    drift = corr.local_drift(chain)
    sol = corr.poisson_solve(chain, drift)
    return env, chain, drift, sol


@pytest.fixture(scope="module")
def ue16():
    env = envmod.build_environment(cycles.uniformly_elliptic(), 16, ELLIPTIC_SEED)
    chain = corr.build_env_chain(env)
    drift = corr.local_drift(chain)
    sol = corr.poisson_solve(chain, drift)
    return env, chain, drift, sol


def test_criterion_1_exact_identities(st16, const16, ue16):
    ok = True
    for env, chain, _, _ in (st16, const16, ue16):
        k = chain.kernel
        ok &= k.row_sum_residual() < 1e-10
        ok &= k.invariance_residual() < 1e-10
        ok &= envmod.reversal_identity_residual(env) < 1e-12
        ok &= corr.adjoint_identity_check(chain, trials=100, seed=7) < 1e-10
        ok &= chain.kernel_star.invariance_residual() < 1e-10
    st_env = st16[0]
    ok &= envmod.square_triangle_mass_residual(st_env) < 1e-10
    _verdict(1, "exact identities", bool(ok))


def test_criterion_2_corrector_suite(st16, const16):
    env, chain, drift, sol = st16
    ok = True
    for key in ("poisson", "cocycle", "drift_cancellation"):
        ok &= sol.residuals[key] < 1e-10
    ok &= mc.martingale_residual(env, sol) < 1e-10
    cenv, _, _, csol = const16
    for key in ("poisson", "cocycle", "drift_cancellation"):
        ok &= csol.residuals[key] < 1e-10
    ok &= mc.martingale_residual(cenv, csol) < 1e-10
    ok &= float(np.abs(csol.chi).max()) <= 1e-12
    ok &= float(np.abs(csol.A - 0.5 * np.eye(2)).max()) <= 1e-12
    _verdict(2, "corrector suite", bool(ok))


def test_criterion_3_bound_inequalities(st16):
    env, chain, drift, _ = st16
    sector = corr.sector_condition_check(chain, trials=1000, seed=7)
    ok = sector.bound == 64.0 and sector.ok and sector.max_ratio <= 64.0
    for axis in range(2):
        direction = np.zeros(2)
        direction[axis] = 1.0
        h = corr.h_minus_one_check(chain, drift, direction, trials=1000, seed=7)
        ok &= h.bound == 8.0 and h.ok and h.max_ratio <= 8.0
    _verdict(3, "sector and H^-1 bounds", bool(ok))


def test_criterion_4_decay_and_gaussian_bounds():
    t0 = time.perf_counter()
    env = envmod.build_environment(cycles.square_triangle(), 32, SQUARE_TRIANGLE_SEED)
    k = analysis.assemble_kernel(env)
    dec = analysis.ondiag_decay(k, 256)
    ok = abs(dec.slope + 1.0) <= 0.15
    c3s = []
    for seed in (1, 2, 3, 4, 5):
        e = envmod.build_environment(cycles.square_triangle(), 32, seed)
        fit = analysis.gaussian_bound_fit(analysis.assemble_kernel(e), 256)
        ok &= np.isfinite(fit.c3) and fit.c3 > 0 and fit.max_violation <= 0
        c3s.append(fit.c3)
    ok &= max(c3s) / min(c3s) <= 2.0
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 120.0
    _verdict(4, "decay and gaussian bounds", bool(ok))


def test_criterion_5_nash_isoperimetric():
    ok = True
    for model, seed in (
        (cycles.square_triangle(), SQUARE_TRIANGLE_SEED),
        (cycles.uniformly_elliptic(), ELLIPTIC_SEED),
    ):
        kappas = []
        for side in (16, 32):
            env = envmod.build_environment(model, side, seed)
            probe_n = cycles.DEFAULT_PROBE_N[model.name]
            rep = envmod.validate_assumptions(env, probe_n=probe_n, probe_eps=1e-9)
            ok &= rep.certified
            cons = analysis.constructive_dilation_params(
                env.dimension, env.range_b, probe_n, rep.eps0
            )
            k = analysis.assemble_kernel(env)
            cert = analysis.dilation_scan(k, m_max=min(cons["m"], 8))
            ok &= cert is not None and cert.m <= cons["m"]
            nash = analysis.nash_estimate(k, m=cert.m, trials=256, seed=seed)
            ok &= nash.certified and nash.kappa > 0
            kappas.append(nash.kappa)
        ok &= max(kappas) / min(kappas) <= 2.0
    for d in (2, 3):
        rec = analysis.nash_recursion_check(1.0, 0.1, d, 10**4)
        ok &= rec.ok and rec.first_violation is None and rec.c0 >= 1.0
    _verdict(5, "nash and isoperimetric", bool(ok))


def test_criterion_6_quenched_clt(st16):
    env, chain, drift, sol = st16
    t0 = time.perf_counter()
    res = mc.quenched_clt_experiment(
        env, sol, n_steps=4096, walkers=100000, seed=SQUARE_TRIANGLE_SEED,
        checkpoints=[256, 1024, 4096],
    )
    final = res.final
    band = np.maximum(4.0 * final.se, 0.05 * np.abs(res.target))
    ok = bool(np.all(np.abs(final.cov - res.target) <= band))
    # the mean test runs on the martingale part M_N = X_N + chi(X_N): its
    # expectation vanishes exactly at every N, while E[X_N] itself carries
    # the bounded corrector transient -E[chi(X_N)]
    mean_se = np.sqrt(np.diagonal(final.martingale_cov) / res.walkers)
    ok &= bool(np.all(np.abs(final.martingale_mean) <= 4.0 * mean_se))
    shares = [s.corrector_share for s in res.checkpoints]
    ok &= shares[0] > shares[1] > shares[2] > 0
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 300.0
    _verdict(6, "quenched clt", bool(ok))


def test_criterion_7_negative_controls(st16):
    model = cycles.triangle_triangle()
    failures = 0
    for seed in range(1, 11):
        env = envmod.build_environment(model, 32, seed)
        rep = envmod.validate_assumptions(env, probe_n=8, probe_eps=1e-9)
        if not rep.certified:
            failures += 1
    ok = failures >= 1
    env, chain, drift, sol = st16
    dead = corr.CorrectorField(u=np.zeros_like(sol.u), chi=np.zeros_like(sol.chi), A=sol.A)
    resid = mc.martingale_residual(env, dead)
    ok &= resid > 0 and abs(resid - drift.sup_norm) < 1e-14
    _verdict(7, "negative controls", bool(ok))


def test_criterion_8_nondegenerate_covariance(st16, const16, ue16):
    ok = True
    for _, _, _, sol in (st16, const16, ue16):
        ok &= float(np.linalg.eigvalsh(sol.A).min()) > 0
    _verdict(8, "covariance non-degeneracy", bool(ok))
