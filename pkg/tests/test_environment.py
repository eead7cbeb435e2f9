"""Environment tables against a direct translate-enumeration oracle."""

import numpy as np
import pytest

from rwre import cycles, environment as envmod
from rwre.cycles import Cycle, CycleModel, WeightLaw
from rwre.errors import ModelError, ParameterError


def _flat(x, side, dim):
    idx = 0
    for c in x:
        idx = idx * side + (c % side)
    return idx


def _oracle_tables(env):
    """Recompute mass and step weights site by site from first principles.

    A translate of cycle i anchored at t covers x through cycle point p iff
    t == x - p; it then offers the outgoing edge at p, weighted by the
    translate's weight.
    """
    side, d = env.side, env.dimension
    n = side**d
    steps = [tuple(z) for z in env.steps.tolist()]
    mass = np.zeros(n)
    stepw = np.zeros((n, len(steps)))
    sites = [env.site_coords(f) for f in range(n)]
    for f, x in enumerate(sites):
        for i, cyc in enumerate(env.model.cycles):
            pts = cyc.points[:-1]
            for j, p in enumerate(pts):
                t = tuple((xc - pc) % side for xc, pc in zip(x, p))
                w = env.weights[i][_flat(t, side, d)]
                mass[f] += w
                nxt = cyc.points[j + 1]
                z = tuple(nc - pc for nc, pc in zip(nxt, p))
                stepw[f, steps.index(z)] += w
    return mass, stepw


@pytest.mark.parametrize("name,seed", [("square_triangle", 7), ("uniformly_elliptic", 11), ("triangle_triangle", 3)])
def test_mass_and_step_tables_match_enumeration(name, seed):
    env = envmod.build_environment(cycles.BUILTIN_MODELS[name](), 6, seed)
    mass, stepw = _oracle_tables(env)
    assert np.abs(env.mass - mass).max() == 0.0
    assert np.abs(env.step_weights - stepw).max() == 0.0
    assert np.abs(env.step_probs - stepw / mass[:, None]).max() < 1e-15
    assert np.abs(env.step_probs.sum(axis=1) - 1.0).max() < 1e-14


def test_coupled_pair_shares_one_unit_per_translate():
    env = envmod.build_environment(cycles.square_triangle(), 12, 5)
    assert np.all(env.weights[0] + env.weights[1] == 1.0)
    assert set(np.unique(env.weights)) <= {0.0, 1.0}


def test_neighbor_index_wraps():
    env = envmod.build_environment(cycles.square_triangle(), 6, 1)
    for f in (0, 7, 35):
        x = env.site_coords(f)
        for k, z in enumerate(env.steps):
            y = tuple((xc + zc) % 6 for xc, zc in zip(x, z))
            assert env.neighbor_index[f, k] == _flat(y, 6, 2)


def test_mass_closed_form_square_triangle():
    for seed in (0, 7, 11, 42):
        env = envmod.build_environment(cycles.square_triangle(), 16, seed)
        assert envmod.square_triangle_mass_residual(env) == 0.0
    other = envmod.build_environment(cycles.uniformly_elliptic(), 8, 0)
    with pytest.raises(ModelError):
        envmod.square_triangle_mass_residual(other)


@pytest.mark.parametrize("name", sorted(cycles.BUILTIN_MODELS))
def test_reversal_identity_exact(name):
    for seed in (1, 9):
        env = envmod.build_environment(cycles.BUILTIN_MODELS[name](), 10, seed)
        assert envmod.reversal_identity_residual(env) == 0.0


def test_reversed_environment_swaps_step_supports():
    env = envmod.build_environment(cycles.square_triangle(), 8, 2)
    rev = env.reversed_
    assert np.array_equal(rev.steps, -env.steps[::-1])
    assert rev.weights is env.weights  # same fields drive both directions
    assert np.abs(rev.mass - env.mass).max() == 0.0


def test_shifted_environment_translates_all_tables():
    env = envmod.build_environment(cycles.square_triangle(), 8, 3)
    v = (2, 5)
    sh = env.shifted(v)
    grid = env.mass.reshape(8, 8)
    expect = np.roll(grid, shift=(-2, -5), axis=(0, 1)).reshape(-1)
    assert np.abs(sh.mass - expect).max() == 0.0
    probs = env.step_probs.reshape(8, 8, -1)
    expect_p = np.roll(probs, shift=(-2, -5), axis=(0, 1)).reshape(sh.n_sites, -1)
    assert np.abs(sh.step_probs - expect_p).max() == 0.0


def test_step_distribution_view():
    env = envmod.build_environment(cycles.uniformly_elliptic(), 8, 4)
    dist = envmod.step_distribution(env, (3, -1))
    assert dist.site == (3, 7)
    assert abs(dist.probs.sum() - 1.0) < 1e-14
    f = env.flat_index((3, -1))
    assert np.array_equal(dist.probs, env.step_probs[f])
    rev = envmod.step_distribution_reversed(env, (3, -1))
    assert abs(rev.probs.sum() - 1.0) < 1e-14


def test_side_too_small_rejected():
    with pytest.raises(ModelError):
        envmod.build_environment(cycles.square_triangle(), 2, 0)


def test_zero_mass_site_raises():
    # a lone bernoulli loop can leave sites with no covering weight
    loop = Cycle(points=((0, 0), (0, 0)))
    model = CycleModel(name="lazy", cycles=(loop,), laws=(WeightLaw(kind="bernoulli", p=0.5),))
    env = envmod.build_environment(model, 8, 1)
    assert env.mass.min() == 0.0
    with pytest.raises(ModelError):
        env.step_probs
    with pytest.raises(ModelError):
        envmod.mass_at(env, tuple(int(c) for c in env.site_coords(int(np.argmin(env.mass)))))


def test_validation_certifies_builtin_models():
    for name, probe_n in cycles.DEFAULT_PROBE_N.items():
        if name == "triangle_triangle":
            continue
        env = envmod.build_environment(cycles.BUILTIN_MODELS[name](), 16, 7)
        rep = envmod.validate_assumptions(env, probe_n=probe_n, probe_eps=1e-9)
        assert rep.certified, (name, rep.passed)
        assert rep.eps0 >= 1e-9
        assert rep.witness is None
        lo, hi = rep.declared_mass_bounds
        assert lo - 1e-12 <= rep.mass_min <= rep.mass_max <= hi + 1e-12


def test_validation_flags_blocked_corridors():
    # the complementary-triangle control must fail for some seed in 1..10
    tt = cycles.triangle_triangle()
    reports = []
    for seed in range(1, 11):
        env = envmod.build_environment(tt, 32, seed)
        reports.append(envmod.validate_assumptions(env, probe_n=8, probe_eps=1e-9))
    failed = [r for r in reports if not r.certified]
    assert failed, "all ten seeds certified; corridors should block some"
    for r in failed:
        assert r.eps0 == 0.0
        assert r.witness is not None
        assert r.passed["mass_positive"]  # masses stay fine, only reachability fails


def test_validation_probe_parameter_domain():
    env = envmod.build_environment(cycles.square_triangle(), 8, 0)
    with pytest.raises(ParameterError):
        envmod.validate_assumptions(env, probe_n=0, probe_eps=1e-9)
    with pytest.raises(ParameterError):
        envmod.validate_assumptions(env, probe_n=2, probe_eps=0.0)
