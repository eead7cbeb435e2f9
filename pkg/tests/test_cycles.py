"""Cycle and model structure: validation, reversal, declared bounds."""

import numpy as np
import pytest

from rwre import cycles
from rwre.cycles import Cycle, CycleModel, WeightLaw
from rwre.errors import ModelError


def _cyc(*pts):
    return Cycle(points=tuple(tuple(p) for p in pts))


def test_cycle_rejects_malformed_paths():
    with pytest.raises(ModelError):
        _cyc((0, 0))  # no closing point
    with pytest.raises(ModelError):
        _cyc((0, 0), (1, 0), (1, 1))  # does not close
    with pytest.raises(ModelError):
        _cyc((0, 0), (1, 0), (0, 0), (1, 1), (0, 0))  # revisits before closing
    with pytest.raises(ModelError):
        _cyc((0, 0), (1, 0, 0), (0, 0))  # mixed dimensions


def test_cycle_geometry():
    tri = _cyc((0, 0), (1, 0), (1, 1), (0, 0))
    assert tri.length == 3
    assert tri.dimension == 2
    assert tri.displacements() == [(1, 0), (0, 1), (-1, -1)]
    assert tri.diameter_inf() == 1
    loop = _cyc((2, 5), (2, 5))
    assert loop.length == 1
    assert loop.displacements() == [(0, 0)]
    assert loop.diameter_inf() == 0


def test_cycle_reversal_is_involution_and_negates_steps():
    tri = _cyc((0, 0), (1, 0), (1, 1), (0, 0))
    rev = tri.reversed_()
    assert rev.points == tuple(reversed(tri.points))
    assert rev.reversed_() == tri
    fwd = tri.displacements()
    back = rev.displacements()
    assert back == [tuple(-c for c in z) for z in reversed(fwd)]


def test_anchored_norm_depends_on_anchor():
    square = _cyc((0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
    # |.|^2 over points after the start: 1 + 2 + 1 + 0
    assert square.anchored_norm_sq_sum() == 4
    shifted = _cyc((1, 1), (2, 1), (2, 2), (1, 2), (1, 1))
    assert shifted.anchored_norm_sq_sum() == 5 + 8 + 5 + 2


def test_weight_law_bounds_and_sampling():
    u = np.linspace(0.0, 0.999, 64)
    const = WeightLaw(kind="constant", value=2.5)
    assert const.bounds() == (2.5, 2.5)
    assert np.all(const.sample(u) == 2.5)
    unif = WeightLaw(kind="uniform", lo=0.5, hi=1.5)
    w = unif.sample(u)
    assert w.min() >= 0.5 and w.max() < 1.5
    assert np.allclose(w, 0.5 + u)
    bern = WeightLaw(kind="bernoulli", p=0.25)
    assert set(np.unique(bern.sample(u))) <= {0.0, 1.0}
    assert np.array_equal(bern.sample(u), (u < 0.25).astype(float))


def test_weight_law_rejects_bad_parameters():
    with pytest.raises(ModelError):
        WeightLaw(kind="gaussian")
    with pytest.raises(ModelError):
        WeightLaw(kind="uniform", lo=-0.1, hi=1.0)
    with pytest.raises(ModelError):
        WeightLaw(kind="uniform", lo=1.0, hi=0.5)
    with pytest.raises(ModelError):
        WeightLaw(kind="bernoulli", p=1.5)


def test_model_structure_validation():
    tri = _cyc((0, 0), (1, 0), (1, 1), (0, 0))
    law = WeightLaw(kind="bernoulli", p=0.5)
    with pytest.raises(ModelError):
        CycleModel(name="m", cycles=(), laws=())
    with pytest.raises(ModelError):
        CycleModel(name="m", cycles=(tri,), laws=(law, law))
    with pytest.raises(ModelError):
        CycleModel(name="m", cycles=(tri, _cyc((0,), (0,))), laws=(law, law))


def test_coupling_validation():
    tri = _cyc((0, 0), (1, 0), (1, 1), (0, 0))
    sq = _cyc((0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
    bern = WeightLaw(kind="bernoulli", p=0.5)
    unif = WeightLaw(kind="uniform", lo=0.1, hi=1.0)
    with pytest.raises(ModelError):
        CycleModel(name="m", cycles=(tri, sq), laws=(bern, bern), couplings=((0, 2),))
    with pytest.raises(ModelError):
        CycleModel(name="m", cycles=(tri, sq), laws=(bern, bern), couplings=((0, 0),))
    with pytest.raises(ModelError):
        CycleModel(name="m", cycles=(tri, sq), laws=(bern, unif), couplings=((0, 1),))
    with pytest.raises(ModelError):
        CycleModel(
            name="m",
            cycles=(tri, sq),
            laws=(bern, WeightLaw(kind="bernoulli", p=0.3)),
            couplings=((0, 1),),
        )
    ok = CycleModel(name="m", cycles=(tri, sq), laws=(bern, bern), couplings=((0, 1),))
    assert ok.coupling_partner(0) == 1
    assert ok.coupling_partner(1) == 0


def test_range_set_is_lexicographic_with_sup_norm():
    model = cycles.square_triangle()
    steps, b = model.range_set()
    assert b == 1
    lex = sorted(map(tuple, steps.tolist()))
    assert [tuple(z) for z in steps.tolist()] == lex
    assert (-1, -1) in lex and (1, 0) in lex and (0, 1) in lex


def test_declared_mass_bounds():
    # independent cycles: each contributes (length*lo, length*hi) everywhere
    rc = cycles.random_conductance(dimension=2, lo=1.0, hi=1.0)
    assert rc.mass_bounds() == (4.0, 4.0)
    ue = cycles.uniformly_elliptic(lo=0.5, hi=1.5)
    assert ue.mass_bounds() == (0.5 * (2 + 2 + 3), 1.5 * (2 + 2 + 3))
    # coupled pair: between intersection and union of the two point sets
    st = cycles.square_triangle()
    assert st.mass_bounds() == (3.0, 4.0)
    tt = cycles.triangle_triangle()
    assert tt.mass_bounds() == (2.0, 4.0)


def test_model_reversal_keeps_laws_and_couplings():
    st = cycles.square_triangle()
    rev = st.reversed_()
    assert rev.laws == st.laws
    assert rev.couplings == st.couplings
    assert rev.cycles[0].points == tuple(reversed(st.cycles[0].points))
    steps_fwd, _ = st.range_set()
    steps_rev, _ = rev.range_set()
    assert np.array_equal(steps_rev, np.array(sorted(map(tuple, (-steps_fwd).tolist()))))


def test_builtin_registry_and_probe_depths():
    assert set(cycles.BUILTIN_MODELS) == {
        "random_conductance",
        "uniformly_elliptic",
        "square_triangle",
        "triangle_triangle",
    }
    for name, build in cycles.BUILTIN_MODELS.items():
        model = build()
        assert model.name == name
        assert name in cycles.DEFAULT_PROBE_N
