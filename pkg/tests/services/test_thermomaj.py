import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.services.gibbs_maps import gs3_entries, sample_gs3_batch
from src.services.thermo_core import INFINITY, PhotoisomerInstance, PopulationVector, ThermalSystem, gibbs_state
from src.services.thermomaj import (
    ThermoCurve,
    build_curve,
    curve_dominates,
    curve_eval,
    curve_from_json,
    curve_to_json,
    thermomajorizes,
)

SYSTEM = ThermalSystem((0.0, 1.0, 3.0))


def test_gibbs_curve_is_the_diagonal():
    curve = build_curve(gibbs_state(SYSTEM), SYSTEM)
    assert_allclose(curve.ys, curve.xs / SYSTEM.partition, atol=1e-12)


def test_curve_of_ground_state_with_infinite_level():
    system = ThermalSystem((0.0, 1.0, INFINITY))
    curve = build_curve(PopulationVector((1.0, 0.0, 0.0)), system)
    assert_allclose(curve.xs, [0.0, 1.0, 1.0 + math.exp(-1.0), 1.0 + math.exp(-1.0)])
    assert_allclose(curve.ys, [0.0, 1.0, 1.0, 1.0])
    assert curve_eval(curve, 0.0) == 0.0
    assert curve_eval(curve, 0.5) == pytest.approx(0.5)


def test_vertical_jump_returns_its_top():
    system = ThermalSystem((0.0, 1.0, INFINITY))
    curve = build_curve(PopulationVector((0.5, 0.0, 0.5)), system)
    assert curve_eval(curve, 0.0) == pytest.approx(0.5)
    assert curve_eval(curve, 0.5) == pytest.approx(0.75)
    assert curve_eval(curve, curve.total_weight) == pytest.approx(1.0)


def test_curve_eval_out_of_range():
    curve = build_curve(gibbs_state(SYSTEM), SYSTEM)
    with pytest.raises(ValueError):
        curve_eval(curve, -0.1)
    with pytest.raises(ValueError):
        curve_eval(curve, SYSTEM.partition + 0.1)


def test_slopes_are_non_increasing():
    rng = np.random.default_rng(7)
    for probs in rng.dirichlet(np.ones(3), size=50):
        slopes = build_curve(PopulationVector(probs), SYSTEM).slopes()
        assert np.all(np.diff(slopes) <= 1e-12)


def test_every_state_thermomajorizes_gibbs():
    rng = np.random.default_rng(11)
    gibbs = gibbs_state(SYSTEM)
    for probs in rng.dirichlet(np.ones(3), size=50):
        p = PopulationVector(probs)
        assert thermomajorizes(p, gibbs, SYSTEM)
        if p.l1_distance(gibbs) > 1e-6:
            assert not thermomajorizes(gibbs, p, SYSTEM)


def test_thermomajorization_is_transitive_along_gibbs_maps():
    instance = PhotoisomerInstance(delta=1.0, w=3.0, q=0.5)
    rng = np.random.default_rng(23)
    params = sample_gs3_batch(rng, instance, 100)
    matrices = gs3_entries(params[:, 0], params[:, 1], params[:, 2], params[:, 3], instance.delta, instance.w)
    for first, second, probs in zip(matrices[:50], matrices[50:], rng.dirichlet(np.ones(3), size=50)):
        p = PopulationVector(probs)
        once = PopulationVector(first @ probs)
        twice = PopulationVector(second @ first @ probs)
        assert thermomajorizes(p, once, SYSTEM)
        assert thermomajorizes(once, twice, SYSTEM)
        assert thermomajorizes(p, twice, SYSTEM)


def test_mutual_thermomajorization_is_reported_both_ways():
    p = PopulationVector((0.2, 0.3, 0.5))
    assert thermomajorizes(p, p, SYSTEM)


def test_incomparable_pair():
    uniform = ThermalSystem((0.0, 0.0, 0.0))
    p = PopulationVector((0.6, 0.2, 0.2))
    r = PopulationVector((0.5, 0.5, 0.0))
    assert not thermomajorizes(p, r, uniform)
    assert not thermomajorizes(r, p, uniform)


def test_dominance_needs_equal_partition_functions():
    a = build_curve(PopulationVector((1.0, 0.0)), ThermalSystem((0.0, 0.0)))
    b = build_curve(PopulationVector((1.0, 0.0)), ThermalSystem((0.0, 1.0)))
    with pytest.raises(ValueError):
        curve_dominates(a, b)


def test_curve_json_contract():
    curve = build_curve(PopulationVector((0.5, 0.0, 0.5)), SYSTEM)
    payload = curve_to_json(curve)
    assert set(payload) == {"elbows"}
    assert payload["elbows"][0] == [0.0, 0.0]
    restored = curve_from_json(payload)
    assert_allclose(restored.xs, curve.xs)
    with pytest.raises(ValueError):
        curve_from_json({"elbows": [[0.0, 0.0], [1.0, 0.5]]})


def test_malformed_curves_are_rejected():
    with pytest.raises(ValueError):
        ThermoCurve([0.0, 1.0], [0.1, 1.0])
    with pytest.raises(ValueError):
        ThermoCurve([0.0, 2.0, 1.0], [0.0, 0.5, 1.0])
