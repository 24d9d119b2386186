import math

import numpy as np
import pytest

from src.services.gibbs_maps import (
    GS3Params,
    GS4Params,
    Verdict,
    embeddability_check,
    gs3_from_params,
    sample_gs3_batch,
)
from src.services.thermo_core import INFINITY, PhotoisomerInstance
from src.services.yield_bounds import (
    embeddable_yield_witness,
    f_k,
    gamma_embed_optimize,
    gamma_markov,
    gamma_markov_paths,
    gamma_star,
    gamma_star_bruteforce,
    gamma_star_gs4_bound,
    gamma_th,
    optimal_gs3_params,
    q_tilde,
    report,
    yield_of_gs3,
    yield_of_gs4,
)

INSTANCE = PhotoisomerInstance(delta=1.0, w=3.0, q=0.5)


def test_q_tilde():
    assert q_tilde(0.0) == pytest.approx(0.5)
    assert q_tilde(INFINITY) == 0.0
    assert q_tilde(3.0) == pytest.approx(0.047426, abs=1e-6)


def test_gamma_th():
    assert gamma_th(PhotoisomerInstance(delta=0.0, w=INFINITY, q=0.0)) == pytest.approx(0.5)
    assert gamma_th(PhotoisomerInstance(delta=0.0, w=0.0, q=0.0)) == pytest.approx(1.0 / 3.0)
    assert gamma_th(INSTANCE) == pytest.approx(0.259497, abs=1e-6)


def test_yield_of_gs3_examples():
    assert yield_of_gs3(GS3Params(g1=0.0, g2=0.0, g3=1.0, g4=0.0), INSTANCE) == pytest.approx(0.0)
    ground = PhotoisomerInstance(delta=1.0, w=3.0, q=0.0)
    assert yield_of_gs3(GS3Params(g1=1.0, g2=0.0, g3=0.0, g4=0.0), ground) == pytest.approx(math.exp(-1.0))
    assert yield_of_gs3(GS3Params(g1=1.0, g2=0.0, g3=0.0, g4=1.0), INSTANCE) == pytest.approx(0.659046, abs=1e-6)


def test_yield_of_gs3_equals_matrix_action():
    rng = np.random.default_rng(2)

    for g1, g2, g3, g4 in sample_gs3_batch(rng, INSTANCE, 100):
        params = GS3Params(g1=g1, g2=g2, g3=g3, g4=g4)
        action = gs3_from_params(params, INSTANCE).apply(INSTANCE.initial_state().probs)[1]
        assert yield_of_gs3(params, INSTANCE) == pytest.approx(action, abs=1e-12)


def test_gamma_star_examples():
    assert gamma_star(PhotoisomerInstance(delta=1.0, w=INFINITY, q=1.0)) == pytest.approx(1.0)
    assert gamma_star(PhotoisomerInstance(delta=2.0, w=2.0, q=0.6)) == pytest.approx(0.6)
    assert gamma_star(INSTANCE) == pytest.approx(0.659046, abs=1e-6)
    assert yield_of_gs3(optimal_gs3_params(INSTANCE), INSTANCE) == pytest.approx(gamma_star(INSTANCE), abs=1e-12)


@pytest.mark.parametrize(
    "delta, w, q",
    [(1.0, 3.0, 0.5), (0.25, 0.25, 0.9), (2.0, INFINITY, 0.1), (4.0, 5.0, 0.0), (0.5, 3.5, 1.0)],
)
def test_bruteforce_agrees_with_closed_form(delta, w, q):
    instance = PhotoisomerInstance(delta=delta, w=w, q=q)
    brute = gamma_star_bruteforce(instance, grid_n=200)
    assert brute <= gamma_star(instance) + 1e-9
    assert brute == pytest.approx(gamma_star(instance), abs=5e-3)


def test_bruteforce_with_no_excitation():
    instance = PhotoisomerInstance(delta=1.0, w=3.0, q=0.0)
    assert gamma_star_bruteforce(instance, grid_n=50) == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_gamma_markov_examples():
    assert gamma_markov(INSTANCE) == pytest.approx(0.558840, abs=1e-6)
    ground = PhotoisomerInstance(delta=1.0, w=INFINITY, q=0.0)
    assert gamma_markov(ground) == pytest.approx(0.268941, abs=1e-6)
    assert gamma_star(INSTANCE) - gamma_markov(INSTANCE) == pytest.approx(0.100, abs=5e-3)


def test_gamma_markov_with_underflowing_weights():
    assert gamma_markov(PhotoisomerInstance(delta=800.0, w=800.0, q=0.5)) == pytest.approx(0.25)
    assert gamma_markov(PhotoisomerInstance(delta=800.0, w=900.0, q=0.5)) == pytest.approx(0.5)
    assert gamma_markov(PhotoisomerInstance(delta=800.0, w=INFINITY, q=0.0)) == 0.0
    for w in (1.5, 4.0, INFINITY):
        instance = PhotoisomerInstance(delta=1.0, w=w, q=0.3)
        ed, ew = math.exp(-1.0), math.exp(-w)
        assert gamma_markov(instance) == pytest.approx((0.3 + 0.7 * ed / (1.0 + ed)) * ed / (ed + ew), abs=1e-15)


def test_branches_are_continuous_at_threshold():
    for w in (1.0, 3.0, 6.0):
        threshold = q_tilde(w)
        at = PhotoisomerInstance(delta=0.5, w=w, q=threshold)
        below = PhotoisomerInstance(delta=0.5, w=w, q=threshold - 1e-12)
        assert gamma_star(at) == pytest.approx(gamma_star(below), abs=1e-9)
        assert gamma_markov(at) == pytest.approx(gamma_markov(below), abs=1e-9)


def test_ordering_paths_reproduce_gamma_markov():
    for delta in np.linspace(0.2, 3.0, 10):
        for offset in np.linspace(0.0, 4.0, 10):
            instance = PhotoisomerInstance(delta=float(delta), w=float(delta + offset), q=0.5)
            path_a, path_b = gamma_markov_paths(instance)
            assert path_b >= path_a - 1e-12
            assert max(path_a, path_b) == pytest.approx(gamma_markov(instance), abs=1e-12)


def test_path_b_with_full_excitation():
    instance = PhotoisomerInstance(delta=1.0, w=2.0, q=1.0)
    _, path_b = gamma_markov_paths(instance)
    ed, ew = math.exp(-1.0), math.exp(-2.0)
    assert path_b == pytest.approx(ed / (ed + ew), abs=1e-12)


def test_f_k():
    assert f_k(0.0, 0.5) == 0.0
    rng = np.random.default_rng(4)
    for a, b in rng.uniform(0.0, 0.99, size=(20, 2)):
        assert f_k(a, b) == pytest.approx(f_k(b, a), abs=1e-12)
    assert f_k(0.3, 0.3) == pytest.approx(f_k(0.3, 0.3 + 1e-7), abs=1e-6)
    with pytest.raises(ValueError):
        f_k(1.0, 0.5)


def test_embeddable_yield_limits():
    assert gamma_embed_optimize(1.0, 0.7) == pytest.approx(0.7, abs=3e-2)
    assert gamma_embed_optimize(1.0, 0.7) >= 0.7 - 1e-5
    assert gamma_embed_optimize(1.0, 0.0) == pytest.approx(0.268941, abs=1e-5)


def test_embeddable_yield_is_below_markovian():
    for delta in (0.2, 1.0, 3.0):
        for q in (0.0, 0.3, 0.8, 1.0):
            embed = gamma_embed_optimize(delta, q, grid_n=150)
            instance = PhotoisomerInstance(delta=delta, w=INFINITY, q=q)
            assert embed <= gamma_markov(instance) + 1e-6
            assert gamma_th(instance) <= embed + 1e-6


def test_embeddable_witness_is_embeddable():
    witness = embeddable_yield_witness(math.log(1.5), 0.4)
    assert witness.value >= 0.4215
    assert witness.matrix.apply([0.6, 0.0, 0.4])[1] == pytest.approx(witness.value, abs=1e-9)
    assert embeddability_check(witness.matrix, witness.matrix.system).verdict is Verdict.EMBEDDABLE


def test_four_levels_do_not_help():
    for w_prime in (3.0, 4.0):
        bound = gamma_star_gs4_bound(INSTANCE, w_prime, samples=2000, seed=9)
        assert bound <= gamma_star(INSTANCE) + 1e-9
        assert bound == pytest.approx(gamma_star(INSTANCE), abs=1e-12)


def test_fourth_level_leak_lowers_yield():
    base = dict(g1=1.0, g2=0.0, g3=0.0, g4=0.5, g5=0.0, g7=0.0, g8=0.0, g9=0.0)
    without = yield_of_gs4(GS4Params(g6=0.0, **base), INSTANCE, 4.0)
    with_leak = yield_of_gs4(GS4Params(g6=0.2, **base), INSTANCE, 4.0)
    assert with_leak < without


def test_report():
    full = report(PhotoisomerInstance(delta=1.0, w=INFINITY, q=1.0), embed_grid=100)
    assert full.gamma_star == pytest.approx(1.0)
    assert full.gamma_embed is not None

    finite = report(INSTANCE)
    assert finite.gamma_embed is None
    assert finite.gap_markov_embed is None
    assert (finite.gamma_star, finite.gamma_markov, finite.gamma_th) == pytest.approx((0.659046, 0.558840, 0.259497), abs=1e-6)
    assert finite.to_dict()["w"] == 3.0
    assert full.to_dict()["w"] == "inf"
    for result in (full, finite):
        assert result.gamma_th <= result.gamma_markov <= result.gamma_star + 1e-9
