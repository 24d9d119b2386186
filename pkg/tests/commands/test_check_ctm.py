import json

import pytest

from app import app
from src.services.thermo_core import PhotoisomerInstance, ThermalSystem, gibbs_state
from src.services.yield_bounds import gamma_markov, gamma_star

INSTANCE = PhotoisomerInstance(delta=1.0, w=3.0, q=0.5)
ENERGIES = [0.0, 1.0, 3.0]


def _state(populations):
    return {"energies": ENERGIES, "populations": list(populations)}


@pytest.fixture
def initial(write_json):
    return write_json("initial.json", _state([0.5, 0.0, 0.5]))


def test_same_state_needs_no_steps(runner, initial):
    result = runner.invoke(app, ["check-ctm", initial, initial])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["reachable"] is True
    assert payload["witness"] == []
    assert payload["l1_distance"] == pytest.approx(0.0)


def test_gibbs_target_with_witness_file(runner, initial, write_json, tmp_path):
    target = write_json("gibbs.json", _state(gibbs_state(ThermalSystem(ENERGIES)).probs.tolist()))
    witness_path = tmp_path / "witness.json"
    result = runner.invoke(app, ["check-ctm", initial, target, "--witness-out", str(witness_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["mode"] == "match"
    assert payload["l1_distance"] <= 1e-3
    written = json.loads(witness_path.read_text(encoding="utf-8"))
    assert written == payload["witness"]
    assert all(set(step) == {"pair", "lambda"} for step in written)


def test_yield_target_near_markovian_optimum(runner, initial, write_json):
    near = gamma_markov(INSTANCE) - 0.01
    target = write_json("near.json", _state([1.0 - near, near, 0.0]))
    result = runner.invoke(app, ["check-ctm", initial, target, "--yield-level", "1"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.stdout)["achieved_state"][1] >= near


def test_thermal_optimum_is_not_markovian(runner, initial, write_json):
    best = gamma_star(INSTANCE)
    target = write_json("best.json", _state([1.0 - best, best, 0.0]))
    result = runner.invoke(app, ["check-ctm", initial, target, "--yield-level", "1", "--max-steps", "3"])
    assert result.exit_code == 1
    assert json.loads(result.stdout)["reachable"] is False
    assert "not found at resolution" in result.stderr


def test_mismatched_energies(runner, initial, write_json):
    other = write_json("other.json", {"energies": [0, 2, 3], "populations": [1, 0, 0]})
    assert runner.invoke(app, ["check-ctm", initial, other]).exit_code == 2


def test_bad_yield_level(runner, initial):
    assert runner.invoke(app, ["check-ctm", initial, initial, "--yield-level", "5"]).exit_code == 2
