import json

from app import app
from src.services.gibbs_maps import complete_thermalization, gs3_inf_from_params, matrix_to_json
from src.services.thermo_core import ThermalSystem

SYSTEM = ThermalSystem((0.0, 1.0, 3.0))


def test_identity_is_embeddable(runner, write_json):
    path = write_json("identity.json", {"energies": [0, 1, 3], "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    result = runner.invoke(app, ["check-embeddable", path, "--format", "json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["verdict"] == "EMBEDDABLE"
    assert payload["clause"] == "c"


def test_complete_thermalization_has_a_zero_eigenvalue(runner, write_json):
    path = write_json("thermalize.json", matrix_to_json(complete_thermalization(SYSTEM)))
    result = runner.invoke(app, ["check-embeddable", path, "--format", "json"])
    assert result.exit_code == 1
    payload = json.loads(result.stdout)
    assert payload["verdict"] == "NOT_EMBEDDABLE"
    assert payload["clause"] == "a"


def test_entry_bound_violation(runner, write_json):
    path = write_json("clause_c.json", matrix_to_json(gs3_inf_from_params(0.1, 0.0, 0.5, 1.0)))
    result = runner.invoke(app, ["check-embeddable", path, "--format", "json"])
    assert result.exit_code == 1
    assert json.loads(result.stdout)["clause"] == "c"


def test_text_output(runner, write_json):
    path = write_json("identity.json", {"energies": [0, 1, 3], "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    result = runner.invoke(app, ["check-embeddable", path])
    assert result.exit_code == 0
    assert "verdict:  EMBEDDABLE" in result.stdout


def test_malformed_files(runner, write_json, tmp_path):
    not_square = write_json("bad.json", {"energies": [0, 1, 3], "matrix": [[1, 0], [0, 1]]})
    not_stochastic = write_json("loose.json", {"energies": [0, 1, 3], "matrix": [[0.5, 0, 0], [0, 1, 0], [0, 0, 1]]})
    four_levels = write_json("four.json", matrix_to_json(complete_thermalization(ThermalSystem((0.0, 1.0, 2.0, 3.0)))))
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json", encoding="utf-8")
    for path in (not_square, not_stochastic, four_levels, str(garbage)):
        assert runner.invoke(app, ["check-embeddable", path]).exit_code == 2


def test_missing_file(runner, tmp_path):
    result = runner.invoke(app, ["check-embeddable", str(tmp_path / "nowhere.json")])
    assert result.exit_code == 2
