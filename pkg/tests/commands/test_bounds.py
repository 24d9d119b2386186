import json

import pytest

from app import app


def test_bounds_json(runner):
    result = runner.invoke(app, ["bounds", "--delta", "1", "--w", "3", "--q", "0.5", "--format", "json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["gamma_star"] == pytest.approx(0.659046, abs=1e-6)
    assert payload["gamma_markov"] == pytest.approx(0.558840, abs=1e-6)
    assert payload["gamma_th"] == pytest.approx(0.259497, abs=1e-6)
    assert payload["gamma_embed"] is None
    assert payload["w"] == 3.0


def test_bounds_full_excitation_at_infinite_w(runner):
    result = runner.invoke(
        app, ["bounds", "--delta", "1", "--w", "inf", "--q", "1", "--format", "json", "--embed-grid", "50"]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["gamma_star"] == pytest.approx(1.0)
    assert payload["w"] == "inf"
    assert payload["gamma_embed"] == pytest.approx(1.0, abs=1e-5)


def test_bounds_text_table(runner):
    result = runner.invoke(app, ["bounds", "--delta", "1", "--w", "3", "--q", "0.5"])
    assert result.exit_code == 0, result.output
    assert "gamma_star" in result.stdout
    assert "0.659046" in result.stdout
    assert "unavailable (finite W)" in result.stdout


@pytest.mark.parametrize(
    "args",
    [
        ["--delta", "1", "--w", "3", "--q", "1.5"],
        ["--delta", "2", "--w", "1", "--q", "0.5"],
        ["--delta", "-1", "--w", "3", "--q", "0.5"],
        ["--delta", "1", "--w", "hot", "--q", "0.5"],
    ],
)
def test_bounds_rejects_bad_instances(runner, args):
    result = runner.invoke(app, ["bounds", *args])
    assert result.exit_code == 2


def test_rejected_instance_is_logged(runner, caplog):
    result = runner.invoke(app, ["bounds", "--delta", "2", "--w", "1", "--q", "0.5"])
    assert result.exit_code == 2
    assert "Rejected bounds instance" in caplog.text
