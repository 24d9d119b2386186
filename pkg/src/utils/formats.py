from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.services.thermo_core import PopulationVector, ThermalSystem
from src.utils.validators import format_energy, parse_energy


def _parse_energies(values):
    if not isinstance(values, list) or not values:
        raise ValueError("energies must be a non-empty list")
    return [parse_energy(value) for value in values]


class StateFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    energies: list[float]
    populations: list[float]

    @field_validator("energies", mode="before")
    @classmethod
    def _energies(cls, values):
        return _parse_energies(values)

    @model_validator(mode="after")
    def _matching_sizes(self):
        if len(self.energies) != len(self.populations):
            raise ValueError("energies and populations must have the same length")
        return self

    def system(self) -> ThermalSystem:
        return ThermalSystem(self.energies)

    def state(self) -> PopulationVector:
        return PopulationVector(self.populations)


class MatrixFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    energies: list[float]
    matrix: list[list[float]]

    @field_validator("energies", mode="before")
    @classmethod
    def _energies(cls, values):
        return _parse_energies(values)

    @model_validator(mode="after")
    def _square(self):
        n = len(self.energies)
        if len(self.matrix) != n or any(len(row) != n for row in self.matrix):
            raise ValueError(f"matrix must be {n}x{n} to match the energies")
        return self

    def system(self) -> ThermalSystem:
        return ThermalSystem(self.energies)


class WitnessStepModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    pair: tuple[int, int]
    lambda_: float = Field(alias="lambda", ge=0.0, le=1.0)

    @field_validator("pair")
    @classmethod
    def _distinct(cls, pair):
        if pair[0] == pair[1] or min(pair) < 0:
            raise ValueError("pair must hold two distinct non-negative level indices")
        return pair


def energies_to_json(energies) -> list:
    return [format_energy(float(value)) for value in energies]


def read_json(path: str | Path) -> Any:
    """Raises OSError when the file cannot be read and ValueError when it is not JSON."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc.msg})")


def write_json(path: str | Path, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def load_state_file(path: str | Path) -> StateFile:
    return StateFile.model_validate(read_json(path))
