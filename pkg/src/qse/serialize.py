"""File formats for matrices, priors, states, POMs, and Hamiltonians.

All floats are written with shortest round-trip precision (exact IEEE-754
doubles on reload). The shared matrix format is a JSON object::

    {"dim": d, "data": [[re, im], ...]}   # d*d entries, row-major

Priors are CSV with header ``theta,weight,density``; probe Hamiltonians are
CSV with header ``energy``. A state table is JSON ``{"grid": [[theta,
weight], ...], "states": [matrix, ...]}``; a POM is JSON ``{"labels": [...],
"effects": [matrix, ...]}``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ValidationError
from .models import POM, ParameterizedState, PriorDensity
from .numerics import Grid
from .thermometry import HamiltonianSpec

__all__ = [
    "matrix_to_obj",
    "matrix_from_obj",
    "write_json",
    "read_json",
    "write_prior_csv",
    "read_prior_csv",
    "write_state_json",
    "read_state_json",
    "write_pom_json",
    "read_pom_json",
    "write_hamiltonian_csv",
    "read_hamiltonian_csv",
]


def matrix_to_obj(a: np.ndarray) -> dict[str, Any]:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {a.shape}")
    flat = a.reshape(-1)
    return {"dim": int(a.shape[0]), "data": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_obj(obj: dict[str, Any]) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from None
    if len(data) != dim * dim:
        raise ValidationError(f"matrix data has {len(data)} entries, expected {dim * dim}")
    flat = np.array([complex(re, im) for re, im in data])
    return flat.reshape(dim, dim)


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def write_prior_csv(path: str | Path, prior: PriorDensity) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "weight", "density"])
        for t, w, p in zip(prior.grid.nodes, prior.grid.weights, prior.values):
            writer.writerow([repr(float(t)), repr(float(w)), repr(float(p))])


def read_prior_csv(path: str | Path) -> PriorDensity:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["theta", "weight", "density"]:
            raise ValidationError(
                f"{path}: expected header theta,weight,density, got {reader.fieldnames}"
            )
        rows = [(float(r["theta"]), float(r["weight"]), float(r["density"])) for r in reader]
    if len(rows) < 2:
        raise ValidationError(f"{path}: a prior needs at least 2 rows")
    nodes, weights, density = map(np.array, zip(*rows))
    return PriorDensity(grid=Grid(nodes=nodes, weights=weights), values=density, kind="custom")


def _grid_to_obj(grid: Grid) -> list[list[float]]:
    return [[float(t), float(w)] for t, w in zip(grid.nodes, grid.weights)]


def _grid_from_obj(obj: Any) -> Grid:
    try:
        nodes = np.array([float(t) for t, _ in obj])
        weights = np.array([float(w) for _, w in obj])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed grid: {exc}") from None
    return Grid(nodes=nodes, weights=weights)


def write_state_json(path: str | Path, state: ParameterizedState) -> None:
    write_json(
        path,
        {
            "grid": _grid_to_obj(state.grid),
            "states": [matrix_to_obj(rho) for rho in state.states],
        },
    )


def read_state_json(path: str | Path) -> ParameterizedState:
    obj = read_json(path)
    if not isinstance(obj, dict) or "grid" not in obj or "states" not in obj:
        raise ValidationError(f"{path}: expected keys 'grid' and 'states'")
    grid = _grid_from_obj(obj["grid"])
    states = np.stack([matrix_from_obj(m) for m in obj["states"]])
    return ParameterizedState(grid=grid, states=states)


def write_pom_json(path: str | Path, pom: POM) -> None:
    write_json(
        path,
        {
            "labels": list(pom.labels),
            "effects": [matrix_to_obj(e) for e in pom.effects],
        },
    )


def read_pom_json(path: str | Path) -> POM:
    obj = read_json(path)
    if not isinstance(obj, dict) or "labels" not in obj or "effects" not in obj:
        raise ValidationError(f"{path}: expected keys 'labels' and 'effects'")
    effects = np.stack([matrix_from_obj(m) for m in obj["effects"]])
    return POM(labels=tuple(obj["labels"]), effects=effects)


def write_hamiltonian_csv(path: str | Path, h: HamiltonianSpec) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["energy"])
        for e in h.energies:
            writer.writerow([repr(float(e))])


def read_hamiltonian_csv(path: str | Path, k_B: float = 1.0) -> HamiltonianSpec:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["energy"]:
            raise ValidationError(f"{path}: expected header 'energy', got {reader.fieldnames}")
        energies = [float(r["energy"]) for r in reader]
    return HamiltonianSpec(energies=tuple(energies), k_B=k_B)
