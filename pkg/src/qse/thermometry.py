"""Equilibrium thermometry: thermal encodings and their optimal measurement.

For a probe Hamiltonian with levels ``e`` and Boltzmann constant ``k_B``, the
probe state at temperature ``theta`` is the Gibbs diagonal
``exp(-e/(k_B theta)) / Z(theta)``. The optimal-measurement operator for this
family is diagonal in the energy basis with eigenvalues ``R[e,1]/R[e,0]``,
where the R coefficients are prior-averaged populations with log weights, so
measuring energy is globally optimal. :func:`thermometry_optimum` runs the
generic pipeline and reports how well the computed solution honours both
facts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ValidationError
from .estimation import (
    MinimumReport,
    OptimalStrategy,
    minimum_error,
    operator_moments,
    optimal_strategy,
)
from .models import ParameterizedState, PriorDensity
from .numerics import Grid

__all__ = [
    "HamiltonianSpec",
    "RTable",
    "ThermometryDiagnostics",
    "boltzmann_populations",
    "thermal_state_family",
    "r_coefficients",
    "thermometry_optimum",
]


@dataclass(frozen=True)
class HamiltonianSpec:
    """Probe energy levels (nondecreasing) and the Boltzmann constant."""

    energies: tuple[float, ...]
    k_B: float = 1.0

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        object.__setattr__(self, "energies", energies)
        if len(energies) < 2:
            raise ValidationError("a probe needs at least 2 energy levels")
        if not np.isfinite(energies).all():
            raise ValidationError("energies must be finite")
        if any(b < a for a, b in zip(energies, energies[1:])):
            raise ValidationError("energies must be nondecreasing")
        if not self.k_B > 0:
            raise ValidationError("k_B must be positive")

    @property
    def dim(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class RTable:
    """Prior-averaged level populations ``R[e,k]`` for ``k`` in {0, 1}."""

    energies: tuple[float, ...]
    r0: np.ndarray
    r1: np.ndarray

    def __post_init__(self):
        r0 = np.asarray(self.r0, dtype=float)
        r1 = np.asarray(self.r1, dtype=float)
        object.__setattr__(self, "r0", r0)
        object.__setattr__(self, "r1", r1)
        if abs(r0.sum() - 1.0) > 1e-8:
            raise ValidationError(f"R[.,0] must sum to 1, got {r0.sum()!r}")
        if not np.all(r0 > 0):
            raise ValidationError("every R[e,0] must be positive")

    def s_values(self) -> np.ndarray:
        """Per-level log-estimates ``R[e,1]/R[e,0]``."""
        return self.r1 / self.r0


@dataclass(frozen=True)
class ThermometryDiagnostics:
    """How closely the generic solution matches the energy-diagonal form."""

    max_offdiagonal: float
    s_deviation: np.ndarray  # |diag(S)_e - R[e,1]/R[e,0]| per level


def boltzmann_populations(h: HamiltonianSpec, theta: float) -> np.ndarray:
    """Gibbs populations at temperature ``theta``.

    Energies are shifted by the ground level before exponentiating so the
    weights never overflow at small ``theta``; underflow of high levels is
    harmless.
    """
    if not theta > 0:
        raise ValidationError("temperature must be positive")
    e = np.asarray(h.energies)
    weights = np.exp(-(e - e.min()) / (h.k_B * theta))
    return weights / weights.sum()


def thermal_state_family(h: HamiltonianSpec, grid: Grid) -> ParameterizedState:
    """Diagonal Gibbs state at every grid node."""
    states = np.zeros((grid.size, h.dim, h.dim), dtype=complex)
    for j, theta in enumerate(grid.nodes):
        np.fill_diagonal(states[j], boltzmann_populations(h, theta))
    return ParameterizedState(grid=grid, states=states)


def r_coefficients(
    h: HamiltonianSpec, prior: PriorDensity, theta_u: float = 1.0
) -> RTable:
    """Prior averages of the populations, plain and log-weighted."""
    if not theta_u > 0:
        raise ValidationError("theta_u must be positive")
    pops = np.stack([boltzmann_populations(h, t) for t in prior.grid.nodes])  # (n, d)
    masses = prior.masses()
    logs = np.log(prior.grid.nodes / theta_u)
    r0 = masses @ pops
    r1 = (masses * logs) @ pops
    return RTable(energies=h.energies, r0=r0, r1=r1)


def thermometry_optimum(
    h: HamiltonianSpec,
    prior: PriorDensity,
    theta_u: float = 1.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[OptimalStrategy, MinimumReport, ThermometryDiagnostics]:
    """Generic optimal-strategy pipeline on the thermal family, with checks.

    The diagnostics report the largest off-diagonal magnitude of the solution
    operator in the energy basis (should vanish) and the per-level deviation
    of its diagonal from ``R[e,1]/R[e,0]``.
    """
    family = thermal_state_family(h, prior.grid)
    m = operator_moments(prior, family, theta_u, tol)
    strat = optimal_strategy(m, tol)
    report = minimum_error(m, strat, tol)
    rt = r_coefficients(h, prior, theta_u)
    off = strat.S - np.diag(np.diag(strat.S))
    diag = ThermometryDiagnostics(
        max_offdiagonal=float(np.abs(off).max()),
        s_deviation=np.abs(np.diag(strat.S).real - rt.s_values()),
    )
    return strat, report, diag
