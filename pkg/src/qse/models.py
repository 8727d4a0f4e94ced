"""Statistical and quantum inputs: priors, encoded states, POMs, estimators.

Priors are grid-sampled densities (units ``1/theta``) normalized against the
grid weights, so arbitrary user priors are first-class. Encoded states are
tables of density matrices, one per grid node. A POM is a set of positive
effects summing to the identity, with opaque string labels; an estimator maps
labels to strictly positive estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NumericalFailureError, ValidationError
from .numerics import Grid, require_density_matrix, require_hermitian

__all__ = [
    "PriorDensity",
    "ParameterizedState",
    "POM",
    "Estimator",
    "PomDiagnostics",
    "jeffreys_prior",
    "flat_prior",
    "log_flat_prior",
    "log_normal_prior",
    "custom_prior",
    "delta_prior",
    "posterior",
    "likelihood_matrix",
    "check_pom",
]

PRIOR_KINDS = ("jeffreys", "log_normal", "flat", "flat_in_log", "custom")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PriorDensity:
    """A probability density sampled on a grid, normalized by quadrature."""

    grid: Grid
    values: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        values = _readonly(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)
        if self.kind not in PRIOR_KINDS:
            raise ValidationError(f"unknown prior kind {self.kind!r}")
        if values.shape != self.grid.nodes.shape:
            raise ValidationError("prior values must match the grid")
        if np.any(values < 0):
            raise ValidationError("prior density must be nonnegative")
        norm = self.grid.integrate(values)
        if abs(norm - 1.0) > DEFAULT_TOLERANCES.prior_norm:
            raise ValidationError(f"prior not normalized: integral = {norm!r}")

    def masses(self) -> np.ndarray:
        """Per-node probability masses ``w_j p(theta_j)``."""
        return self.grid.weights * self.values

    def mean_log(self, theta_u: float = 1.0) -> float:
        """Prior expectation of ``log(theta/theta_u)``."""
        return float(np.dot(self.masses(), np.log(self.grid.nodes / theta_u)))


def _normalized(grid: Grid, raw: np.ndarray, kind: str) -> PriorDensity:
    raw = np.asarray(raw, dtype=float)
    if np.any(raw < 0):
        raise ValidationError("prior density must be nonnegative")
    total = grid.integrate(raw)
    if not total > 0:
        raise ValidationError("prior density integrates to zero")
    return PriorDensity(grid=grid, values=raw / total, kind=kind)


def jeffreys_prior(grid: Grid) -> PriorDensity:
    """Scale-invariant prior ``p(theta) ~ 1/theta``, truncated to the grid."""
    return _normalized(grid, 1.0 / grid.nodes, "jeffreys")


def flat_prior(grid: Grid) -> PriorDensity:
    """Uniform density in ``theta`` on the grid support."""
    return _normalized(grid, np.ones_like(grid.nodes), "flat")


def log_flat_prior(grid: Grid) -> PriorDensity:
    """Uniform density in ``log(theta)``; numerically ``~ 1/theta``."""
    return _normalized(grid, 1.0 / grid.nodes, "flat_in_log")


def log_normal_prior(grid: Grid, mu: float, sigma: float) -> PriorDensity:
    """Log-normal density with location ``mu`` and width ``sigma`` in log space."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    u = np.log(grid.nodes)
    raw = np.exp(-0.5 * ((u - mu) / sigma) ** 2) / grid.nodes
    return _normalized(grid, raw, "log_normal")


def custom_prior(grid: Grid, values: Sequence[float]) -> PriorDensity:
    """Normalize arbitrary nonnegative samples into a prior."""
    return _normalized(grid, np.asarray(values, dtype=float), "custom")


def delta_prior(grid: Grid, theta0: float) -> PriorDensity:
    """All mass on the grid node nearest to ``theta0``."""
    j = int(np.argmin(np.abs(grid.nodes - theta0)))
    raw = np.zeros(grid.size)
    raw[j] = 1.0
    return _normalized(grid, raw, "custom")


@dataclass(frozen=True)
class ParameterizedState:
    """A density matrix per grid node: the encoding ``rho(theta_j)``."""

    grid: Grid
    states: np.ndarray  # shape (n_nodes, dim, dim)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 3 or states.shape[0] != self.grid.size:
            raise ValidationError(
                f"states must have shape (n_nodes, d, d), got {states.shape}"
            )
        checked = np.stack(
            [require_density_matrix(rho, what=f"state at node {j}") for j, rho in enumerate(states)]
        )
        object.__setattr__(self, "states", _readonly(checked))

    @property
    def dim(self) -> int:
        return int(self.states.shape[1])


@dataclass(frozen=True)
class POM:
    """A probability-operator measurement: labelled positive effects summing to 1."""

    labels: tuple[str, ...]
    effects: np.ndarray  # shape (n_outcomes, dim, dim)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        effects = np.asarray(self.effects, dtype=complex)
        if effects.ndim != 3 or effects.shape[1] != effects.shape[2]:
            raise ValidationError(f"effects must have shape (k, d, d), got {effects.shape}")
        if len(labels) != effects.shape[0]:
            raise ValidationError("one label per effect required")
        if len(set(labels)) != len(labels):
            raise ValidationError("outcome labels must be unique")
        checked = []
        tol = DEFAULT_TOLERANCES
        for lbl, eff in zip(labels, effects):
            eff = require_hermitian(eff, tol, f"effect {lbl!r}")
            lo = np.linalg.eigvalsh(eff)[0]
            if lo < -tol.psd * max(1.0, np.abs(eff).max()):
                raise ValidationError(f"effect {lbl!r} is not PSD (min eig {lo:.3e})")
            checked.append(eff)
        stacked = np.stack(checked)
        resid = np.linalg.norm(stacked.sum(axis=0) - np.eye(stacked.shape[1]))
        if resid > tol.completeness:
            raise ValidationError(f"effects do not sum to identity (residual {resid:.3e})")
        object.__setattr__(self, "effects", _readonly(stacked))

    @property
    def dim(self) -> int:
        return int(self.effects.shape[1])

    @property
    def n_outcomes(self) -> int:
        return int(self.effects.shape[0])

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown outcome label {label!r}") from None


@dataclass(frozen=True)
class Estimator:
    """Map from outcome label to a strictly positive estimate."""

    estimates: Mapping[str, float]

    def __post_init__(self):
        fixed = {str(k): float(v) for k, v in dict(self.estimates).items()}
        object.__setattr__(self, "estimates", fixed)
        for k, v in fixed.items():
            if not (v > 0 and np.isfinite(v)):
                raise ValidationError(f"estimate for {k!r} must be finite and positive, got {v}")

    def value(self, label: str) -> float:
        if label not in self.estimates:
            raise ValidationError(f"estimator does not cover outcome {label!r}")
        return self.estimates[label]

    def for_pom(self, pom: POM) -> np.ndarray:
        """Estimates aligned with the POM outcome order."""
        return np.array([self.value(lbl) for lbl in pom.labels])


def likelihood_matrix(state: ParameterizedState, pom: POM) -> np.ndarray:
    """Born-rule outcome probabilities, shape ``(n_outcomes, n_nodes)``.

    Entry ``(x, j)`` is ``Tr[M(x) rho(theta_j)]``; tiny negative values from
    roundoff are clipped to zero.
    """
    if pom.dim != state.dim:
        raise ValidationError(f"dimension mismatch: POM {pom.dim}, state {state.dim}")
    probs = np.einsum("xab,jba->xj", pom.effects, state.states).real
    return np.clip(probs, 0.0, None)


def posterior(
    prior: PriorDensity, state: ParameterizedState, pom: POM, outcome: str
) -> PriorDensity:
    """Bayesian update of the prior on one observed outcome.

    Multiplies the density by the likelihood ``Tr[M(x) rho(theta_j)]`` and
    renormalizes on the grid. Raises :class:`NumericalFailureError` if the
    outcome has zero probability everywhere.
    """
    if not prior.grid.same_as(state.grid):
        raise ValidationError("prior and state are defined on different grids")
    lk = likelihood_matrix(state, pom)[pom.index_of(outcome)]
    raw = prior.values * lk
    total = prior.grid.integrate(raw)
    if not total > 0:
        raise NumericalFailureError(f"outcome {outcome!r} has zero total probability")
    return PriorDensity(grid=prior.grid, values=raw / total, kind="custom")


@dataclass(frozen=True)
class PomDiagnostics:
    """Validity report for a candidate POM."""

    psd_margins: tuple[float, ...]  # min eigenvalue per effect
    completeness_residual: float
    valid: bool
    labels: tuple[str, ...] = field(default_factory=tuple)


def check_pom(
    labels: Sequence[str],
    effects: Sequence[np.ndarray],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> PomDiagnostics:
    """Diagnose a candidate POM without constructing it.

    Unlike the :class:`POM` constructor this never raises on PSD or
    completeness violations; it reports the margins so callers can decide.
    """
    margins = []
    total = None
    for eff in effects:
        eff = require_hermitian(np.asarray(eff, dtype=complex), tol, "effect")
        margins.append(float(np.linalg.eigvalsh(eff)[0]))
        total = eff if total is None else total + eff
    if total is None:
        raise ValidationError("a POM needs at least one effect")
    resid = float(np.linalg.norm(total - np.eye(total.shape[0])))
    valid = resid <= tol.completeness and all(
        m >= -tol.psd * max(1.0, abs(m)) for m in margins
    )
    return PomDiagnostics(
        psd_margins=tuple(margins),
        completeness_residual=resid,
        valid=valid,
        labels=tuple(str(x) for x in labels),
    )
