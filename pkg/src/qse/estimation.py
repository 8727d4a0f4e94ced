"""Optimal strategies and exact precision limits for scale parameters.

The pipeline is: average the encoded states against the prior with
log-weights to get the operator moments ``rho_k``; solve the Lyapunov
equation ``S rho0 + rho0 S = 2 rho1``; measure in the eigenbasis of ``S`` and
report ``theta_u * exp(s)`` for eigenvalue ``s``. The attainable minimum of
the mean squared logarithmic error is

    eps_min = integral p(theta) log^2(theta/theta_u) dtheta - Tr(rho0 S^2),

independent of the reference scale ``theta_u``. A certificate operator
``Upsilon = rho2 - S rho0 S`` verifies global optimality: ``Tr(Upsilon)``
reproduces the minimum and ``W[estimate] - Upsilon`` stays positive
semidefinite at every optimal estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NumericalFailureError, ValidationError
from .models import POM, Estimator, ParameterizedState, PriorDensity, likelihood_matrix
from .numerics import eig_hermitian, require_hermitian, solve_lyapunov

__all__ = [
    "OperatorMoments",
    "OptimalStrategy",
    "MinimumReport",
    "HHCertificate",
    "operator_moments",
    "optimal_strategy",
    "minimum_error",
    "evaluate_mle",
    "jensen_gap",
    "hh_certificate",
    "scale_observable",
    "variational_objective",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OperatorMoments:
    """Log-weighted averages ``rho_k = sum_j w_j p_j rho_j log^k(theta_j/theta_u)``."""

    rho0: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    theta_u: float

    def __post_init__(self):
        for name in ("rho0", "rho1", "rho2"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name))))
        if not self.theta_u > 0:
            raise ValidationError("theta_u must be positive")

    @property
    def dim(self) -> int:
        return int(self.rho0.shape[0])

    def recentered(self, theta_u: float) -> "OperatorMoments":
        """Shift the reference scale; ``rho_k`` transform polynomially in the shift."""
        c = np.log(theta_u / self.theta_u)
        return OperatorMoments(
            rho0=self.rho0,
            rho1=self.rho1 - c * self.rho0,
            rho2=self.rho2 - 2.0 * c * self.rho1 + c * c * self.rho0,
            theta_u=float(theta_u),
        )


@dataclass(frozen=True)
class OptimalStrategy:
    """Projective optimal measurement with its exponential estimator.

    ``projectors[g]`` projects onto the eigenspace of ``S`` whose (possibly
    merged) eigenvalue is ``eigenvalues[g]``; the reported estimate is
    ``theta_u * exp(eigenvalues[g])``.
    """

    S: np.ndarray
    eigenvalues: np.ndarray
    projectors: np.ndarray  # shape (n_groups, dim, dim)
    estimates: np.ndarray
    theta_u: float

    def __post_init__(self):
        for name in ("S", "eigenvalues", "projectors", "estimates"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name))))

    @property
    def dim(self) -> int:
        return int(self.S.shape[0])

    def outcome_labels(self) -> tuple[str, ...]:
        labels = [format(s, ".12g") for s in self.eigenvalues]
        seen: dict[str, int] = {}
        out = []
        for lbl in labels:
            if lbl in seen:  # merged eigenvalues are separated by far more
                seen[lbl] += 1  # than 12 digits resolve; keep labels unique anyway
                lbl = f"{lbl}#{seen[lbl]}"
            else:
                seen[lbl] = 0
            out.append(lbl)
        return tuple(out)

    def as_pom(self) -> POM:
        return POM(labels=self.outcome_labels(), effects=self.projectors)

    def as_estimator(self) -> Estimator:
        return Estimator(dict(zip(self.outcome_labels(), self.estimates)))


@dataclass(frozen=True)
class MinimumReport:
    """The attainable minimum and its two ingredients."""

    epsilon_min: float
    prior_term: float
    trace_term: float
    theta_u: float


@dataclass(frozen=True)
class HHCertificate:
    """Holevo-Helstrom optimality certificate.

    ``trace_upsilon`` must equal the reported minimum, and every entry of
    ``min_eigs`` (one per optimal estimate) must be nonnegative up to noise.
    """

    trace_upsilon: float
    min_eigs: np.ndarray
    estimates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min_eigs", _readonly(np.asarray(self.min_eigs, dtype=float)))
        object.__setattr__(self, "estimates", _readonly(np.asarray(self.estimates, dtype=float)))


def operator_moments(
    prior: PriorDensity,
    state: ParameterizedState,
    theta_u: float = 1.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> OperatorMoments:
    """Quadrature of the encoded states against the prior with log weights."""
    if not theta_u > 0:
        raise ValidationError("theta_u must be positive")
    if not prior.grid.same_as(state.grid):
        raise ValidationError("prior and state are defined on different grids")
    logs = np.log(prior.grid.nodes / theta_u)
    masses = prior.masses()
    rhos = []
    for k in range(3):
        rho = np.einsum("j,jab->ab", masses * logs**k, state.states)
        rhos.append(0.5 * (rho + rho.conj().T))
    rho0, rho1, rho2 = rhos
    if abs(np.trace(rho0).real - 1.0) > 1e-8:
        raise ValidationError("rho0 trace deviates from 1; prior or states invalid")
    if np.linalg.eigvalsh(rho2)[0] < -tol.psd * max(1.0, np.abs(rho2).max()):
        raise ValidationError("rho2 must be positive semidefinite")
    return OperatorMoments(rho0=rho0, rho1=rho1, rho2=rho2, theta_u=float(theta_u))


def _merge_degenerate(values: np.ndarray, tol_gap: float) -> list[np.ndarray]:
    """Group consecutive ascending eigenvalues with gaps below ``tol_gap``."""
    groups = [[0]]
    for i in range(1, values.size):
        if values[i] - values[groups[-1][-1]] < tol_gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def optimal_strategy(
    m: OperatorMoments, tol: Tolerances = DEFAULT_TOLERANCES
) -> OptimalStrategy:
    """Solve for ``S`` and package its eigenbasis as measurement + estimator.

    Eigenvalues closer than ``tol.degeneracy_factor * (s_max - s_min + 1)``
    are merged into a single higher-rank projective outcome: outcomes with
    equal estimates are operationally identical.
    """
    s = solve_lyapunov(m.rho0, m.rho1, tol)
    es = eig_hermitian(s, tol)
    gap = tol.degeneracy_factor * (es.values[-1] - es.values[0] + 1.0)
    groups = _merge_degenerate(es.values, gap)
    eigenvalues = np.array([es.values[g].mean() for g in groups])
    projectors = np.stack(
        [es.vectors[:, g] @ es.vectors[:, g].conj().T for g in groups]
    )
    return OptimalStrategy(
        S=s,
        eigenvalues=eigenvalues,
        projectors=projectors,
        estimates=m.theta_u * np.exp(eigenvalues),
        theta_u=m.theta_u,
    )


def minimum_error(
    m: OperatorMoments,
    strategy: OptimalStrategy | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> MinimumReport:
    """Exact attainable minimum of the mean squared log error.

    ``prior_term`` is ``Tr(rho2)`` (the states are unit trace, so this equals
    the prior average of ``log^2(theta/theta_u)``); ``trace_term`` is
    ``Tr(rho0 S^2)``, cross-checked against the identity ``Tr(rho1 S)``.
    """
    s = strategy.S if strategy is not None else solve_lyapunov(m.rho0, m.rho1, tol)
    prior_term = float(np.trace(m.rho2).real)
    trace_term = float(np.einsum("ab,bc,ca->", m.rho0, s, s).real)
    cross = float(np.einsum("ab,ba->", m.rho1, s).real)
    if abs(trace_term - cross) > 1e-8 * max(1.0, abs(trace_term)):
        raise ValidationError(
            f"Tr(rho0 S^2) = {trace_term!r} disagrees with Tr(rho1 S) = {cross!r}"
        )
    epsilon_min = prior_term - trace_term
    if epsilon_min < -1e-9 * max(1.0, prior_term):
        raise NumericalFailureError(
            f"minimum came out negative ({epsilon_min!r}); inputs are numerically inconsistent"
        )
    return MinimumReport(
        epsilon_min=epsilon_min,
        prior_term=prior_term,
        trace_term=trace_term,
        theta_u=m.theta_u,
    )


def evaluate_mle(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    est: Estimator,
) -> float:
    """Mean squared logarithmic error of an arbitrary strategy.

    ``sum_x sum_j w_j p_j Tr[M(x) rho_j] log^2(estimate_x / theta_j)``.
    """
    if not prior.grid.same_as(state.grid):
        raise ValidationError("prior and state are defined on different grids")
    lk = likelihood_matrix(state, pom)
    estimates = est.for_pom(pom)
    dev = np.log(estimates)[:, None] - np.log(prior.grid.nodes)[None, :]
    joint = prior.masses()[None, :] * lk
    return float(np.sum(joint * dev**2))


def jensen_gap(pom: POM, est: Estimator, theta_u: float = 1.0) -> float:
    """Smallest eigenvalue of ``A2 - A1^2`` for the log-transformed estimator.

    ``A_k = sum_x M(x) w_x^k`` with ``w_x = log(estimate_x / theta_u)``. The
    gap is zero exactly for projective POMs (and independent of ``theta_u``);
    a positive gap quantifies the loss from non-projective effects.
    """
    w = np.log(est.for_pom(pom) / theta_u)
    a1 = np.einsum("x,xab->ab", w, pom.effects)
    a2 = np.einsum("x,xab->ab", w**2, pom.effects)
    gap_op = a2 - a1 @ a1
    return float(np.linalg.eigvalsh(0.5 * (gap_op + gap_op.conj().T))[0])


def _w_operator(m: OperatorMoments, omega: float) -> np.ndarray:
    """Risk operator at log-estimate ``omega``: ``rho2 + rho0 w^2 - 2 rho1 w``."""
    return m.rho2 + m.rho0 * omega**2 - 2.0 * m.rho1 * omega


def hh_certificate(m: OperatorMoments, strat: OptimalStrategy) -> HHCertificate:
    """Build ``Upsilon = rho2 - S rho0 S`` and check it against every estimate."""
    upsilon = m.rho2 - strat.S @ m.rho0 @ strat.S
    upsilon = 0.5 * (upsilon + upsilon.conj().T)
    min_eigs = []
    for s_val in strat.eigenvalues:
        diff = _w_operator(m, float(s_val)) - upsilon
        min_eigs.append(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))[0])
    return HHCertificate(
        trace_upsilon=float(np.trace(upsilon).real),
        min_eigs=np.array(min_eigs),
        estimates=strat.estimates,
    )


def scale_observable(strat: OptimalStrategy) -> np.ndarray:
    """Operator-valued estimator ``theta_u * exp(S)``; positive definite."""
    obs = np.einsum("g,gab->ab", strat.estimates, strat.projectors)
    return 0.5 * (obs + obs.conj().T)


def variational_objective(m: OperatorMoments, a1: np.ndarray) -> float:
    """Objective ``Tr(rho0 A1^2 - 2 rho1 A1)`` minimized exactly at ``A1 = S``."""
    a1 = require_hermitian(a1, what="A1")
    if a1.shape != m.rho0.shape:
        raise ValidationError(f"A1 shape {a1.shape} does not match moments {m.rho0.shape}")
    return float((np.einsum("ab,bc,ca->", m.rho0, a1, a1) - 2.0 * np.einsum("ab,ba->", m.rho1, a1)).real)
