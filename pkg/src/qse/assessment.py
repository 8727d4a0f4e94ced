"""Optimality assessment of practical measurements.

Any strategy obeys the chain

    error >= eps_p - K >= eps_p - J,

where ``eps_p`` is the prior uncertainty (variance of ``log theta``), ``K``
is the information gained by the measurement under analysis, and ``J`` is
the gain of the optimal measurement. The first inequality saturates when
outcomes are post-processed with the posterior geometric-mean estimator; the
second saturates exactly when the measurement is optimal. Comparing ``K``
against ``J`` therefore classifies a measurement as optimal, almost optimal,
or sub-optimal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ValidationError
from .estimation import OperatorMoments, operator_moments
from .models import POM, Estimator, ParameterizedState, PriorDensity, likelihood_matrix
from .numerics import solve_lyapunov

__all__ = [
    "AssessmentReport",
    "prior_estimate",
    "prior_uncertainty",
    "optimal_estimator",
    "info_gain_K",
    "info_gain_K_operator_form",
    "info_gain_J",
    "classify",
]

CLASSIFICATIONS = ("optimal", "almost_optimal", "sub_optimal")


@dataclass(frozen=True)
class AssessmentReport:
    """Prior summary, information gains, and the resulting classification."""

    epsilon_p: float
    theta_p: float
    K: float
    J: float
    classification: str
    tol_rel: float
    almost_rel: float


def prior_estimate(prior: PriorDensity, theta_u: float = 1.0) -> float:
    """Geometric-mean estimate ``theta_u * exp(E[log(theta/theta_u)])``.

    Independent of ``theta_u``; it is the estimate that minimizes the prior
    uncertainty before any data is taken.
    """
    if not theta_u > 0:
        raise ValidationError("theta_u must be positive")
    return float(theta_u * np.exp(prior.mean_log(theta_u)))


def prior_uncertainty(prior: PriorDensity) -> float:
    """Variance of ``log theta`` under the prior."""
    dev = np.log(prior.grid.nodes / prior_estimate(prior))
    return float(np.dot(prior.masses(), dev**2))


def _outcome_stats(
    prior: PriorDensity, state: ParameterizedState, pom: POM
) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities and posterior means of ``log theta`` per outcome."""
    if not prior.grid.same_as(state.grid):
        raise ValidationError("prior and state are defined on different grids")
    lk = likelihood_matrix(state, pom)  # (x, j)
    joint = prior.masses()[None, :] * lk
    probs = joint.sum(axis=1)
    logs = np.log(prior.grid.nodes)
    mean_logs = np.divide(
        joint @ logs, probs, out=np.zeros_like(probs), where=probs > 0
    )
    return probs, mean_logs


def optimal_estimator(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Estimator:
    """Posterior geometric-mean estimator for each outcome of ``pom``.

    Outcomes that can never occur get the prior estimate (their contribution
    to any average vanishes).
    """
    probs, mean_logs = _outcome_stats(prior, state, pom)
    fallback = np.log(prior_estimate(prior))
    values = np.where(probs > tol.zero_prob, mean_logs, fallback)
    return Estimator(dict(zip(pom.labels, np.exp(values))))


def info_gain_K(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Information gained by ``pom``: outcome-averaged squared shift of the estimate.

    ``sum_x p(x) log^2(estimate_x / prior_estimate)`` with the posterior
    geometric-mean estimator; outcomes below the zero-probability cutoff
    contribute nothing.
    """
    probs, mean_logs = _outcome_stats(prior, state, pom)
    shift = mean_logs - np.log(prior_estimate(prior))
    mask = probs > tol.zero_prob
    return float(np.sum(probs[mask] * shift[mask] ** 2))


def info_gain_K_operator_form(
    m: OperatorMoments, pom: POM, tol: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Same gain from the operator moments: ``sum_x Tr[M rho1]^2 / Tr[M rho0]``.

    The moments are re-centered internally so the reference scale is the
    prior estimate (making ``Tr(rho1)`` vanish), which is what makes the
    quotient form equivalent to the probability form.
    """
    centered = m.recentered(m.theta_u * np.exp(np.trace(m.rho1).real))
    t0 = np.einsum("xab,ba->x", pom.effects, centered.rho0).real
    t1 = np.einsum("xab,ba->x", pom.effects, centered.rho1).real
    mask = t0 > tol.zero_prob
    return float(np.sum(t1[mask] ** 2 / t0[mask]))


def info_gain_J(m: OperatorMoments, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Gain of the optimal measurement: ``Tr(rho0 S^2)`` at the prior-estimate center."""
    centered = m.recentered(m.theta_u * np.exp(np.trace(m.rho1).real))
    s = solve_lyapunov(centered.rho0, centered.rho1, tol)
    return float(np.einsum("ab,bc,ca->", centered.rho0, s, s).real)


def classify(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    tol_rel: float = DEFAULT_TOLERANCES.classify_tol_rel,
    almost_rel: float = DEFAULT_TOLERANCES.classify_almost_rel,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> AssessmentReport:
    """Compare the gains K and J and classify the measurement.

    ``optimal`` when the relative shortfall ``(J - K)/J`` is below
    ``tol_rel``, ``almost_optimal`` below ``almost_rel``, ``sub_optimal``
    otherwise. When ``J = 0`` there is nothing to learn and every measurement
    is optimal.
    """
    theta_p = prior_estimate(prior)
    eps_p = prior_uncertainty(prior)
    k = info_gain_K(prior, state, pom, tol)
    m = operator_moments(prior, state, theta_p, tol)
    j = info_gain_J(m, tol)
    gap_rel = (j - k) / max(j, 1e-300)
    if j == 0.0 or gap_rel <= tol_rel:
        label = "optimal"
    elif gap_rel <= almost_rel:
        label = "almost_optimal"
    else:
        label = "sub_optimal"
    return AssessmentReport(
        epsilon_p=eps_p,
        theta_p=theta_p,
        K=k,
        J=j,
        classification=label,
        tol_rel=tol_rel,
        almost_rel=almost_rel,
    )
