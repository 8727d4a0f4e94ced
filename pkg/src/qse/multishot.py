"""Sequential repetition of a fixed measurement with Bayesian updating.

A run repeats the same POM shot after shot; the posterior is the prior times
the product of outcome likelihoods, the running estimate is the posterior
geometric mean, and the experimental error is the posterior-averaged squared
log deviation from that estimate. :func:`simulate` draws seeded Monte-Carlo
trajectories; :func:`exact_multishot_error` averages over every outcome
string exactly (up to an enumeration cap).

Randomness contract: outcomes are drawn with the Philox counter-based
generator keyed by ``(master_seed, stream_index)``, so trajectories are
bit-reproducible and independent streams never overlap.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NumericalFailureError, ValidationError
from .models import POM, ParameterizedState, PriorDensity, likelihood_matrix

__all__ = [
    "PosteriorState",
    "Trajectory",
    "start",
    "update",
    "sequential_estimate",
    "experimental_error",
    "simulate",
    "simulate_batch",
    "exact_multishot_error",
    "worker_count",
]


@dataclass(frozen=True)
class PosteriorState:
    """Current posterior plus the outcome history that produced it."""

    density: PriorDensity
    history: tuple[str, ...] = ()

    @property
    def shot_count(self) -> int:
        return len(self.history)


@dataclass(frozen=True)
class Trajectory:
    """One simulated run: outcomes, running estimates, running errors."""

    true_theta: float
    outcomes: tuple[str, ...]
    estimates: tuple[float, ...]
    experimental_errors: tuple[float, ...]
    seed: int

    def __post_init__(self):
        n = len(self.outcomes)
        if len(self.estimates) != n or len(self.experimental_errors) != n:
            raise ValidationError("per-shot records must all have the same length")


def start(prior: PriorDensity) -> PosteriorState:
    """Fresh run: posterior equals the prior, no outcomes yet."""
    return PosteriorState(density=prior, history=())


def update(
    ps: PosteriorState, state: ParameterizedState, pom: POM, outcome: str
) -> PosteriorState:
    """Multiply in one outcome likelihood and renormalize."""
    lk = likelihood_matrix(state, pom)[pom.index_of(outcome)]
    raw = ps.density.values * lk
    total = ps.density.grid.integrate(raw)
    if not total > 0:
        raise NumericalFailureError(f"outcome {outcome!r} has zero likelihood everywhere")
    density = PriorDensity(grid=ps.density.grid, values=raw / total, kind="custom")
    return PosteriorState(density=density, history=ps.history + (str(outcome),))


def sequential_estimate(ps: PosteriorState, theta_u: float = 1.0) -> float:
    """Posterior geometric mean ``theta_u * exp(E[log(theta/theta_u)])``."""
    if not theta_u > 0:
        raise ValidationError("theta_u must be positive")
    return float(theta_u * np.exp(ps.density.mean_log(theta_u)))


def experimental_error(ps: PosteriorState, estimate: float) -> float:
    """Posterior-averaged ``log^2(estimate/theta)``.

    Minimized exactly at the sequential estimate; reporting any other value
    ``estimate * exp(delta)`` adds ``delta^2``.
    """
    if not estimate > 0:
        raise ValidationError("estimate must be positive")
    dev = np.log(estimate / ps.density.grid.nodes)
    return float(np.dot(ps.density.masses(), dev**2))


def _stream(seed: int, index: int) -> np.random.Generator:
    for name, value in (("seed", seed), ("stream index", index)):
        if not 0 <= value < 2**64:
            raise ValidationError(f"{name} must fit an unsigned 64-bit integer, got {value}")
    key = np.array([np.uint64(seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    true_theta: float,
    shots: int,
    seed: int,
    stream_index: int = 0,
    theta_u: float = 1.0,
) -> Trajectory:
    """Draw one seeded trajectory of i.i.d. outcomes at the true parameter.

    ``true_theta`` is snapped to the nearest grid node (the encoding exists
    only as a table; interpolating density matrices could break positivity).
    Outcomes are drawn by inverse-CDF lookup on Philox uniforms, so equal
    seeds give bit-identical trajectories.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    nodes = prior.grid.nodes
    if not (nodes[0] <= true_theta <= nodes[-1]):
        raise ValidationError(
            f"true_theta {true_theta!r} outside the grid support [{nodes[0]}, {nodes[-1]}]"
        )
    lk = likelihood_matrix(state, pom)
    node = int(np.argmin(np.abs(nodes - true_theta)))
    probs = lk[:, node]
    total = probs.sum()
    if not total > 0:
        raise NumericalFailureError("all outcomes have zero probability at true_theta")
    cdf = np.cumsum(probs / total)
    rng = _stream(seed, stream_index)
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    draws = np.minimum(draws, len(pom.labels) - 1)

    ps = start(prior)
    outcomes, estimates, errors = [], [], []
    for x in draws:
        label = pom.labels[int(x)]
        ps = update(ps, state, pom, label)
        est = sequential_estimate(ps, theta_u)
        outcomes.append(label)
        estimates.append(est)
        errors.append(experimental_error(ps, est))
    return Trajectory(
        true_theta=float(true_theta),
        outcomes=tuple(outcomes),
        estimates=tuple(estimates),
        experimental_errors=tuple(errors),
        seed=int(seed),
    )


def worker_count() -> int:
    """Worker cap from the QSE_THREADS environment variable (default 1)."""
    raw = os.environ.get("QSE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"QSE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def simulate_batch(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    true_theta: float,
    shots: int,
    trajectories: int,
    seed: int,
    theta_u: float = 1.0,
    workers: int | None = None,
) -> list[Trajectory]:
    """Independent trajectories on streams ``(seed, 0..trajectories-1)``.

    Each trajectory owns its stream and posterior, so results are identical
    whatever the worker count; they are merged by index.
    """
    if trajectories < 1:
        raise ValidationError("trajectories must be >= 1")
    if workers is None:
        workers = worker_count()

    def run(i: int) -> Trajectory:
        return simulate(prior, state, pom, true_theta, shots, seed, i, theta_u)

    if workers <= 1:
        return [run(i) for i in range(trajectories)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(trajectories)))


def _string_likelihoods(lk: np.ndarray, shots: int) -> np.ndarray:
    """Likelihood of every outcome string, shape ``(n_outcomes**shots, n_nodes)``.

    Row order is lexicographic in the outcome indices (first shot slowest).
    """
    out = np.ones((1, lk.shape[1]))
    for _ in range(shots):
        out = (out[:, None, :] * lk[None, :, :]).reshape(-1, lk.shape[1])
    return out


def exact_multishot_error(
    prior: PriorDensity,
    state: ParameterizedState,
    pom: POM,
    shots: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Exact mean squared log error of the ``shots``-fold repeated POM.

    Enumerates all outcome strings, applies the posterior geometric-mean
    estimator to each, and averages against the prior. Raises a validation
    error when ``n_outcomes**shots`` exceeds the enumeration cap; use
    :func:`simulate` beyond that.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    n_strings = pom.n_outcomes**shots
    if n_strings > tol.enumeration_cap:
        raise ValidationError(
            f"{n_strings} outcome strings exceed the enumeration cap "
            f"{tol.enumeration_cap}; use simulate() for a Monte-Carlo estimate"
        )
    if not prior.grid.same_as(state.grid):
        raise ValidationError("prior and state are defined on different grids")
    lk = likelihood_matrix(state, pom)
    strings = _string_likelihoods(lk, shots)
    joint = prior.masses()[None, :] * strings  # (string, node)
    probs = joint.sum(axis=1)
    logs = np.log(prior.grid.nodes)
    mean_logs = np.divide(
        joint @ logs, probs, out=np.zeros_like(probs), where=probs > 0
    )
    dev = mean_logs[:, None] - logs[None, :]
    return float(np.sum(joint * dev**2))
