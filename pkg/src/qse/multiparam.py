"""Simultaneous estimation of several scale parameters.

The figure of merit is the equal-weight average of per-parameter squared log
errors. Each parameter gets its own log-weighted moment ``rho1_i`` (the
plain moment ``rho0`` is shared) and its own Lyapunov solution ``S_i``; the
average error is lower-bounded by the mean of the per-parameter minima. The
bound is attainable when all ``S_i`` commute (e.g. tensor-product encodings
with separable priors); the pairwise commutator norms are reported as the
saturability diagnostic.

Joint quantities live on the Cartesian product of per-axis grids; state
tables are indexed in row-major (C) order over the axis indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ValidationError
from .models import POM, Estimator, PriorDensity
from .numerics import Grid, require_density_matrix, solve_lyapunov

__all__ = [
    "MultiPrior",
    "MultiMomentSet",
    "MultiBoundReport",
    "product_prior",
    "jeffreys_product_prior",
    "tensor_product_states",
    "multi_deviation",
    "multi_moments",
    "multi_bound",
    "evaluate_multi_mle",
    "optimal_multi_estimators",
]

MAX_PRODUCT_NODES = 1_000_000


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultiPrior:
    """Joint density over the Cartesian product of per-axis grids."""

    grids: tuple[Grid, ...]
    values: np.ndarray  # shape (n_1, ..., n_d)
    separable: bool = False

    def __post_init__(self):
        grids = tuple(self.grids)
        object.__setattr__(self, "grids", grids)
        values = _readonly(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)
        shape = tuple(g.size for g in grids)
        if not grids:
            raise ValidationError("need at least one axis")
        if values.shape != shape:
            raise ValidationError(f"joint values must have shape {shape}, got {values.shape}")
        if math.prod(shape) > MAX_PRODUCT_NODES:
            raise ValidationError(
                f"product grid has {math.prod(shape)} nodes, exceeding the "
                f"{MAX_PRODUCT_NODES} budget"
            )
        if np.any(values < 0):
            raise ValidationError("joint density must be nonnegative")
        masses = self.weight_tensor() * values
        norm = float(masses.sum())
        if abs(norm - 1.0) > 1e-7:
            raise ValidationError(f"joint density not normalized: integral = {norm!r}")
        if self.separable and len(grids) > 1:
            rebuilt = np.array(1.0)
            for i, g in enumerate(grids):
                axes = tuple(a for a in range(len(grids)) if a != i)
                rebuilt = np.multiply.outer(rebuilt, masses.sum(axis=axes) / g.weights)
            if np.abs(rebuilt - values).max() > 1e-10 * max(values.max(), 1e-300):
                raise ValidationError("separable flag set but joint is not a product of marginals")

    @property
    def n_params(self) -> int:
        return len(self.grids)

    @property
    def n_nodes(self) -> int:
        return int(np.prod([g.size for g in self.grids]))

    def weight_tensor(self) -> np.ndarray:
        """Outer product of per-axis quadrature weights."""
        w = self.grids[0].weights
        for g in self.grids[1:]:
            w = np.multiply.outer(w, g.weights)
        return w

    def masses_flat(self) -> np.ndarray:
        """Row-major flattened per-node probability masses."""
        return (self.weight_tensor() * self.values).reshape(-1)

    def axis_logs_flat(self, i: int, theta_u: float = 1.0) -> np.ndarray:
        """Row-major flattened ``log(theta_i / theta_u)`` over the product grid."""
        shape = [1] * self.n_params
        shape[i] = self.grids[i].size
        logs = np.log(self.grids[i].nodes / theta_u).reshape(shape)
        full_shape = tuple(g.size for g in self.grids)
        return np.broadcast_to(logs, full_shape).reshape(-1)


def product_prior(factors: Sequence[PriorDensity]) -> MultiPrior:
    """Separable joint density from independent single-parameter priors."""
    factors = list(factors)
    if not factors:
        raise ValidationError("need at least one factor")
    values = factors[0].values
    for f in factors[1:]:
        values = np.multiply.outer(values, f.values)
    return MultiPrior(
        grids=tuple(f.grid for f in factors), values=values, separable=True
    )


def jeffreys_product_prior(grids: Sequence[Grid]) -> MultiPrior:
    """Maximum-ignorance joint prior: product of per-axis ``1/theta`` densities."""
    from .models import jeffreys_prior

    return product_prior([jeffreys_prior(g) for g in grids])


def tensor_product_states(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker products over the product grid, row-major in the axis indices.

    ``factors[i]`` holds the states of axis ``i``, shape ``(n_i, d_i, d_i)``;
    the result has shape ``(prod n_i, prod d_i, prod d_i)``.
    """
    tables = [np.asarray(f, dtype=complex) for f in factors]
    out = tables[0]
    for nxt in tables[1:]:
        combined = np.einsum("iab,jcd->ijacbd", out, nxt)
        n = out.shape[0] * nxt.shape[0]
        d = out.shape[1] * nxt.shape[1]
        out = combined.reshape(n, d, d)
    return out


@dataclass(frozen=True)
class MultiMomentSet:
    """Shared plain moment, per-parameter log moments, and their solutions."""

    rho0: np.ndarray
    rho1: tuple[np.ndarray, ...]
    theta_u: tuple[float, ...]
    S: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "rho0", _readonly(np.asarray(self.rho0)))
        object.__setattr__(self, "rho1", tuple(_readonly(np.asarray(r)) for r in self.rho1))
        object.__setattr__(self, "S", tuple(_readonly(np.asarray(s)) for s in self.S))
        object.__setattr__(self, "theta_u", tuple(float(t) for t in self.theta_u))

    @property
    def n_params(self) -> int:
        return len(self.rho1)


@dataclass(frozen=True)
class MultiBoundReport:
    """Per-parameter bound terms, their average, and the commutator diagnostic."""

    per_parameter: tuple[float, ...]
    bound: float
    commutator_norms: tuple[tuple[int, int, float], ...]
    saturable: bool


def multi_deviation(
    estimates: Sequence[float], truths: Sequence[float]
) -> float:
    """Equal-weight average of squared log deviations, ``(1/d) sum_i log^2(est_i/theta_i)``."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape or est.ndim != 1 or est.size == 0:
        raise ValidationError("estimates and truths must be equal-length nonempty vectors")
    if np.any(est <= 0) or np.any(tru <= 0):
        raise ValidationError("estimates and truths must be strictly positive")
    return float(np.mean(np.log(est / tru) ** 2))


def _check_states(prior: MultiPrior, states: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=complex)
    if states.ndim != 3 or states.shape[0] != prior.n_nodes:
        raise ValidationError(
            f"states must have shape (n_nodes={prior.n_nodes}, d, d), got {states.shape}"
        )
    return states


def multi_moments(
    prior: MultiPrior,
    states: np.ndarray,
    theta_u: Sequence[float],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> MultiMomentSet:
    """Per-parameter log-weighted moments and Lyapunov solutions.

    ``states`` is the encoding over the product grid in row-major axis order;
    validity of a few nodes is spot-checked, the joint average is validated
    in full.
    """
    states = _check_states(prior, states)
    theta_u = [float(t) for t in theta_u]
    if len(theta_u) != prior.n_params:
        raise ValidationError("one theta_u per parameter required")
    if any(t <= 0 for t in theta_u):
        raise ValidationError("theta_u must be positive")
    for j in np.linspace(0, states.shape[0] - 1, min(4, states.shape[0]), dtype=int):
        require_density_matrix(states[j], tol, f"state at flat node {j}")

    masses = prior.masses_flat()
    rho0 = np.einsum("j,jab->ab", masses, states)
    rho0 = 0.5 * (rho0 + rho0.conj().T)
    rho1, ss = [], []
    for i in range(prior.n_params):
        logs = prior.axis_logs_flat(i, theta_u[i])
        r1 = np.einsum("j,jab->ab", masses * logs, states)
        r1 = 0.5 * (r1 + r1.conj().T)
        rho1.append(r1)
        ss.append(solve_lyapunov(rho0, r1, tol))
    return MultiMomentSet(rho0=rho0, rho1=tuple(rho1), theta_u=tuple(theta_u), S=tuple(ss))


def multi_bound(
    ms: MultiMomentSet,
    prior: MultiPrior,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> MultiBoundReport:
    """Averaged lower bound on the multi-parameter error, with saturability flag.

    Per-parameter term: prior average of ``log^2(theta_i/theta_u_i)`` minus
    ``Tr(rho0 S_i^2)``. The bound is declared saturable when every pairwise
    commutator of the ``S_i`` vanishes at scale.
    """
    if ms.n_params != prior.n_params:
        raise ValidationError("moment set and prior disagree on the number of parameters")
    masses = prior.masses_flat()
    terms = []
    for i in range(ms.n_params):
        logs = prior.axis_logs_flat(i, ms.theta_u[i])
        prior_term = float(np.dot(masses, logs**2))
        trace_term = float(np.einsum("ab,bc,ca->", ms.rho0, ms.S[i], ms.S[i]).real)
        terms.append(prior_term - trace_term)

    norms = []
    s_scales = [max(float(np.linalg.norm(s)), 0.0) for s in ms.S]
    for i in range(ms.n_params):
        for j in range(i + 1, ms.n_params):
            comm = ms.S[i] @ ms.S[j] - ms.S[j] @ ms.S[i]
            norms.append((i, j, float(np.linalg.norm(comm))))
    scale = max(s_scales, default=0.0) ** 2
    max_norm = max((n for _, _, n in norms), default=0.0)
    return MultiBoundReport(
        per_parameter=tuple(terms),
        bound=float(np.mean(terms)),
        commutator_norms=tuple(norms),
        saturable=bool(max_norm <= 1e-8 * max(scale, 1e-300)),
    )


def _pom_likelihood(pom: POM, states: np.ndarray) -> np.ndarray:
    if pom.dim != states.shape[1]:
        raise ValidationError(f"dimension mismatch: POM {pom.dim}, states {states.shape[1]}")
    lk = np.einsum("xab,jba->xj", pom.effects, states).real
    return np.clip(lk, 0.0, None)


def evaluate_multi_mle(
    prior: MultiPrior,
    states: np.ndarray,
    pom: POM,
    estimators: Sequence[Estimator],
) -> float:
    """Average of per-parameter mean squared log errors over the joint distribution."""
    states = _check_states(prior, states)
    if len(estimators) != prior.n_params:
        raise ValidationError("one estimator per parameter required")
    lk = _pom_likelihood(pom, states)
    joint = prior.masses_flat()[None, :] * lk
    total = 0.0
    for i, est in enumerate(estimators):
        log_est = np.log(est.for_pom(pom))
        logs_i = prior.axis_logs_flat(i)
        dev = log_est[:, None] - logs_i[None, :]
        total += float(np.sum(joint * dev**2))
    return total / prior.n_params


def optimal_multi_estimators(
    prior: MultiPrior,
    states: np.ndarray,
    pom: POM,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[Estimator]:
    """Posterior geometric-mean estimator of each parameter, per outcome."""
    states = _check_states(prior, states)
    lk = _pom_likelihood(pom, states)
    joint = prior.masses_flat()[None, :] * lk
    probs = joint.sum(axis=1)
    out = []
    for i in range(prior.n_params):
        logs_i = prior.axis_logs_flat(i)
        prior_mean = float(np.dot(prior.masses_flat(), logs_i))
        mean_logs = np.divide(
            joint @ logs_i, probs, out=np.full_like(probs, prior_mean), where=probs > tol.zero_prob
        )
        out.append(Estimator(dict(zip(pom.labels, np.exp(mean_logs)))))
    return out
