"""Grids, quadrature, Hermitian eigendecomposition, and the Lyapunov solver.

Conventions
-----------
* Operators are dense complex ``numpy`` arrays of shape ``(d, d)``.
* A grid discretizes integrals over a positive parameter: Gauss-Legendre
  abscissae are placed in ``u = log(theta)`` and mapped back with the
  Jacobian folded into the weights, so ``sum(w * f(nodes))`` approximates
  ``integral f(theta) dtheta`` on ``[theta_min, theta_max]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NumericalFailureError, ValidationError

__all__ = [
    "Grid",
    "EigenSystem",
    "make_log_grid",
    "require_hermitian",
    "eig_hermitian",
    "solve_lyapunov",
    "lyapunov_residual",
    "is_psd",
    "require_density_matrix",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Quadrature nodes and weights over a positive parameter.

    ``nodes`` must be strictly increasing and strictly positive; ``weights``
    are nonnegative with a positive sum and carry the same units as the
    parameter (they integrate densities against ``dtheta``).
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = _readonly(np.asarray(self.nodes, dtype=float))
        weights = _readonly(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or weights.ndim != 1 or nodes.size != weights.size:
            raise ValidationError("grid nodes and weights must be 1-d and equally long")
        if nodes.size < 2:
            raise ValidationError("a grid needs at least 2 nodes")
        if not np.all(nodes > 0):
            raise ValidationError("grid nodes must be strictly positive")
        if not np.all(np.diff(nodes) > 0):
            raise ValidationError("grid nodes must be strictly increasing")
        if not np.all(weights >= 0) or not np.sum(weights) > 0:
            raise ValidationError("grid weights must be nonnegative with positive sum")

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature sum ``sum_j w_j values_j``."""
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def same_as(self, other: "Grid") -> bool:
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(
            self.weights, other.weights
        )


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (real, ascending) and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "vectors", _readonly(np.asarray(self.vectors, dtype=complex)))


def make_log_grid(theta_min: float, theta_max: float, n: int) -> Grid:
    """Gauss-Legendre grid in ``log(theta)`` over ``[theta_min, theta_max]``.

    The rule is exact (to roundoff) for integrands that are polynomials of
    degree ``<= 2n - 1`` in ``log(theta)`` multiplied by the scale-invariant
    density ``1/theta``.
    """
    if not (0 < theta_min < theta_max) or not np.isfinite([theta_min, theta_max]).all():
        raise ValidationError(
            f"need 0 < theta_min < theta_max, got [{theta_min}, {theta_max}]"
        )
    if n < 2:
        raise ValidationError(f"need at least 2 nodes, got n={n}")
    x, wx = leggauss(int(n))
    a, b = np.log(theta_min), np.log(theta_max)
    u = 0.5 * (b - a) * x + 0.5 * (b + a)
    nodes = np.exp(u)
    weights = 0.5 * (b - a) * wx * nodes  # Jacobian dtheta = theta du
    return Grid(nodes=nodes, weights=weights)


def require_hermitian(
    a: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES, what: str = "matrix"
) -> np.ndarray:
    """Return the symmetrized ``(A + A^dag)/2``, rejecting badly non-Hermitian input.

    Acceptance is relative: ``|A - A^dag|_max <= tol.hermiticity * |A|_max``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{what} must be square, got shape {a.shape}")
    scale = np.abs(a).max()
    dev = np.abs(a - a.conj().T).max()
    if dev > tol.hermiticity * max(scale, 1e-300):
        raise ValidationError(
            f"{what} is not Hermitian: max deviation {dev:.3e} vs scale {scale:.3e}"
        )
    return 0.5 * (a + a.conj().T)


def eig_hermitian(a: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = require_hermitian(a, tol)
    values, vectors = np.linalg.eigh(a)
    return EigenSystem(values=values, vectors=vectors)


def lyapunov_residual(s: np.ndarray, rho0: np.ndarray, rho1: np.ndarray) -> float:
    """Frobenius norm of ``S rho0 + rho0 S - 2 rho1``."""
    return float(np.linalg.norm(s @ rho0 + rho0 @ s - 2.0 * rho1))


def require_density_matrix(
    rho: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES, what: str = "state"
) -> np.ndarray:
    """Validate Hermiticity, positivity, and unit trace of a density matrix."""
    rho = require_hermitian(rho, tol, what)
    trace = np.trace(rho).real
    if abs(trace - 1.0) > tol.trace_one:
        raise ValidationError(f"{what} must have unit trace, got {trace!r}")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -tol.psd * max(1.0, np.abs(rho).max()):
        raise ValidationError(f"{what} is not positive semidefinite (min eig {lo:.3e})")
    return rho


def solve_lyapunov(
    rho0: np.ndarray,
    rho1: np.ndarray,
    tol: Tolerances = DEFAULT_TOLERANCES,
    kernel_tol: float | None = None,
) -> np.ndarray:
    """Solve ``S rho0 + rho0 S = 2 rho1`` for Hermitian ``S``.

    Worked in the eigenbasis of ``rho0``: ``S_jk = 2 b_jk / (l_j + l_k)`` on
    the support, and ``S = 0`` on the kernel. The right-hand side must vanish
    on the kernel of ``rho0`` (true for any moment operator built from states
    sharing the support of their average); otherwise the inputs are
    inconsistent and a :class:`NumericalFailureError` is raised.

    Parameters
    ----------
    rho0 : positive semidefinite, unit trace.
    rho1 : Hermitian with the same shape.
    kernel_tol : absolute eigenvalue cutoff for the kernel of ``rho0``;
        defaults to ``tol.kernel_tol_factor * lambda_max``.
    """
    rho0 = require_density_matrix(rho0, tol, "rho0")
    rho1 = require_hermitian(rho1, tol, "rho1")
    if rho0.shape != rho1.shape:
        raise ValidationError(f"shape mismatch: {rho0.shape} vs {rho1.shape}")

    es = eig_hermitian(rho0, tol)
    lam, v = es.values, es.vectors
    if kernel_tol is None:
        kernel_tol = tol.kernel_tol_factor * max(lam[-1], 0.0)
    support = lam > kernel_tol

    rho1_scale = max(1.0, float(np.linalg.norm(rho1)))
    if not support.all():
        kernel_vecs = v[:, ~support]
        leak = np.linalg.norm(rho1 @ kernel_vecs, axis=0)
        if leak.size and leak.max() > tol.kernel_compat * rho1_scale:
            raise NumericalFailureError(
                "rho1 does not vanish on the kernel of rho0 "
                f"(max |rho1 v| = {leak.max():.3e}); inputs are inconsistent"
            )

    b = v.conj().T @ rho1 @ v
    s_eig = np.zeros_like(b)
    idx = np.flatnonzero(support)
    if idx.size:
        denom = lam[idx, None] + lam[None, idx]
        s_eig[np.ix_(idx, idx)] = 2.0 * b[np.ix_(idx, idx)] / denom
    s = v @ s_eig @ v.conj().T
    s = 0.5 * (s + s.conj().T)

    if lyapunov_residual(s, rho0, rho1) > tol.lyapunov_residual * rho1_scale:
        raise NumericalFailureError(
            "Lyapunov residual exceeds tolerance; rho0 and rho1 are inconsistent"
        )
    return s


def is_psd(a: np.ndarray, tol_eig: float = 1e-10) -> bool:
    """True iff the smallest eigenvalue of Hermitian ``a`` is ``>= -tol_eig``."""
    a = require_hermitian(a)
    return bool(np.linalg.eigvalsh(a)[0] >= -tol_eig)
