"""Centralized numerical tolerances.

Every tolerance used by the library lives here with its default value, so
that a single object can be threaded through a computation (or inspected in
a report) instead of magic numbers scattered across modules.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Default tolerances for validation and classification.

    Attributes
    ----------
    hermiticity : float
        Relative max-norm tolerance for accepting a matrix as Hermitian.
    eig_residual : float
        Relative Frobenius tolerance on ``A - V diag(w) V^dag``.
    lyapunov_residual : float
        Residual bound ``|S rho0 + rho0 S - 2 rho1|_F <= lyapunov_residual *
        max(1, |rho1|_F)``.
    kernel_tol_factor : float
        Eigenvalues of rho0 below ``kernel_tol_factor * lambda_max`` are
        treated as the kernel.
    kernel_compat : float
        Scale-relative bound on ``|rho1 v|`` for kernel vectors ``v``.
    psd : float
        Negative-eigenvalue slack for positive-semidefinite checks.
    trace_one : float
        Slack for unit-trace checks on density matrices.
    completeness : float
        Frobenius slack for ``sum(effects) = identity``.
    prior_norm : float
        Slack on prior/posterior normalization.
    degeneracy_factor : float
        Eigenvalues of the strategy operator closer than
        ``degeneracy_factor * (s_max - s_min + 1)`` are merged.
    zero_prob : float
        Outcome probabilities below this are treated as never occurring.
    classify_tol_rel : float
        Relative gap ``(J - K)/J`` below which a measurement is optimal.
    classify_almost_rel : float
        Relative gap below which a measurement is almost optimal.
    enumeration_cap : int
        Maximum number of outcome strings enumerated exactly.
    """

    hermiticity: float = 1e-12
    eig_residual: float = 1e-10
    lyapunov_residual: float = 1e-10
    kernel_tol_factor: float = 1e-12
    kernel_compat: float = 1e-10
    psd: float = 1e-10
    trace_one: float = 1e-10
    completeness: float = 1e-8
    prior_norm: float = 1e-8
    degeneracy_factor: float = 1e-9
    zero_prob: float = 1e-15
    classify_tol_rel: float = 1e-6
    classify_almost_rel: float = 0.05
    enumeration_cap: int = 4096


DEFAULT_TOLERANCES = Tolerances()
