"""Random instance generators shared across the test suite."""

from __future__ import annotations

import numpy as np

from qse import POM, Grid, ParameterizedState


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def support_projector(rho: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    keep = v[:, w > rel_tol * w.max()]
    return keep @ keep.conj().T


def compatible_rhs(rng: np.random.Generator, rho0: np.ndarray) -> np.ndarray:
    """Random Hermitian supported where rho0 is, so the Lyapunov solve is well posed."""
    p = support_projector(rho0)
    h = p @ random_hermitian(rng, rho0.shape[0]) @ p
    return 0.5 * (h + h.conj().T)


def random_pom(rng: np.random.Generator, d: int, n_outcomes: int) -> POM:
    """Random full POM: PSD blobs renormalized to sum to the identity."""
    mats = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append(g @ g.conj().T + 1e-3 * np.eye(d))
    total = sum(mats)
    w, v = np.linalg.eigh(total)
    inv_sqrt = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
    effects = np.stack([inv_sqrt @ m @ inv_sqrt for m in mats])
    effects = 0.5 * (effects + effects.conj().transpose(0, 2, 1))
    return POM(labels=tuple(f"x{i}" for i in range(n_outcomes)), effects=effects)


def basis_pom(vectors: np.ndarray, labels=None) -> POM:
    """Projective POM onto the columns of a unitary matrix."""
    d = vectors.shape[1]
    effects = np.stack([np.outer(vectors[:, i], vectors[:, i].conj()) for i in range(d)])
    labels = labels or tuple(f"b{i}" for i in range(d))
    return POM(labels=tuple(labels), effects=effects)


def fourier_pom(d: int) -> POM:
    """Measurement in the discrete-Fourier basis (the sigma_x basis for d = 2).

    Mutually unbiased with the computational basis, so its outcome statistics
    carry no information about diagonal state families.
    """
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    f = np.exp(2j * np.pi * j * k / d) / np.sqrt(d)
    return basis_pom(f, tuple(f"f{i}" for i in range(d)))


def mixture_family(rng: np.random.Generator, grid: Grid, d: int) -> ParameterizedState:
    """Smooth full-rank family interpolating two random mixed states in log-theta."""
    rho_a = random_density(rng, d)
    rho_b = random_density(rng, d)
    u = np.log(grid.nodes)
    t = (u - u[0]) / (u[-1] - u[0])
    states = np.stack([(1 - ti) * rho_a + ti * rho_b for ti in t])
    return ParameterizedState(grid=grid, states=states)


def rotating_family(rng: np.random.Generator, grid: Grid, d: int) -> ParameterizedState:
    """Family rotated by exp(-i G log(theta)) applied to a random mixed state."""
    g = random_hermitian(rng, d)
    w, v = np.linalg.eigh(g)
    rho = random_density(rng, d)
    states = []
    for theta in grid.nodes:
        u = v @ np.diag(np.exp(-1j * w * np.log(theta))) @ v.conj().T
        states.append(u @ rho @ u.conj().T)
    return ParameterizedState(grid=grid, states=np.stack(states))
