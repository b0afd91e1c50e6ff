"""Seeded random generators for frames, unitaries and symplectic maps."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .lagrangian import (LagrangianFrame, CanonicalForm, frame_from_canonical,
                         jmat, lagrangian_from_unitary, validate_frame)


def default_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_complex(rng, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(m: int, rng) -> np.ndarray:
    """Haar-distributed unitary via phase-fixed QR."""
    q, r = np.linalg.qr(random_complex(rng, m, m))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(m: int, rng, scale: float = 1.0) -> np.ndarray:
    G = random_complex(rng, m, m)
    return scale * 0.5 * (G + G.conj().T)


def random_lagrangian(m: int, rng) -> LagrangianFrame:
    return lagrangian_from_unitary(random_unitary(m, rng))


def random_lagrangian_in_layer(m: int, r: int, rng,
                               scale: float = 1.0) -> LagrangianFrame:
    """Random boundary condition with Dirichlet-intersection dimension r:
    random Hermitian block over a random (Haar-like) intersection subspace."""
    if not 0 <= r <= m:
        raise ValueError(f"layer must satisfy 0 <= r <= {m}")
    k0 = m - r
    A = random_hermitian(k0, rng, scale) if k0 else np.zeros((0, 0), complex)
    W = random_unitary(m, rng)
    return frame_from_canonical(CanonicalForm(m=m, r=r, A=A, basis=W))


def random_canonical(m: int, r: int, rng, scale: float = 1.0) -> CanonicalForm:
    k0 = m - r
    A = random_hermitian(k0, rng, scale) if k0 else np.zeros((0, 0), complex)
    return CanonicalForm(m=m, r=r, A=A, basis=random_unitary(m, rng))


def random_symplectic_conjugator(m: int, rng, scale: float = 0.4) -> np.ndarray:
    """Complex matrix with M*JM = J (exponential of -J H, H Hermitian)."""
    H = random_hermitian(2 * m, rng, scale)
    return expm(-jmat(m) @ H)


def random_real_symplectic(n: int, rng, scale: float = 0.4) -> np.ndarray:
    """Real symplectic matrix (exponential of J S, S symmetric)."""
    G = rng.standard_normal((2 * n, 2 * n))
    S = scale * 0.5 * (G + G.T)
    return expm(jmat(n) @ S)


def random_frame_gauge(m: int, rng, spread: float = 1.0) -> np.ndarray:
    """Random invertible right-multiplier for frame-choice independence tests."""
    G = random_complex(rng, m, m)
    G += np.eye(m) * (1.0 + spread)
    return G
