"""Independent oracles used to freeze expected values.

Everything here deliberately avoids the library's unitary-representation
code path: spectra come from separable closed forms, subspace dimensions
from stacked-frame ranks, and symplectic checks from the defining
identities.
"""

import math

import numpy as np


def dirichlet_spectrum_free(T: float, count: int):
    """-x'' = lambda x, x(0) = x(T) = 0  =>  lambda_j = (j pi / T)^2."""
    return [(j * math.pi / T) ** 2 for j in range(1, count + 1)]


def neumann_spectrum_free(T: float, count: int):
    """-x'' = lambda x, x'(0) = x'(T) = 0  =>  lambda_j = ((j-1) pi / T)^2."""
    return [((j - 1) * math.pi / T) ** 2 for j in range(1, count + 1)]


def periodic_spectrum_free(T: float, count: int):
    """Fourier modes on a circle of circumference T: 0 once, then
    (2 pi k / T)^2 twice each."""
    vals = [0.0]
    k = 1
    while len(vals) < count:
        vals.extend([(2 * math.pi * k / T) ** 2] * 2)
        k += 1
    return vals[:count]


def subspace_intersection_dim(Z1, Z2, tol=1e-8) -> int:
    """dim(span Z1 ∩ span Z2) = m1 + m2 - rank([Z1 Z2])."""
    Z1 = np.asarray(Z1, complex)
    Z2 = np.asarray(Z2, complex)
    stacked = np.hstack([Z1 / np.linalg.norm(Z1, axis=0),
                         Z2 / np.linalg.norm(Z2, axis=0)])
    s = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    return Z1.shape[1] + Z2.shape[1] - rank


def same_subspace(Z1, Z2, tol=1e-8) -> bool:
    return (Z1.shape[1] == Z2.shape[1]
            and subspace_intersection_dim(Z1, Z2, tol) == Z1.shape[1])


def symplectic_defect(M) -> float:
    M = np.asarray(M)
    n = M.shape[0] // 2
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return float(np.linalg.norm(M.T @ J @ M - J, 2)
                 / max(1.0, np.linalg.norm(M, 2) ** 2))


def cayley_angle(a: float) -> float:
    """Angle of (a + i)/(a - i) in [0, 2pi): equals 2 arccot(a)."""
    w = (a + 1j) / (a - 1j)
    return float(np.angle(w) % (2 * math.pi))
