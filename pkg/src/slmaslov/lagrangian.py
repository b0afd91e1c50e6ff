"""Complex symplectic linear algebra for boundary-condition subspaces.

A self-adjoint boundary condition is modelled as a Lagrangian subspace of
C^{2m} carrying the Hermitian symplectic form <J_m x, y>.  Subspaces are
represented by tall 2m-by-m frames [X; Y] of full column rank with X*Y
Hermitian.  The Cayley-type map U = (X + iY)(X - iY)^{-1} identifies the
Lagrangian Grassmannian with the unitary group U(m); all rank, distance
and intersection decisions happen on the unitary side.

Coordinate convention: every public frame lives in the "standard" basis
(-y(0), y(T), x(0), x(T)) obtained from endpoint data (y(0), x(0), y(T),
x(T)) by the involution ``s_matrix``.  In this basis the Dirichlet plane
is [I; 0] (U = I) and the Neumann plane is [0; I] (U = -I).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import errors

# Default tolerances; every operation accepts per-call overrides.
TAU_RANK = 1e-8   # singular-value threshold, relative to max(1, s_max)
TAU_UNIT = 1e-10  # unitarity / isotropy defect bound
TAU_SYMP = 1e-9   # symplecticity defect bound, relative to max(1, |M|^2)


def jmat(n: int) -> np.ndarray:
    """Standard symplectic structure [[0, -I_n], [I_n, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def s_matrix(n: int) -> np.ndarray:
    """Involution taking endpoint coordinates (y0, x0, yT, xT) to the
    standard basis (-y0, yT, x0, xT).  Applying it twice is the identity,
    and it maps the split form diag(-J_n, J_n) to J_{2n}."""
    S = np.zeros((4 * n, 4 * n))
    I = np.eye(n)
    S[0:n, 0:n] = -I
    S[n:2 * n, 2 * n:3 * n] = I
    S[2 * n:3 * n, n:2 * n] = I
    S[3 * n:4 * n, 3 * n:4 * n] = I
    return S


def boundary_basis_change(z0: np.ndarray, zT: np.ndarray) -> np.ndarray:
    """Map endpoint pairs z(0) = (y(0), x(0)), z(T) = (y(T), x(T)) into the
    standard basis (-y(0), y(T), x(0), x(T))."""
    z0 = np.asarray(z0).ravel()
    zT = np.asarray(zT).ravel()
    if z0.shape != zT.shape or z0.size % 2:
        raise errors.DimensionMismatch("z0, zT must be equal-length 2n-vectors")
    n = z0.size // 2
    return np.concatenate([-z0[:n], zT[:n], z0[n:], zT[n:]])


def _orth(Z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(Z, axis=0)
    q, _ = np.linalg.qr(Z / norms)
    return q


@dataclass(frozen=True, eq=False)
class LagrangianFrame:
    """2m-by-m frame [X; Y] spanning a Lagrangian subspace of C^{2m}."""

    m: int
    Z: np.ndarray

    @property
    def X(self) -> np.ndarray:
        return self.Z[: self.m]

    @property
    def Y(self) -> np.ndarray:
        return self.Z[self.m:]

    @cached_property
    def orthonormal(self) -> np.ndarray:
        """QR-orthonormalized frame of the same subspace (conditioning
        post-pass used before any kernel or unitary computation)."""
        return _orth(self.Z)

    @cached_property
    def unitary(self) -> np.ndarray:
        Q = self.orthonormal
        X, Y = Q[: self.m], Q[self.m:]
        A = X - 1j * Y  # unitary whenever the frame is isotropic
        B = X + 1j * Y
        return np.linalg.solve(A.T, B.T).T

    def __repr__(self) -> str:  # keep reprs short; frames print as subspaces
        return f"LagrangianFrame(m={self.m})"


@dataclass(frozen=True, eq=False)
class UnitaryRep:
    """Unitary matrix U(Lambda) representing a Lagrangian subspace."""

    m: int
    U: np.ndarray


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Layer data (r, A, basis) of a boundary condition.

    r is dim(Lambda ∩ Dirichlet); A is the Hermitian matrix of the
    boundary form on the k0 = m - r dimensional complement, expressed in
    the orthonormal basis given by the trailing k0 columns of ``basis``;
    ``basis`` is the m-by-m unitary with U(Lambda) = basis (I_r ⊕ U_A) basis*.
    """

    m: int
    r: int
    A: np.ndarray
    basis: np.ndarray

    @property
    def k0(self) -> int:
        return self.m - self.r


@dataclass(frozen=True, eq=False)
class SymplecticMat:
    """Real symplectic matrix M with M^T J_n M = J_n."""

    n: int
    M: np.ndarray


def validate_frame(Z, m: int | None = None, *,
                   tau_rank: float = TAU_RANK,
                   tau_unit: float = TAU_UNIT) -> LagrangianFrame:
    """Check the frame invariants and wrap Z in a LagrangianFrame.

    Raises RankDeficient if the columns do not span an m-dimensional
    subspace, NotIsotropic if X*Y - Y*X exceeds tolerance (measured on the
    orthonormalized frame, so the bound is scale-free).
    """
    Z = np.array(Z, dtype=np.complex128)
    if Z.ndim != 2:
        raise errors.DimensionMismatch(f"frame must be 2-d, got shape {Z.shape}")
    rows, cols = Z.shape
    if m is None:
        m = cols
    if rows != 2 * m or cols != m:
        raise errors.DimensionMismatch(f"expected {2*m}x{m} frame, got {rows}x{cols}")
    if not np.all(np.isfinite(Z)):
        raise errors.RankDeficient("frame has non-finite entries")
    norms = np.linalg.norm(Z, axis=0)
    if np.any(norms == 0.0):
        raise errors.RankDeficient("frame has a zero column")
    s = np.linalg.svd(Z / norms, compute_uv=False)
    if s[-1] <= tau_rank * max(1.0, s[0]):
        raise errors.RankDeficient(
            f"columns are rank deficient (smin/smax = {s[-1] / s[0]:.3e})")
    Q = _orth(Z)
    X, Y = Q[:m], Q[m:]
    defect = np.linalg.norm(X.conj().T @ Y - Y.conj().T @ X, 2)
    if defect > tau_unit:
        raise errors.NotIsotropic(f"X*Y - Y*X has norm {defect:.3e} > {tau_unit:.1e}")
    # X - iY is unitary for isotropic orthonormal frames; guard regardless.
    smin = np.linalg.svd(X - 1j * Y, compute_uv=False)[-1]
    if smin < 0.5:
        raise errors.NotIsotropic(f"X - iY nearly singular (smin = {smin:.3e})")
    Z.setflags(write=False)
    return LagrangianFrame(m=m, Z=Z)


def dirichlet(m: int) -> LagrangianFrame:
    """Plane x-endpoints = 0; its unitary is I_m."""
    return validate_frame(np.vstack([np.eye(m), np.zeros((m, m))]), m)


def neumann(m: int) -> LagrangianFrame:
    """Plane y-endpoints = 0; its unitary is -I_m."""
    return validate_frame(np.vstack([np.zeros((m, m)), np.eye(m)]), m)


def unitary_of(frame: LagrangianFrame) -> UnitaryRep:
    """Unitary representative (X + iY)(X - iY)^{-1}; independent of the
    choice of frame for the same subspace."""
    return UnitaryRep(frame.m, frame.unitary)


def lagrangian_from_unitary(U, *, tau_unit: float = 1e-8) -> LagrangianFrame:
    """Inverse of ``unitary_of`` up to frame choice: X = U + I, Y = -i(U - I).

    This frame always has X - iY = 2I, so it is valid uniformly close to
    and on the singular cycle.
    """
    U = np.asarray(getattr(U, "U", U), dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise errors.DimensionMismatch("unitary must be square")
    m = U.shape[0]
    if np.linalg.norm(U.conj().T @ U - np.eye(m), 2) > tau_unit:
        raise errors.NotUnitary("U*U deviates from identity beyond tolerance")
    Z = np.vstack([U + np.eye(m), -1j * (U - np.eye(m))])
    return validate_frame(Z, m)


def dist(f1: LagrangianFrame, f2: LagrangianFrame) -> float:
    """Operator-norm distance |U(L1) - U(L2)| between subspaces."""
    if f1.m != f2.m:
        raise errors.DimensionMismatch("frames of different half-dimension")
    return float(np.linalg.norm(f1.unitary - f2.unitary, 2))


def _relative_gaps(f1: LagrangianFrame, f2: LagrangianFrame):
    W = f2.unitary.conj().T @ f1.unitary
    s = np.linalg.svd(W - np.eye(f1.m), compute_uv=False)
    return s  # descending


def intersection_dim(f1: LagrangianFrame, f2: LagrangianFrame,
                     tau_rank: float = TAU_RANK) -> int:
    """dim(L1 ∩ L2) via the kernel of U(L2)^{-1} U(L1) - I."""
    if f1.m != f2.m:
        raise errors.DimensionMismatch("frames of different half-dimension")
    s = _relative_gaps(f1, f2)
    return int(np.sum(s <= tau_rank * max(1.0, s[0])))


def intersection_report(f1: LagrangianFrame, f2: LagrangianFrame,
                        tau_rank: float = TAU_RANK) -> dict:
    """Intersection dimension plus the singular values bracketing the
    accept/reject threshold, so callers can detect rank ambiguity."""
    s = _relative_gaps(f1, f2)
    thr = tau_rank * max(1.0, s[0])
    accepted = s[s <= thr]
    rejected = s[s > thr]
    return {
        "dim": int(accepted.size),
        "threshold": float(thr),
        "largest_accepted": float(accepted.max()) if accepted.size else 0.0,
        "smallest_rejected": float(rejected.min()) if rejected.size else float("inf"),
    }


def intersection_basis(f1: LagrangianFrame, f2: LagrangianFrame,
                       tau_rank: float = TAU_RANK) -> np.ndarray:
    """Orthonormal columns spanning L1 ∩ L2, computed directly from the
    stacked-frame nullspace (independent of the unitary route)."""
    Z1, Z2 = f1.orthonormal, f2.orthonormal
    stacked = np.hstack([Z1, -Z2])
    _, s, vh = np.linalg.svd(stacked)
    thr = tau_rank * max(1.0, s[0])
    null = vh.conj().T[:, np.sum(s > thr):]
    if null.shape[1] == 0:
        return np.zeros((2 * f1.m, 0), dtype=complex)
    vecs = Z1 @ null[: f1.m]
    return _orth(vecs)


def graph_lagrangian(M, *, tau_symp: float = TAU_SYMP) -> LagrangianFrame:
    """Frame of the graph {(v, Mv)} of a symplectic matrix, expressed in
    the standard basis.  For M = [[D1, D2], [D3, D4]] the frame is
    [-I, 0; D1, D2; 0, I; D3, D4]."""
    M = np.asarray(getattr(M, "M", M))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise errors.DimensionMismatch("symplectic matrix must be 2n x 2n")
    n = M.shape[0] // 2
    J = jmat(n)
    defect = np.linalg.norm(M.T @ J @ M - J, 2)
    scale = max(1.0, np.linalg.norm(M, 2) ** 2)
    if defect > tau_symp * scale:
        raise errors.NotSymplectic(
            f"M^T J M - J has relative norm {defect / scale:.3e}")
    D1, D2 = M[:n, :n], M[:n, n:]
    D3, D4 = M[n:, :n], M[n:, n:]
    I, Zr = np.eye(n), np.zeros((n, n))
    X = np.block([[-I, Zr], [D1, D2]])
    Y = np.block([[Zr, I], [D3, D4]])
    return validate_frame(np.vstack([X, Y]), 2 * n)


def validate_symplectic(M, *, tau_symp: float = TAU_SYMP) -> SymplecticMat:
    M = np.asarray(M, dtype=float)
    n = M.shape[0] // 2
    J = jmat(n)
    defect = np.linalg.norm(M.T @ J @ M - J, 2)
    if defect > tau_symp * max(1.0, np.linalg.norm(M, 2) ** 2):
        raise errors.NotSymplectic("matrix fails M^T J M = J")
    return SymplecticMat(n, M)


def apply_symplectic(M, frame: LagrangianFrame, *,
                     tau_symp: float = TAU_SYMP) -> LagrangianFrame:
    """Push a frame forward by a (complex) symplectic map with M*JM = J."""
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (2 * frame.m, 2 * frame.m):
        raise errors.DimensionMismatch("conjugator size does not match frame")
    J = jmat(frame.m)
    defect = np.linalg.norm(M.conj().T @ J @ M - J, 2)
    if defect > tau_symp * max(1.0, np.linalg.norm(M, 2) ** 2):
        raise errors.NotSymplectic("conjugator fails M*JM = J")
    return validate_frame(M @ frame.Z, frame.m)


def direct_sum(f1: LagrangianFrame, f2: LagrangianFrame) -> LagrangianFrame:
    """Frame of L1 ⊕ L2 inside the direct sum of the two symplectic spaces."""
    m = f1.m + f2.m
    X = np.zeros((m, m), dtype=complex)
    Y = np.zeros((m, m), dtype=complex)
    X[:f1.m, :f1.m], X[f1.m:, f1.m:] = f1.X, f2.X
    Y[:f1.m, :f1.m], Y[f1.m:, f1.m:] = f1.Y, f2.Y
    return validate_frame(np.vstack([X, Y]), m)


def canonical_form(frame: LagrangianFrame, *,
                   tau_rank: float = TAU_RANK) -> CanonicalForm:
    """Split a boundary condition into its Dirichlet intersection (dimension
    r) and the Hermitian matrix A acting on the complement.

    The relation r + k0 = m is structural: the k0-dimensional piece is the
    graph {(Au, u)} over the orthocomplement of the Dirichlet intersection.
    Raises RankAmbiguous when singular values of U - I straddle the
    threshold within a factor of ten on either side.
    """
    U = frame.unitary
    m = frame.m
    _, s, vh = np.linalg.svd(U - np.eye(m))
    thr = tau_rank * max(1.0, s[0])
    if np.any((s > thr / 10) & (s < thr * 10)):
        raise errors.RankAmbiguous(
            "singular values straddle the rank threshold; adjust tau_rank")
    r = int(np.sum(s <= thr))
    V = vh.conj().T
    V1 = V[:, m - r:]   # kernel of U - I
    V2 = V[:, :m - r]
    k0 = m - r
    if k0 > 0:
        Ut = V2.conj().T @ U @ V2
        A = 1j * np.linalg.solve(Ut - np.eye(k0), Ut + np.eye(k0))
        A = 0.5 * (A + A.conj().T)
    else:
        A = np.zeros((0, 0), dtype=complex)
    W = np.hstack([V1, V2])
    return CanonicalForm(m=m, r=r, A=A, basis=W)


def frame_from_canonical(cf: CanonicalForm, *,
                         tau_herm: float = 1e-8) -> LagrangianFrame:
    """Rebuild the frame [I_r ⊕ A; 0 ⊕ I_{k0}] conjugated by the stored
    basis.  Columns are normalized so arbitrarily large |A| stays well
    conditioned."""
    A = np.asarray(cf.A, dtype=np.complex128)
    k0 = cf.k0
    if A.shape != (k0, k0):
        raise errors.DimensionMismatch(f"A must be {k0}x{k0}")
    if k0 and np.linalg.norm(A - A.conj().T, 2) > tau_herm * max(1.0, np.linalg.norm(A, 2)):
        raise errors.NotHermitian("A is not Hermitian within tolerance")
    r, m = cf.r, cf.m
    X0 = np.zeros((m, m), dtype=complex)
    Y0 = np.zeros((m, m), dtype=complex)
    X0[:r, :r] = np.eye(r)
    X0[r:, r:] = A
    Y0[r:, r:] = np.eye(k0)
    Z = np.vstack([cf.basis @ X0, cf.basis @ Y0])
    Z = Z / np.linalg.norm(Z, axis=0)
    return validate_frame(Z, m)


# ---------------------------------------------------------------------------
# serialization

def _mat_to_pairs(M: np.ndarray) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(M, complex).ravel()]


def _pairs_to_mat(pairs, rows: int, cols: int) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in pairs])
    if flat.size != rows * cols:
        raise errors.ParseError(f"expected {rows * cols} entries, got {flat.size}")
    return flat.reshape(rows, cols)


def frame_to_json(frame: LagrangianFrame) -> dict:
    return {"m": frame.m, "z": _mat_to_pairs(frame.Z)}


def frame_from_json(obj: dict) -> LagrangianFrame:
    m = int(obj["m"])
    return validate_frame(_pairs_to_mat(obj["z"], 2 * m, m), m)


def canonical_to_json(cf: CanonicalForm) -> dict:
    return {"m": cf.m, "r": cf.r,
            "A": _mat_to_pairs(cf.A), "basis": _mat_to_pairs(cf.basis)}


def canonical_from_json(obj: dict) -> CanonicalForm:
    m, r = int(obj["m"]), int(obj["r"])
    k0 = m - r
    A = _pairs_to_mat(obj["A"], k0, k0)
    basis = _pairs_to_mat(obj["basis"], m, m) if "basis" in obj else np.eye(m, dtype=complex)
    return CanonicalForm(m=m, r=r, A=A, basis=basis)


def boundary_condition_from_json(obj, n: int) -> LagrangianFrame:
    """Parse a boundary-condition description against a problem of size n.

    Accepted forms: {"named": "dirichlet"|"neumann"},
    {"canonical": {"r": ..., "A": [...], "basis": [...]?}},
    {"frame": {"m": ..., "z": [...]}}, {"graph": [[...]]} (real symplectic).
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    m = 2 * n
    if "named" in obj:
        name = obj["named"]
        if name == "dirichlet":
            return dirichlet(m)
        if name == "neumann":
            return neumann(m)
        raise errors.ParseError(f"unknown named boundary condition {name!r}")
    if "canonical" in obj:
        c = dict(obj["canonical"])
        c.setdefault("m", m)
        return frame_from_canonical(canonical_from_json(c))
    if "frame" in obj:
        f = frame_from_json(obj["frame"])
        if f.m != m:
            raise errors.DimensionMismatch(f"frame has m={f.m}, problem needs {m}")
        return f
    if "graph" in obj:
        M = np.asarray(obj["graph"], dtype=float)
        return graph_lagrangian(M)
    raise errors.ParseError("boundary condition needs one of named/canonical/frame/graph")
