"""Matrix Sturm-Liouville problems: monodromy, shooting and a Galerkin oracle.

The system -(P x' + Q x)' + Q^T x' + R x = lambda D x on [0, T] is recast
as the linear Hamiltonian flow z' = J B_lambda(t) z in z = (P x' + Q x, x).
Eigenvalues for a boundary condition Lambda (a Lagrangian frame with
half-dimension 2n) are detected as intersections of the graph of the
time-T fundamental solution with Lambda, located by tracking relative
eigenphases over the spectral parameter; an independent min-max oracle
assembles the associated quadratic form on piecewise-linear elements
augmented with the explicit linear boundary functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh, expm

from . import errors
from .lagrangian import (LagrangianFrame, TAU_RANK, TAU_SYMP, canonical_form,
                         dirichlet, graph_lagrangian, intersection_dim, jmat,
                         s_matrix, validate_frame)
from .maslov import (TAU_EIG, LagrangianPath, eigenangles, match_step,
                     maslov_index, track_branches, _wrap)

TOL_LAMBDA = 1e-10     # relative eigenvalue tolerance
TOL_INTEGRATOR = 1e-10
EXP_LIMIT = 6.0        # hyperbolic exponent per chunk in stabilized propagation


# ---------------------------------------------------------------------------
# coefficients

@dataclass(frozen=True, eq=False)
class CoefficientFn:
    """Matrix coefficient on [0, T]: constant, polynomial in t, or
    piecewise constant (breaks include both interval endpoints)."""

    kind: str
    data: np.ndarray          # (n,n) | (deg+1, n, n) | (pieces, n, n)
    breaks: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self.data
        if self.kind == "polynomial":
            out = np.zeros_like(self.data[0])
            for c in self.data[::-1]:
                out = out * t + c
            return out
        idx = int(np.searchsorted(self.breaks, t, side="right") - 1)
        idx = min(max(idx, 0), self.data.shape[0] - 1)
        return self.data[idx]

    def at(self, ts) -> np.ndarray:
        """Vectorized evaluation, shape (len(ts), n, n)."""
        ts = np.asarray(ts, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(self.data, (ts.size, self.n, self.n)).copy()
        if self.kind == "polynomial":
            out = np.zeros((ts.size, self.n, self.n))
            for c in self.data[::-1]:
                out = out * ts[:, None, None] + c
            return out
        idx = np.clip(np.searchsorted(self.breaks, ts, side="right") - 1,
                      0, self.data.shape[0] - 1)
        return self.data[idx]

    def is_constant(self) -> bool:
        return self.kind == "constant"

    def to_json(self) -> dict:
        obj = {"kind": self.kind, "data": np.asarray(self.data).tolist()}
        if self.breaks is not None:
            obj["breaks"] = np.asarray(self.breaks).tolist()
        return obj


def constant(mat) -> CoefficientFn:
    M = np.atleast_2d(np.asarray(mat, dtype=float))
    return CoefficientFn("constant", M)


def polynomial(coeffs) -> CoefficientFn:
    C = np.asarray(coeffs, dtype=float)
    if C.ndim == 1:  # scalar polynomial coefficients, low order first
        C = C[:, None, None]
    return CoefficientFn("polynomial", C)


def piecewise(breaks, mats) -> CoefficientFn:
    b = np.asarray(breaks, dtype=float)
    M = np.asarray(mats, dtype=float)
    if M.ndim == 2:
        M = M[:, None, None] if M.shape[1] != M.shape[0] else M[None]
    if M.shape[0] != b.size - 1:
        raise ValueError("need one matrix per piece")
    return CoefficientFn("piecewise", M, breaks=b)


def coefficient_from_json(obj) -> CoefficientFn:
    if isinstance(obj, (int, float)):
        return constant([[float(obj)]])
    try:
        kind = obj["kind"]
        if kind == "constant":
            return constant(obj["data"])
        if kind == "polynomial":
            return polynomial(obj["data"])
        if kind == "piecewise":
            return piecewise(obj["breaks"], obj["data"])
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.ParseError(f"bad coefficient entry: {exc}") from exc
    raise errors.ParseError(f"unknown coefficient kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SLProblem:
    """Problem data (n, T, P, Q, R, D); P, D symmetric positive definite and
    R symmetric, spot-checked on a validation grid."""

    n: int
    T: float
    P: CoefficientFn
    Q: CoefficientFn
    R: CoefficientFn
    D: CoefficientFn
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def validate(self, grid_points: int = 17) -> "SLProblem":
        if self.T <= 0 or self.n < 1:
            raise ValueError("need T > 0 and n >= 1")
        ts = np.linspace(0.0, self.T, grid_points)
        for name, coef, spd in (("P", self.P, True), ("R", self.R, False),
                                ("D", self.D, True)):
            vals = coef.at(ts)
            if vals.shape[-1] != self.n:
                raise errors.DimensionMismatch(f"{name} is not {self.n}x{self.n}")
            sym = np.max(np.abs(vals - np.transpose(vals, (0, 2, 1))))
            if sym > 1e-10 * max(1.0, np.max(np.abs(vals))):
                raise ValueError(f"{name}(t) is not symmetric")
            if spd and np.min(np.linalg.eigvalsh(vals)) <= 0:
                raise ValueError(f"{name}(t) is not positive definite on the grid")
        if self.Q.at(ts).shape[-1] != self.n:
            raise errors.DimensionMismatch("Q size mismatch")
        return self

    def scale(self) -> float:
        """Natural spectral scale (pi/T)^2, used for windows and margins."""
        return (math.pi / self.T) ** 2

    def to_json(self) -> dict:
        return {"n": self.n, "T": self.T,
                "P": self.P.to_json(), "Q": self.Q.to_json(),
                "R": self.R.to_json(), "D": self.D.to_json()}


def problem_from_json(obj) -> SLProblem:
    try:
        return SLProblem(n=int(obj["n"]), T=float(obj["T"]),
                         P=coefficient_from_json(obj["P"]),
                         Q=coefficient_from_json(obj["Q"]),
                         R=coefficient_from_json(obj["R"]),
                         D=coefficient_from_json(obj["D"])).validate()
    except KeyError as exc:
        raise errors.ParseError(f"problem file missing field {exc}") from exc


# ---------------------------------------------------------------------------
# Hamiltonian form and monodromy

def b_lambda(p: SLProblem, t: float, lam: float) -> np.ndarray:
    """Symmetric block matrix of the first-order form at time t:
    [[P^-1, -P^-1 Q], [-Q^T P^-1, Q^T P^-1 Q - R + lambda D]]."""
    P = p.P(t)
    s = np.linalg.svd(P, compute_uv=False)
    if s[-1] <= 1e-12 * max(1.0, s[0]):
        raise errors.SingularP(f"P({t}) is numerically singular")
    Pinv = np.linalg.inv(P)
    Q = p.Q(t)
    B = np.block([[Pinv, -Pinv @ Q],
                  [-Q.T @ Pinv, Q.T @ Pinv @ Q - p.R(t) + lam * p.D(t)]])
    return 0.5 * (B + B.T)


def _b_lambda_factory(p: SLProblem, lam: float):
    """Fast evaluator t -> B_lambda(t) for integrator inner loops: constant
    blocks are precomputed and the matrix is filled by slices (P positive
    definiteness is already grid-checked at problem validation)."""
    n = p.n
    upper_const = p.P.is_constant() and p.Q.is_constant()
    lower_const = p.R.is_constant() and p.D.is_constant() and p.Q.is_constant() \
        and p.P.is_constant()

    def upper(t):
        P = p.P(t)
        Pinv = np.linalg.inv(P)
        Q = p.Q(t)
        return Pinv, -Pinv @ Q, Q.T @ Pinv @ Q

    def lower(t, qpq):
        return qpq - p.R(t) + lam * p.D(t)

    B = np.empty((2 * n, 2 * n))
    if upper_const:
        A11, A12, QPQ = upper(0.0)
        B[:n, :n] = A11
        B[:n, n:] = A12
        B[n:, :n] = A12.T
        if lower_const:
            B[n:, n:] = lower(0.0, QPQ)

            def eval_b(t):
                return B
        else:
            def eval_b(t):
                B[n:, n:] = lower(t, QPQ)
                return B
    else:
        def eval_b(t):
            A11, A12, QPQ = upper(t)
            B[:n, :n] = A11
            B[:n, n:] = A12
            B[n:, :n] = A12.T
            B[n:, n:] = lower(t, QPQ)
            return B

    return eval_b


@dataclass(eq=False)
class Monodromy:
    lam: float
    gamma: np.ndarray
    step_stats: dict
    symp_defect: float


def _merged_breaks(p: SLProblem):
    """Breakpoints for exact exponential propagation, or None when some
    coefficient varies continuously in t."""
    pts = {0.0, p.T}
    for c in (p.P, p.Q, p.R, p.D):
        if c.kind == "piecewise":
            pts.update(float(b) for b in c.breaks if 0.0 < b < p.T)
        elif c.kind == "polynomial":
            return None
    return np.array(sorted(pts))


def _symp_defect(gamma: np.ndarray, n: int) -> float:
    J = jmat(n)
    return float(np.linalg.norm(gamma.T @ J @ gamma - J, 2)
                 / max(1.0, np.linalg.norm(gamma, 2) ** 2))


def monodromy(p: SLProblem, lam: float, tol: float = TOL_INTEGRATOR, *,
              method: str = "auto", tau_symp: float = TAU_SYMP) -> Monodromy:
    """Fundamental solution gamma(T) of z' = J B_lambda(t) z, gamma(0) = I.

    Constant and piecewise-constant coefficients propagate by exact matrix
    exponentials; otherwise an adaptive embedded Runge-Kutta integrator runs
    at local tolerance ``tol``.  The symplectic defect
    |gamma^T J gamma - J| / max(1, |gamma|^2) is measured post hoc; on breach
    the integrator tolerance is tightened once before SymplecticDefect is
    raised.
    """
    n, J = p.n, jmat(p.n)
    stats: dict = {}
    breaks = _merged_breaks(p) if method in ("auto", "expm") else None
    use_expm = method == "expm" or (method == "auto" and breaks is not None)
    if method == "expm" and breaks is None:
        raise ValueError("exact exponential stepping needs piecewise-constant data")

    def integrate(rk_tol: float) -> np.ndarray:
        if use_expm:
            gamma = np.eye(2 * n)
            for a, b in zip(breaks[:-1], breaks[1:]):
                tm = 0.5 * (a + b)
                gamma = expm((b - a) * (J @ b_lambda(p, tm, lam))) @ gamma
            stats["method"] = "expm"
            stats["steps"] = len(breaks) - 1
            return gamma

        eval_b = _b_lambda_factory(p, lam)

        def rhs(t, y):
            return (J @ eval_b(t) @ y.reshape(2 * n, 2 * n)).ravel()

        sol = solve_ivp(rhs, (0.0, p.T), np.eye(2 * n).ravel(),
                        method="DOP853", rtol=rk_tol, atol=rk_tol)
        if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
            raise errors.IntegratorDivergence(
                f"integration failed at lambda={lam}: {sol.message}")
        stats["method"] = "rk"
        stats["nfev"] = int(sol.nfev)
        return sol.y[:, -1].reshape(2 * n, 2 * n)

    gamma = integrate(tol)
    if not np.all(np.isfinite(gamma)):
        raise errors.IntegratorDivergence(f"overflow at lambda={lam}")
    defect = _symp_defect(gamma, n)
    if defect > tau_symp and not use_expm:
        gamma = integrate(tol * 1e-2)
        defect = _symp_defect(gamma, n)
        stats["tightened"] = True
    if defect > tau_symp:
        raise errors.SymplecticDefect(
            f"symplectic defect {defect:.3e} exceeds {tau_symp:.1e}")
    return Monodromy(lam=lam, gamma=gamma, step_stats=stats, symp_defect=defect)


def _exponent_estimate(p: SLProblem, lam: float) -> float:
    """T times the largest real part over eig(J B_lambda(t)) on a sample
    grid: the hyperbolic growth exponent of the flow."""
    J = jmat(p.n)
    ts = np.linspace(0.0, p.T, 9)
    worst = max(float(np.max(np.linalg.eigvals(J @ b_lambda(p, float(t), lam)).real))
                for t in ts)
    return max(worst, 0.0) * p.T


def _chunk_propagator(p: SLProblem, lam: float, a: float, b: float,
                      breaks, tol: float) -> np.ndarray:
    """Fundamental solution over [a, b]: exact exponential products for
    piecewise-constant data, adaptive Runge-Kutta otherwise."""
    n, J = p.n, jmat(p.n)
    if breaks is not None:
        pts = [a] + [float(x) for x in breaks if a < x < b] + [b]
        Phi = np.eye(2 * n)
        for lo_t, hi_t in zip(pts[:-1], pts[1:]):
            tm = 0.5 * (lo_t + hi_t)
            Phi = expm((hi_t - lo_t) * (J @ b_lambda(p, tm, lam))) @ Phi
        return Phi

    eval_b = _b_lambda_factory(p, lam)

    def rhs(t, y):
        return (J @ eval_b(t) @ y.reshape(2 * n, 2 * n)).ravel()

    sol = solve_ivp(rhs, (a, b), np.eye(2 * n).ravel(), method="DOP853",
                    rtol=tol, atol=tol)
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        raise errors.IntegratorDivergence(
            f"chunk integration failed at lambda={lam}: {sol.message}")
    return sol.y[:, -1].reshape(2 * n, 2 * n)


def _stabilized_graph(p: SLProblem, lam: float,
                      tol: float = TOL_INTEGRATOR) -> LagrangianFrame:
    """Graph frame of gamma(T) in strongly hyperbolic regimes.  The frame
    [v; gamma(t) v] is advanced chunk by chunk (each chunk of bounded
    growth exponent) and re-orthonormalized, so the represented subspace
    stays well conditioned no matter how negative lambda is."""
    n = p.n
    expo = _exponent_estimate(p, lam)
    chunks = max(2, int(math.ceil(expo / EXP_LIMIT)))
    edges = np.linspace(0.0, p.T, chunks + 1)
    breaks = _merged_breaks(p)
    Z = np.vstack([np.eye(2 * n), np.eye(2 * n)]).astype(complex)
    for a, b in zip(edges[:-1], edges[1:]):
        Phi = _chunk_propagator(p, lam, float(a), float(b), breaks, tol)
        Z = np.vstack([Z[:2 * n], Phi @ Z[2 * n:]])
        Z, _ = np.linalg.qr(Z)
    Z = s_matrix(n) @ Z
    return validate_frame(Z, 2 * n)


def _stab_threshold(p: SLProblem) -> float:
    """Spectral parameter below which graph propagation is stabilized.

    Uses the sqrt growth of the hyperbolic exponent in |lambda| calibrated
    at one reference point, with a conservative margin; misjudgments are
    caught by the rank check of the direct path and rerouted.
    """
    key = ("stab_threshold",)
    hit = p._cache.get(key)
    if hit is None:
        lam_ref = -4.0 * p.scale() - 1.0
        e_ref = _exponent_estimate(p, lam_ref)
        if e_ref < 1e-9:
            hit = -1e15
        else:
            hit = lam_ref * (0.5 * EXP_LIMIT / e_ref) ** 2
            hit = min(hit, -0.25 * p.scale())
        p._cache[key] = hit
    return hit


def monodromy_graph(p: SLProblem, lam: float, *,
                    stabilize: str = "auto") -> LagrangianFrame:
    """Lagrangian graph of the time-T flow at spectral parameter lambda,
    expressed in the standard basis; results are cached on the problem."""
    key = ("graph", float(lam))
    hit = p._cache.get(key)
    if hit is not None:
        return hit
    if stabilize == "always" or (stabilize == "auto" and lam < _stab_threshold(p)):
        frame = _stabilized_graph(p, lam)
    else:
        try:
            gamma = monodromy(p, lam).gamma
            pre = np.vstack([np.eye(2 * p.n), gamma])
            frame = validate_frame(s_matrix(p.n) @ pre, 2 * p.n)
        except (errors.RankDeficient, errors.IntegratorDivergence):
            frame = _stabilized_graph(p, lam)
    frame.unitary  # materialize while the frame is hot
    if len(p._cache) > 300000:
        p._cache.clear()
    p._cache[key] = frame
    return frame


def eigen_multiplicity(p: SLProblem, frame0: LagrangianFrame, lam: float,
                       tau_rank: float = TAU_RANK) -> int:
    """Geometric multiplicity of lambda as an eigenvalue for the boundary
    condition frame0: dim(graph(T, lambda) ∩ frame0)."""
    return intersection_dim(monodromy_graph(p, lam), frame0, tau_rank)


# ---------------------------------------------------------------------------
# shooting

@dataclass(eq=False)
class Spectrum:
    entries: list            # [(lambda, multiplicity)] ascending
    method: str
    window: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        """Eigenvalues expanded by multiplicity, ascending."""
        out = []
        for lam, mult in self.entries:
            out.extend([lam] * mult)
        return np.array(out)

    def value(self, j: int) -> float:
        vals = self.values
        if not 1 <= j <= vals.size:
            raise IndexError(f"eigenvalue index {j} outside computed range")
        return float(vals[j - 1])

    def count(self) -> int:
        return int(sum(m for _, m in self.entries))

    def csv_rows(self):
        resid = self.diagnostics.get("residuals", {})
        j = 1
        for lam, mult in self.entries:
            for _ in range(mult):
                yield [j, lam, mult, self.method, resid.get(lam, 0.0)]
                j += 1


def _graph_path(p: SLProblem, lo: float, hi: float,
                initial_points: int) -> LagrangianPath:
    ev = lambda lam: monodromy_graph(p, lam)
    return LagrangianPath.from_evaluator(lo, hi, ev, num=initial_points)


def eigenvalues_shooting(p: SLProblem, frame0: LagrangianFrame,
                         window, *,
                         tol_lambda: float = TOL_LAMBDA,
                         tau_eig: float = TAU_EIG,
                         initial_points: int = 33,
                         tau_rank: float = TAU_RANK,
                         max_crossings: Optional[int] = None) -> Spectrum:
    """Eigenvalues in the window for boundary condition frame0.

    Relative eigenphases of the flow graph are tracked over lambda; every
    passage of a lifted branch through a multiple of 2pi is bracketed and
    bisected to relative tolerance ``tol_lambda``.  Nearby crossings merge
    into one eigenvalue whose multiplicity is certified independently by
    ``eigen_multiplicity``; a crossing no intersection test confirms raises
    CrossingUnresolved.
    """
    if frame0.m != 2 * p.n:
        raise errors.DimensionMismatch("boundary condition has wrong half-dimension")
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    branches = track_branches(frame0, _graph_path(p, lo, hi, initial_points),
                              tau_eig=tau_eig)
    ts, theta = branches.ts, branches.theta
    U0c = frame0.unitary.conj().T

    def raw_angles_at(lam: float) -> np.ndarray:
        return eigenangles(U0c @ monodromy_graph(p, lam).unitary)

    two_pi = 2.0 * math.pi
    crossings = []
    residuals = []
    for k in range(len(ts) - 1):
        if max_crossings is not None and len(crossings) >= max_crossings:
            break
        for j in range(theta.shape[1]):
            lo_v, hi_v = theta[k, j], theta[k + 1, j]
            a, b = (lo_v, hi_v) if lo_v <= hi_v else (hi_v, lo_v)
            for c in range(math.floor(a / two_pi) + 1, math.floor(b / two_pi) + 1):
                target = c * two_pi
                t_lo, t_hi = float(ts[k]), float(ts[k + 1])
                lift_anchor = theta[k]
                atol = 0.01 * tol_lambda * max(1.0, abs(t_lo), abs(t_hi))

                # anchored single-step lift: valid inside a verified interval
                def branch_gap(t, j=j, lift_anchor=lift_anchor, target=target):
                    lift, _ = match_step(lift_anchor, raw_angles_at(float(t)))
                    return lift[j] - target

                g_lo = theta[k, j] - target
                g_hi = theta[k + 1, j] - target
                if g_lo == 0.0:
                    lam_star = t_lo
                elif g_hi == 0.0:
                    lam_star = t_hi
                else:
                    lam_star = float(brentq(branch_gap, t_lo, t_hi, xtol=atol))
                crossings.append(lam_star)
                residuals.append(float(np.min(np.abs(_wrap(raw_angles_at(lam_star))))))

    order = np.argsort(crossings)
    crossings = [crossings[i] for i in order]
    residuals = [residuals[i] for i in order]
    entries = []
    merged_resid = {}
    cluster_tol = lambda lam: 100.0 * tol_lambda * max(1.0, abs(lam))
    i = 0
    while i < len(crossings):
        group = [crossings[i]]
        res = [residuals[i]]
        while i + 1 < len(crossings) and crossings[i + 1] - group[-1] <= cluster_tol(group[-1]):
            i += 1
            group.append(crossings[i])
            res.append(residuals[i])
        lam_bar = float(np.mean(group))
        mult = eigen_multiplicity(p, frame0, lam_bar, tau_rank=max(tau_rank, 1e-7))
        if mult == 0:
            raise errors.CrossingUnresolved(
                f"branch crossing at lambda={lam_bar} has no certified intersection")
        entries.append((lam_bar, mult))
        merged_resid[lam_bar] = max(res)
        i += 1

    diag = {"residuals": merged_resid,
            "branch_crossings": len(crossings),
            "refinement_depth": branches.refinement_depth}
    return Spectrum(entries=entries, method="shooting", window=(lo, hi),
                    diagnostics=diag)


def count_eigenvalues(p: SLProblem, frame0: LagrangianFrame,
                      a: float, b: float, *,
                      tau_eig: float = TAU_EIG,
                      initial_points: int = 33) -> int:
    """Total multiplicity in (a, b) from the index of the lambda-path of
    flow graphs; endpoints must stay off the spectrum."""
    if frame0.m != 2 * p.n:
        raise errors.DimensionMismatch("boundary condition has wrong half-dimension")
    for end in (a, b):
        ang = np.abs(_wrap(eigenangles(
            frame0.unitary.conj().T @ monodromy_graph(p, end).unitary)))
        if np.min(ang) <= tau_eig:
            raise errors.EndpointOnSpectrum(f"lambda={end} is an eigenvalue")
    res = maslov_index(frame0, _graph_path(p, a, b, 33), tau_eig=tau_eig)
    return int(res.index)


def _merge_entries(entries, tol_lambda):
    out = []
    for lam, mult in sorted(entries):
        if out and lam - out[-1][0] <= 100.0 * tol_lambda * max(1.0, abs(lam)):
            out[-1] = (out[-1][0], max(out[-1][1], mult))
        else:
            out.append((lam, mult))
    return out


def eigenvalues_up_to(p: SLProblem, frame0: LagrangianFrame, count: int, *,
                      floor: Optional[float] = None,
                      tol_lambda: float = TOL_LAMBDA,
                      initial_points: int = 33) -> Spectrum:
    """First ``count`` eigenvalues: the window grows upward in segments
    until enough crossings are found, and extends downward until three
    consecutive extensions of geometrically growing width add nothing
    (or the optional floor is reached)."""
    s = p.scale()
    lo = -6.0 * s
    hi = max(4.0 * s, s * float(count + 1) ** 2 * 0.7)
    spec = eigenvalues_shooting(p, frame0, (lo, hi), tol_lambda=tol_lambda,
                                initial_points=initial_points,
                                max_crossings=count + 4)
    entries = list(spec.entries)
    grow = 0
    while sum(m for _, m in entries) < count:
        new_hi = hi * 1.6 + 2.0 * s
        missing = count - sum(m for _, m in entries)
        extra = eigenvalues_shooting(p, frame0, (hi, new_hi),
                                     tol_lambda=tol_lambda,
                                     initial_points=max(9, initial_points // 2),
                                     max_crossings=missing + 4)
        entries = _merge_entries(entries + extra.entries, tol_lambda)
        hi = new_hi
        grow += 1
        if grow > 60:
            raise errors.CrossingUnresolved("could not find the requested count")
    quiet = 0
    width = max(hi - lo, 4.0 * s)
    while quiet < 3:
        width *= 2.0
        new_lo = lo - width
        if floor is not None and new_lo < floor:
            break
        added = eigenvalues_shooting(p, frame0, (new_lo, lo), tol_lambda=tol_lambda,
                                     initial_points=17)
        if added.count() == 0:
            quiet += 1
        else:
            quiet = 0
            entries = _merge_entries(added.entries + entries, tol_lambda)
        lo = new_lo
    return Spectrum(entries=entries, method="shooting", window=(lo, hi),
                    diagnostics=spec.diagnostics)


def dirichlet_spectrum(p: SLProblem, count: int, *,
                       tol_lambda: float = TOL_LAMBDA) -> Spectrum:
    """Dirichlet eigenvalues lambda_1 <= ... <= lambda_count, cached."""
    key = ("dirspec", count, tol_lambda)
    hit = p._cache.get(key)
    if hit is None:
        hit = eigenvalues_up_to(p, dirichlet(2 * p.n), count,
                                tol_lambda=tol_lambda)
        p._cache[key] = hit
    return hit


# ---------------------------------------------------------------------------
# Galerkin oracle

_GAUSS_X = np.array([0.5 - math.sqrt(3.0 / 5.0) / 2, 0.5,
                     0.5 + math.sqrt(3.0 / 5.0) / 2])
_GAUSS_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def galerkin_spectrum(p: SLProblem, frame0: LagrangianFrame,
                      mesh_size: int, count: int, *,
                      tau_rank: float = TAU_RANK) -> Spectrum:
    """Lowest eigenvalues of the variational form against the D-weighted
    mass form, on vector hat functions over ``mesh_size`` uniform elements
    plus the k0 linear boundary functions carrying the trace space of the
    boundary condition.  The boundary contribution -<A b(xi), b(eta)> is
    exact because the boundary functions are globally linear.

    Values converge to the shooting eigenvalues from above at second order
    in the mesh width.
    """
    if frame0.m != 2 * p.n:
        raise errors.DimensionMismatch("boundary condition has wrong half-dimension")
    n, T, N = p.n, p.T, int(mesh_size)
    if N < 2:
        raise errors.MeshTooCoarse("need at least two elements")
    cf = canonical_form(frame0, tau_rank=tau_rank)
    k0 = cf.k0
    W2 = cf.basis[:, cf.r:]          # orthonormal basis of the trace space
    A = cf.A                         # boundary form in that basis
    dim = n * (N - 1) + k0
    if count > dim:
        raise errors.MeshTooCoarse(f"requested {count} values from a {dim}-dim space")

    h = T / N
    tq = ((np.arange(N)[:, None] + _GAUSS_X[None, :]) * h).ravel()  # (N*3,)
    w = _GAUSS_W * h                                                # (3,)
    Pq = p.P.at(tq).reshape(N, 3, n, n)
    Qq = p.Q.at(tq).reshape(N, 3, n, n)
    Rq = p.R.at(tq).reshape(N, 3, n, n)
    Dq = p.D.at(tq).reshape(N, 3, n, n)

    phi = np.stack([1.0 - _GAUSS_X, _GAUSS_X])      # (2, 3) shape values
    dphi = np.array([-1.0 / h, 1.0 / h])            # (2,) shape slopes

    K = np.zeros((dim, dim), dtype=complex)
    M = np.zeros((dim, dim), dtype=complex)

    def dof(node: int) -> slice:
        return slice((node - 1) * n, node * n)

    # hat-hat blocks: test side a, trial side b, nodes e+a / e+b
    hatK = {}
    hatM = {}
    for a in range(2):
        for b in range(2):
            kb = (dphi[a] * dphi[b] * np.einsum('q,eqij->eij', w, Pq)
                  + dphi[a] * np.einsum('q,q,eqij->eij', w, phi[b], Qq)
                  + dphi[b] * np.einsum('q,q,eqji->eij', w, phi[a], Qq)
                  + np.einsum('q,q,q,eqij->eij', w, phi[a], phi[b], Rq))
            mb = np.einsum('q,q,q,eqij->eij', w, phi[a], phi[b], Dq)
            hatK[(a, b)] = kb
            hatM[(a, b)] = mb

    for a in range(2):
        for b in range(2):
            for e in range(N):
                na, nb = e + a, e + b
                if 1 <= na <= N - 1 and 1 <= nb <= N - 1:
                    K[dof(na), dof(nb)] += hatK[(a, b)][e]
                    M[dof(na), dof(nb)] += hatM[(a, b)][e]

    if k0:
        base = n * (N - 1)
        av = W2[:n, :].T                     # (k0, n): traces at t = 0
        bv = W2[n:, :].T                     # (k0, n): traces at t = T
        frac = (tq / T).reshape(N, 3)
        # psi[j] values at quadrature points, shape (k0, N, 3, n)
        psi = (av[:, None, None, :] * (1.0 - frac)[None, :, :, None]
               + bv[:, None, None, :] * frac[None, :, :, None])
        dpsi = (bv - av) / T                 # (k0, n) constant slopes

        # hat rows (test, real) against boundary columns (trial)
        for a in range(2):
            colv = (dphi[a] * np.einsum('q,eqij,kj->eki', w, Pq, dpsi)
                    + dphi[a] * np.einsum('q,eqij,keqj->eki', w, Qq, psi)
                    + np.einsum('q,q,eqji,kj->eki', w, phi[a], Qq, dpsi)
                    + np.einsum('q,q,eqij,keqj->eki', w, phi[a], Rq, psi))
            colm = np.einsum('q,q,eqij,keqj->eki', w, phi[a], Dq, psi)
            for e in range(N):
                node = e + a
                if 1 <= node <= N - 1:
                    K[dof(node), base:base + k0] += colv[e].T
                    M[dof(node), base:base + k0] += colm[e].T

        # boundary-boundary block
        for i in range(k0):
            pic = psi[i].conj()              # (N,3,n)
            dic = dpsi[i].conj()             # (n,)
            for jx in range(k0):
                K[base + i, base + jx] = (
                    np.einsum('q,eqij,i,j->', w, Pq, dic, dpsi[jx])
                    + np.einsum('q,eqij,i,eqj->', w, Qq, dic, psi[jx])
                    + np.einsum('q,eqji,eqi,j->', w, Qq, pic, dpsi[jx])
                    + np.einsum('q,eqij,eqi,eqj->', w, Rq, pic, psi[jx])
                    - A[i, jx])
                M[base + i, base + jx] = np.einsum('q,eqij,eqi,eqj->', w, Dq,
                                                   pic, psi[jx])

        # the form is Hermitian; mirror the hat-boundary coupling
        K[base:, :base] = K[:base, base:].conj().T
        M[base:, :base] = M[:base, base:].conj().T

    K = 0.5 * (K + K.conj().T)
    M = 0.5 * (M + M.conj().T)
    try:
        vals, vecs = eigh(K, M, subset_by_index=(0, count - 1), check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise errors.MassNotPositive(str(exc)) from exc
    except Exception as exc:  # scipy raises its own LinAlgError subclass
        if "positive definite" in str(exc) or "leading minor" in str(exc):
            raise errors.MassNotPositive(str(exc)) from exc
        raise
    v0 = vecs[:, 0]
    rayleigh = float((v0.conj() @ K @ v0).real / (v0.conj() @ M @ v0).real)
    entries = [(float(v), 1) for v in vals]
    return Spectrum(entries=entries, method="galerkin",
                    window=(float(vals[0]), float(vals[-1])),
                    diagnostics={"mesh": N, "dim": dim, "rayleigh_first": rayleigh})


# ---------------------------------------------------------------------------
# constant-weight reduction (test oracle for general D handling)

def weighted_reduction(p: SLProblem):
    """Transform a problem with constant weight D into an equivalent one
    with D = I (coefficients conjugated by D^{-1/2}), together with the map
    taking boundary-condition frames to the transformed convention.

    Used as a cross-check of the direct lambda-D treatment; spectra agree
    for corresponding boundary conditions.
    """
    if not p.D.is_constant():
        raise errors.DNotConstant("weight reduction needs constant D")
    Dm = p.D.data
    evals, V = np.linalg.eigh(Dm)
    if np.min(evals) <= 0:
        raise ValueError("D must be positive definite")
    Dh = V @ np.diag(np.sqrt(evals)) @ V.T          # D^{1/2}
    Dmh = V @ np.diag(1.0 / np.sqrt(evals)) @ V.T   # D^{-1/2}

    def conj(coef: CoefficientFn) -> CoefficientFn:
        if coef.kind == "constant":
            return constant(Dmh @ coef.data @ Dmh)
        if coef.kind == "polynomial":
            return polynomial(np.array([Dmh @ C @ Dmh for C in coef.data]))
        return piecewise(coef.breaks, np.array([Dmh @ C @ Dmh for C in coef.data]))

    reduced = SLProblem(n=p.n, T=p.T, P=conj(p.P), Q=conj(p.Q), R=conj(p.R),
                        D=constant(np.eye(p.n))).validate()

    n = p.n

    def bc_map(frame: LagrangianFrame) -> LagrangianFrame:
        MX = np.zeros((2 * n, 2 * n))
        MY = np.zeros((2 * n, 2 * n))
        MX[:n, :n] = Dmh
        MX[n:, n:] = Dmh
        MY[:n, :n] = Dh
        MY[n:, n:] = Dh
        Z = np.vstack([MX @ frame.X, MY @ frame.Y])
        return validate_frame(Z, 2 * n)

    return reduced, bc_map
