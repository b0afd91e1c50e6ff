"""Maslov index of Lagrangian paths via eigenphase tracking.

The index of a path Lambda(t) against a fixed Lambda_0 is computed from m
continuous angle lifts theta_j(t) of the spectrum of the relative unitary
U(Lambda_0)^{-1} U(Lambda(t)):

    index = sum_j E(theta_j(b) / 2pi) - E(theta_j(a) / 2pi),

with E the ceiling.  Tracking matches eigenphases between parameter
samples by minimal total circular displacement and bisects any interval
whose largest matched movement reaches pi/4, which keeps assignments
unambiguous for simple eigenvalues; colliding branches may be matched
arbitrarily within their cluster without changing the sum.  Endpoint
angles within ``tau_snap`` of a multiple of 2pi are treated as sitting
exactly on the singular cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from . import errors
from .lagrangian import (LagrangianFrame, dirichlet, direct_sum,
                         intersection_dim, lagrangian_from_unitary)
from . import sampling

TWO_PI = 2.0 * math.pi
STEP_BOUND = math.pi / 4  # refinement contract for unambiguous matching
TAU_EIG = 1e-8
TAU_SNAP = 1e-6
MAX_DEPTH = 48


def e_ceil(a: float) -> int:
    """E(a) = -floor(-a), i.e. the ceiling, as exact integer arithmetic."""
    return -math.floor(-a)


def eigenangles(U: np.ndarray) -> np.ndarray:
    """Eigenphases of a unitary matrix, unsorted, in [0, 2pi)."""
    w = np.linalg.eigvals(U)
    return np.mod(np.angle(w), TWO_PI)


def relative_angles(frame0: LagrangianFrame, frame: LagrangianFrame) -> np.ndarray:
    """Sorted eigenphases of U(L0)^{-1} U(L) in [0, 2pi).  The number of
    angles circularly within tau of 0 equals dim(L ∩ L0)."""
    if frame0.m != frame.m:
        raise errors.DimensionMismatch("frames of different half-dimension")
    return np.sort(eigenangles(frame0.unitary.conj().T @ frame.unitary))


@dataclass(frozen=True, eq=False)
class LagrangianPath:
    """Continuous path of Lagrangian subspaces on [a, b].

    ``samples`` seeds the tracker; ``evaluator`` (if given) produces frames
    at arbitrary parameters for adaptive refinement.
    """

    a: float
    b: float
    samples: tuple
    evaluator: Optional[Callable[[float], LagrangianFrame]] = None

    @classmethod
    def from_samples(cls, pairs: Sequence, evaluator=None) -> "LagrangianPath":
        pairs = sorted(pairs, key=lambda p: p[0])
        ts = [t for t, _ in pairs]
        if len(ts) < 2:
            raise ValueError("need at least two samples")
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("sample parameters must be strictly increasing")
        m = pairs[0][1].m
        if any(f.m != m for _, f in pairs):
            raise errors.DimensionMismatch("all sample frames must share m")
        return cls(a=ts[0], b=ts[-1], samples=tuple(pairs), evaluator=evaluator)

    @classmethod
    def from_evaluator(cls, a: float, b: float, evaluator,
                       num: int = 9) -> "LagrangianPath":
        ts = np.linspace(a, b, max(2, num))
        return cls.from_samples([(float(t), evaluator(float(t))) for t in ts],
                                evaluator=evaluator)

    @property
    def m(self) -> int:
        return self.samples[0][1].m

    def frame_at(self, t: float) -> LagrangianFrame:
        for ts, f in self.samples:
            if ts == t:
                return f
        if self.evaluator is None:
            raise errors.NoEvaluator(
                f"no sample at t={t} and the path carries no evaluator")
        return self.evaluator(t)

    def restricted(self, a: float, b: float) -> "LagrangianPath":
        inner = [(t, f) for t, f in self.samples if a < t < b]
        pairs = [(a, self.frame_at(a))] + inner + [(b, self.frame_at(b))]
        return LagrangianPath.from_samples(pairs, evaluator=self.evaluator)

    def reparametrized(self, phi, c: float, d: float) -> "LagrangianPath":
        """Path t -> self(phi(t)) for monotone phi: [c, d] -> [a, b]."""
        if self.evaluator is None:
            raise errors.NoEvaluator("reparametrization needs an evaluator")
        ev = lambda t: self.evaluator(phi(t))
        num = max(len(self.samples), 9)
        return LagrangianPath.from_evaluator(c, d, ev, num=num)


@dataclass(eq=False)
class AngleBranches:
    """Continuous lifted eigenphase branches theta_j over refined samples."""

    ts: np.ndarray                  # (K,)
    theta: np.ndarray               # (K, m) lifted angles
    refinement_depth: int = 0
    window_start: float = 0.0       # initial angles lie in [window_start, +2pi)

    @property
    def m(self) -> int:
        return self.theta.shape[1]

    def csv_rows(self):
        for t, row in zip(self.ts, self.theta):
            yield [t, *row]


@dataclass(eq=False)
class MaslovResult:
    index: int
    branches: AngleBranches
    endpoint_intersections: tuple
    refinement_depth: int

    def to_json(self) -> dict:
        return {"index": self.index,
                "dims": list(self.endpoint_intersections),
                "depth": self.refinement_depth}


def _wrap(delta: np.ndarray) -> np.ndarray:
    """Wrap angle differences into [-pi, pi)."""
    return (delta + math.pi) % TWO_PI - math.pi


def match_step(lift_prev: np.ndarray, raw_next: np.ndarray):
    """Assign new raw angles to branches by minimal total circular
    displacement; returns the advanced lifts and the largest movement."""
    delta = _wrap(raw_next[None, :] - (lift_prev[:, None] % TWO_PI))
    rows, cols = linear_sum_assignment(np.abs(delta))
    step = delta[rows, cols]
    new_lift = lift_prev + step
    return new_lift, float(np.max(np.abs(step)))


def _initial_lift(raw: np.ndarray, tau_eig: float) -> np.ndarray:
    """Angles sorted into [0, 2pi) with values circularly at 0 snapped to 0."""
    ang = np.sort(raw.copy())
    ang[ang >= TWO_PI - tau_eig] = 0.0
    return np.sort(ang)


def track_branches(frame0: LagrangianFrame, path: LagrangianPath, *,
                   max_step: float = STEP_BOUND,
                   max_depth: int = MAX_DEPTH,
                   tau_eig: float = TAU_EIG) -> AngleBranches:
    """Continuously lift the relative eigenphases along the path.

    Minimal-displacement matching between two parameter values can alias: a
    synchronized rotation of several eigenphases by about their angular
    spacing looks like a small matched movement, and a single midpoint probe
    can agree with the same wrong assignment.  Every interval is therefore
    accepted only when (a) the direct match, the match through the midpoint
    and the matches through both quarter points all stay below ``max_step``
    per step, and (b) the composed lifts agree with the direct ones at both
    verification levels.  Aliasing at two consecutive scales would need the
    phases to rotate by a quarter of their spacing per quarter interval,
    which the recursion then resolves at the next level.

    Raises NoEvaluator when refinement is needed but the path carries no
    evaluator, RefinementLimit past ``max_depth`` bisection levels.
    """
    if frame0.m != path.m:
        raise errors.DimensionMismatch("reference frame does not match path")
    U0c = frame0.unitary.conj().T
    raw_memo: dict = {}

    def raw_at(t: float) -> np.ndarray:
        hit = raw_memo.get(t)
        if hit is None:
            hit = eigenangles(U0c @ path.frame_at(t).unitary)
            raw_memo[t] = hit
        return hit

    for t_s, f_s in path.samples:
        raw_memo[t_s] = eigenangles(U0c @ f_s.unitary)

    t0 = path.samples[0][0]
    ts = [t0]
    lifts = [_initial_lift(raw_at(t0), tau_eig)]
    depth_used = 0

    def need_evaluator():
        if path.evaluator is None:
            raise errors.NoEvaluator(
                "samples too coarse for the step contract and no evaluator given")

    def half_step_verified(t_a, lift_a, t_b, lift_b_direct):
        """One extra verification level across [t_a, t_b]."""
        tq = 0.5 * (t_a + t_b)
        if not (t_a < tq < t_b):
            return True
        lift_q, move_1 = match_step(lift_a, raw_at(tq))
        lift_b_via, move_2 = match_step(lift_q, raw_at(t_b))
        return (move_1 < max_step and move_2 < max_step
                and np.max(np.abs(lift_b_via - lift_b_direct)) < 1e-6)

    # Appends verified samples strictly to the right of t_left; returns the
    # lift at t_right.
    def process(t_left, lift_left, t_right, depth):
        nonlocal depth_used
        depth_used = max(depth_used, depth)
        lift_direct, move_direct = match_step(lift_left, raw_at(t_right))
        tm = 0.5 * (t_left + t_right)
        if not (t_left < tm < t_right):
            # interval at floating-point resolution; accept the direct match
            ts.append(t_right)
            lifts.append(lift_direct)
            return lift_direct
        if depth >= max_depth:
            raise errors.RefinementLimit(
                f"angle movement {move_direct:.3f} unresolved at depth {depth} "
                f"near t={t_right}")
        need_evaluator()
        lift_mid, move_a = match_step(lift_left, raw_at(tm))
        lift_via, move_b = match_step(lift_mid, raw_at(t_right))
        consistent = (move_a < max_step and move_b < max_step
                      and move_direct < max_step
                      and np.max(np.abs(lift_via - lift_direct)) < 1e-6
                      and half_step_verified(t_left, lift_left, tm, lift_mid)
                      and half_step_verified(tm, lift_mid, t_right, lift_via))
        if consistent:
            ts.append(tm)
            lifts.append(lift_mid)
            ts.append(t_right)
            lifts.append(lift_via)
            return lift_via
        lift_mid = process(t_left, lift_left, tm, depth + 1)
        return process(tm, lift_mid, t_right, depth + 1)

    for t_right, _ in path.samples[1:]:
        process(ts[-1], lifts[-1], t_right, 0)

    return AngleBranches(ts=np.asarray(ts), theta=np.vstack(lifts),
                         refinement_depth=depth_used)


def _e_snapped(theta: float, tau_snap: float) -> int:
    q = theta / TWO_PI
    k = round(q)
    if abs(q - k) <= tau_snap / TWO_PI:
        return int(k)
    return e_ceil(q)


def maslov_index(frame0: LagrangianFrame, path: LagrangianPath, *,
                 tau_snap: float = TAU_SNAP,
                 max_step: float = STEP_BOUND,
                 max_depth: int = MAX_DEPTH,
                 tau_eig: float = TAU_EIG) -> MaslovResult:
    """Maslov index of the path against frame0 by the E-formula on tracked
    branches.  Integer-exact once branches are resolved; the choice of the
    initial angle window does not affect the result."""
    branches = track_branches(frame0, path, max_step=max_step,
                              max_depth=max_depth, tau_eig=tau_eig)
    start, end = branches.theta[0], branches.theta[-1]
    index = int(sum(_e_snapped(te, tau_snap) - _e_snapped(ta, tau_snap)
                    for ta, te in zip(start, end)))
    dims = (intersection_dim(path.samples[0][1], frame0),
            intersection_dim(path.samples[-1][1], frame0))
    return MaslovResult(index=index, branches=branches,
                        endpoint_intersections=dims,
                        refinement_depth=branches.refinement_depth)


def nu_plus(frame: LagrangianFrame, theta0: float, *,
            tau_eig: float = TAU_EIG) -> int:
    """Number of eigenphases of U(L) strictly inside (0, theta0).

    theta0 must stay clear of the spectrum (ThetaOnSpectrum otherwise);
    phases circularly at 0 are excluded.
    """
    if not 0.0 < theta0 < TWO_PI:
        raise ValueError("theta0 must lie in (0, 2pi)")
    ang = eigenangles(frame.unitary)
    if np.any(np.abs(_wrap(ang - theta0)) <= tau_eig):
        raise errors.ThetaOnSpectrum(f"e^(i {theta0}) is an eigenvalue")
    ang = ang.copy()
    ang[np.abs(_wrap(ang)) <= tau_eig] = 0.0
    return int(np.sum((ang > 0.0) & (ang < theta0)))


# ---------------------------------------------------------------------------
# index axioms as a randomized test surface

def _unitary_path(m: int, rng, wind: float = 2.5):
    """Smooth unitary family U exp(i t H) with cached eigendecomposition."""
    U0 = sampling.random_unitary(m, rng)
    H = sampling.random_hermitian(m, rng, scale=wind)
    h, V = np.linalg.eigh(H)

    def ev(t: float) -> LagrangianFrame:
        Ut = U0 @ (V * np.exp(1j * t * h)) @ V.conj().T
        return lagrangian_from_unitary(Ut)

    return ev


def verify_index_axioms(seed: int = 0, trials: int = 50) -> dict:
    """Randomized checks of the index axioms: reparametrization invariance,
    homotopy invariance with fixed endpoints, path additivity, symplectic
    invariance and additivity under direct sums.  Returns a per-axiom report
    with counterexample parameters on failure."""
    rng = sampling.default_rng(seed)
    report = {k: {"trials": 0, "failures": 0, "examples": []}
              for k in ("reparametrization", "homotopy", "path_additivity",
                        "symplectic_invariance", "symplectic_additivity")}

    def record(key, ok, data):
        report[key]["trials"] += 1
        if not ok:
            report[key]["failures"] += 1
            if len(report[key]["examples"]) < 3:
                report[key]["examples"].append(data)

    for k in range(trials):
        m = int(rng.integers(1, 4))
        ev = _unitary_path(m, rng)
        path = LagrangianPath.from_evaluator(0.0, 1.0, ev, num=9)
        ref = sampling.random_lagrangian(m, rng)
        mu = maslov_index(ref, path).index

        # reparametrization by a monotone power map
        p = int(rng.integers(2, 4))
        phi = lambda tau: tau ** p
        mu_rep = maslov_index(ref, path.reparametrized(phi, 0.0, 1.0)).index
        record("reparametrization", mu_rep == mu, {"trial": k, "mu": mu, "rep": mu_rep})

        # additivity across an interior split point
        c = float(rng.uniform(0.25, 0.75))
        mu_l = maslov_index(ref, path.restricted(0.0, c)).index
        mu_r = maslov_index(ref, path.restricted(c, 1.0)).index
        record("path_additivity", mu_l + mu_r == mu,
               {"trial": k, "mu": mu, "split": (mu_l, mu_r, c)})

        # conjugating both arguments by a fixed symplectic map
        M = sampling.random_symplectic_conjugator(m, rng)
        from .lagrangian import apply_symplectic
        conj_path = LagrangianPath.from_evaluator(
            0.0, 1.0, lambda t: apply_symplectic(M, ev(t)), num=9)
        mu_conj = maslov_index(apply_symplectic(M, ref), conj_path).index
        record("symplectic_invariance", mu_conj == mu,
               {"trial": k, "mu": mu, "conj": mu_conj})

        # direct sums
        m2 = int(rng.integers(1, 3))
        ev2 = _unitary_path(m2, rng)
        path2 = LagrangianPath.from_evaluator(0.0, 1.0, ev2, num=9)
        ref2 = sampling.random_lagrangian(m2, rng)
        mu2 = maslov_index(ref2, path2).index
        sum_path = LagrangianPath.from_evaluator(
            0.0, 1.0, lambda t: direct_sum(ev(t), ev2(t)), num=9)
        mu_sum = maslov_index(direct_sum(ref, ref2), sum_path).index
        record("symplectic_additivity", mu_sum == mu + mu2,
               {"trial": k, "mu": (mu, mu2), "sum": mu_sum})

    homotopy_trials = max(1, trials // 4)
    for k in range(homotopy_trials):
        m = int(rng.integers(1, 4))
        ev = _unitary_path(m, rng)
        ref = sampling.random_lagrangian(m, rng)
        H2 = sampling.random_hermitian(m, rng, scale=1.0)
        h2, V2 = np.linalg.eigh(H2)

        def deformed(s):
            def ev_s(t):
                w = math.sin(math.pi * t) ** 2
                F = ev(t)
                Us = (V2 * np.exp(1j * s * w * h2)) @ V2.conj().T
                return lagrangian_from_unitary(F.unitary @ Us)
            return ev_s

        # endpoint frames are unchanged for every s, so the endpoint
        # intersection dimensions are constant along the homotopy.
        mu0 = maslov_index(ref, LagrangianPath.from_evaluator(0, 1, deformed(0.0), num=9)).index
        mu1 = maslov_index(ref, LagrangianPath.from_evaluator(0, 1, deformed(1.0), num=9)).index
        record("homotopy", mu0 == mu1, {"trial": k, "mu": (mu0, mu1)})

    report["passed"] = all(v["failures"] == 0 for v in report.values()
                           if isinstance(v, dict))
    return report
