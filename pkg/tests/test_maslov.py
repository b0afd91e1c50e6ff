"""Eigenphase tracking, the index formula and the counting function."""

import math

import numpy as np
import pytest

from slmaslov import errors, lagrangian as lg, maslov as mv, sampling as sp
from oracle_helpers import cayley_angle

TWO_PI = 2 * math.pi


def scalar_rotation_path(a=-math.pi / 2, b=math.pi / 2, num=9):
    ev = lambda t: lg.lagrangian_from_unitary(np.array([[np.exp(1j * t)]]))
    return mv.LagrangianPath.from_evaluator(a, b, ev, num=num)


def tan_family(cf):
    def ev(s):
        if abs(abs(s) - math.pi / 2) < 1e-14:
            return lg.dirichlet(cf.m)
        A = cf.A + math.tan(s) * np.eye(cf.k0)
        return lg.frame_from_canonical(
            lg.CanonicalForm(m=cf.m, r=cf.r, A=A, basis=cf.basis))
    return ev


# ---------------------------------------------------------------------------
# ceiling and relative angles

def test_e_ceil_examples():
    assert mv.e_ceil(0) == 0
    assert mv.e_ceil(0.3) == 1
    assert mv.e_ceil(-0.2) == 0
    assert mv.e_ceil(1) == 1
    assert mv.e_ceil(-1.0) == -1


def test_relative_angles_examples():
    d2 = lg.dirichlet(2)
    assert np.allclose(mv.relative_angles(d2, d2), 0.0)
    assert np.allclose(mv.relative_angles(d2, lg.neumann(2)), math.pi)
    line = lg.validate_frame([[1.0], [1.0]], 1)
    assert np.allclose(mv.relative_angles(lg.dirichlet(1), line), math.pi / 2)


def test_relative_angles_zero_count_matches_intersection():
    rng = sp.default_rng(0)
    for _ in range(25):
        m = int(rng.integers(1, 5))
        r = int(rng.integers(0, m + 1))
        F = sp.random_lagrangian_in_layer(m, r, rng)
        ang = mv.relative_angles(lg.dirichlet(m), F)
        circ = np.minimum(ang, TWO_PI - ang)
        assert int(np.sum(circ <= 1e-8)) == r == lg.intersection_dim(F, lg.dirichlet(m))


def test_relative_angles_dimension_mismatch():
    with pytest.raises(errors.DimensionMismatch):
        mv.relative_angles(lg.dirichlet(2), lg.dirichlet(3))


# ---------------------------------------------------------------------------
# tracking

def test_track_constant_path():
    d = lg.dirichlet(3)
    path = mv.LagrangianPath.from_evaluator(0.0, 1.0, lambda t: d, num=5)
    br = mv.track_branches(lg.neumann(3), path)
    assert np.allclose(br.theta, br.theta[0])


def test_track_scalar_rotation_is_linear():
    br = mv.track_branches(lg.dirichlet(1), scalar_rotation_path())
    # the single branch is t + 2 pi k for one fixed integer k
    drift = br.theta[:, 0] - br.ts
    assert np.allclose(drift, drift[0], atol=1e-9)
    assert abs((drift[0] / TWO_PI) - round(drift[0] / TWO_PI)) < 1e-9


def test_track_tan_path_branch_monotone():
    rng = sp.default_rng(1)
    cf = sp.random_canonical(2, 0, rng)
    path = mv.LagrangianPath.from_evaluator(-1.2, 1.2, tan_family(cf), num=9)
    br = mv.track_branches(lg.dirichlet(2), path)
    assert np.all(np.diff(br.theta, axis=0) < 1e-12)
    # branch values follow the closed-form Cayley angles of the eigenvalues
    evals = np.linalg.eigvalsh(cf.A)
    for t, row in zip(br.ts, br.theta):
        want = sorted(cayley_angle(a + math.tan(t)) for a in evals)
        got = sorted(th % TWO_PI for th in row)
        assert np.allclose(sorted(got), want, atol=1e-8)


def test_track_needs_evaluator_for_coarse_samples():
    ev = lambda t: lg.lagrangian_from_unitary(np.array([[np.exp(4j * t)]]))
    pairs = [(0.0, ev(0.0)), (1.0, ev(1.0))]
    path = mv.LagrangianPath.from_samples(pairs)  # no evaluator
    with pytest.raises(errors.NoEvaluator):
        mv.track_branches(lg.dirichlet(1), path)


def test_track_refinement_limit_on_discontinuous_path():
    # a genuine jump cannot be resolved by bisection
    def ev(t):
        U = np.array([[1.0 + 0j]]) if t < 0.5 else np.array([[np.exp(2.5j)]])
        return lg.lagrangian_from_unitary(U)
    path = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=5)
    with pytest.raises(errors.RefinementLimit):
        mv.track_branches(lg.dirichlet(1), path, max_depth=20)


def test_track_alias_synchronized_rotation():
    # two eigenphases a half-turn apart rotating together: endpoint
    # unitaries alone cannot distinguish this from a small move
    def ev(t):
        U = np.diag([np.exp(1j * t * math.pi), np.exp(1j * (t * math.pi + math.pi))])
        return lg.lagrangian_from_unitary(U)
    path = mv.LagrangianPath.from_evaluator(0.0, 1.9, ev, num=3)
    br = mv.track_branches(lg.dirichlet(2), path)
    total = br.theta[-1] - br.theta[0]
    assert np.allclose(total, 1.9 * math.pi, atol=1e-8)


# ---------------------------------------------------------------------------
# the index

def test_index_scalar_rotation():
    res = mv.maslov_index(lg.dirichlet(1), scalar_rotation_path())
    assert res.index == 1
    assert res.endpoint_intersections == (0, 0)


def test_index_constant_path_zero():
    d4 = lg.dirichlet(4)
    path = mv.LagrangianPath.from_evaluator(0, 1, lambda t: d4, num=5)
    assert mv.maslov_index(d4, path).index == 0


def test_index_window_independent():
    # the same rotation against a reference whose relative angles start
    # elsewhere in the window; absolute window position cancels
    rng = sp.default_rng(2)
    for _ in range(10):
        ref = sp.random_lagrangian(2, rng)
        H = sp.random_hermitian(2, rng, scale=2.0)
        h, V = np.linalg.eigh(H)
        U0 = sp.random_unitary(2, rng)

        def ev(t):
            return lg.lagrangian_from_unitary(U0 @ (V * np.exp(1j * t * h)) @ V.conj().T)

        path = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=9)
        res1 = mv.maslov_index(ref, path)
        # shifting every branch by a full turn must not change the index:
        # conjugate the path by the scalar phase exp(2 pi i / m) ^ m = 1
        res2 = mv.maslov_index(ref, path.restricted(0.0, 1.0))
        assert res1.index == res2.index


def test_index_tan_paths_exact(subtests=None):
    rng = sp.default_rng(3)
    for n in (1, 2):
        m = 2 * n
        for r in range(m + 1):
            cf = sp.random_canonical(m, r, rng)
            up = mv.LagrangianPath.from_evaluator(0.0, math.pi / 2, tan_family(cf), num=9)
            dn = mv.LagrangianPath.from_evaluator(-math.pi / 2, 0.0, tan_family(cf), num=9)
            assert mv.maslov_index(lg.dirichlet(m), up).index == -(2 * n - r)
            assert mv.maslov_index(lg.dirichlet(m), dn).index == 0


def test_index_invariant_under_sample_doubling():
    rng = sp.default_rng(4)
    ref = sp.random_lagrangian(3, rng)
    H = sp.random_hermitian(3, rng, scale=3.0)
    h, V = np.linalg.eigh(H)

    def ev(t):
        return lg.lagrangian_from_unitary((V * np.exp(1j * t * h)) @ V.conj().T)

    p1 = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=9)
    p2 = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=17)
    assert mv.maslov_index(ref, p1).index == mv.maslov_index(ref, p2).index


def test_branch_fidelity_at_samples():
    rng = sp.default_rng(5)
    ref = sp.random_lagrangian(2, rng)
    H = sp.random_hermitian(2, rng, scale=2.0)
    h, V = np.linalg.eigh(H)

    def ev(t):
        return lg.lagrangian_from_unitary((V * np.exp(1j * t * h)) @ V.conj().T)

    path = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=9)
    br = mv.track_branches(ref, path)
    U0c = ref.unitary.conj().T
    for t, row in zip(br.ts, br.theta):
        spec = np.sort(mv.eigenangles(U0c @ ev(t).unitary))
        lifted = np.sort(np.mod(row, TWO_PI))
        match = np.allclose(np.sort(np.exp(1j * lifted)), np.sort(np.exp(1j * spec)),
                            atol=1e-8) or np.allclose(lifted, spec, atol=1e-8)
        circ = np.abs(np.exp(1j * lifted) - np.exp(1j * spec))
        assert np.max(circ) < 1e-8 or match


def test_maslov_result_json():
    res = mv.maslov_index(lg.dirichlet(1), scalar_rotation_path())
    obj = res.to_json()
    assert obj["index"] == 1 and obj["dims"] == [0, 0] and "depth" in obj


# ---------------------------------------------------------------------------
# nu_plus

def test_nu_plus_examples():
    assert mv.nu_plus(lg.dirichlet(2), math.pi) == 0
    assert mv.nu_plus(lg.neumann(2), math.pi / 2) == 0
    assert mv.nu_plus(lg.neumann(2), 3.5) == 2
    fi = lg.lagrangian_from_unitary(np.array([[1j]]))
    assert mv.nu_plus(fi, math.pi) == 1


def test_nu_plus_rejects_theta_on_spectrum():
    with pytest.raises(errors.ThetaOnSpectrum):
        mv.nu_plus(lg.neumann(2), math.pi)


def test_counting_consistency_along_paths():
    # whenever a fixed angle ray is never crossed, the index equals the
    # difference of eigenphase counts below the ray
    rng = sp.default_rng(6)
    checked = 0
    for _ in range(40):
        m = int(rng.integers(1, 4))
        H = sp.random_hermitian(m, rng, scale=0.8)
        h, V = np.linalg.eigh(H)
        U0 = sp.random_unitary(m, rng)

        def ev(t):
            return lg.lagrangian_from_unitary(U0 @ (V * np.exp(1j * t * h)) @ V.conj().T)

        path = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=9)
        br = mv.track_branches(lg.dirichlet(m), path)
        angles = np.mod(br.theta, TWO_PI).ravel()
        # find an uncrossed ray with margin
        theta0 = None
        for cand in np.linspace(0.4, TWO_PI - 0.4, 23):
            if np.min(np.abs(angles - cand)) > 0.15:
                theta0 = float(cand)
                break
        if theta0 is None:
            continue
        checked += 1
        mu = mv.maslov_index(lg.dirichlet(m), path).index
        nu1 = mv.nu_plus(path.frame_at(1.0), theta0)
        nu0 = mv.nu_plus(path.frame_at(0.0), theta0)
        assert mu == nu1 - nu0
    assert checked >= 10


# ---------------------------------------------------------------------------
# the axiom report

def test_axioms_smoke():
    rep = mv.verify_index_axioms(seed=123, trials=12)
    for key in ("reparametrization", "homotopy", "path_additivity",
                "symplectic_invariance", "symplectic_additivity"):
        assert rep[key]["failures"] == 0, rep[key]
    assert rep["passed"]
