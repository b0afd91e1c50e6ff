"""Layer geometry, jumps, ranges, constant branches and the Dirichlet limit."""

import math

import numpy as np
import pytest

from slmaslov import (errors, experiments as ex, lagrangian as lg,
                      maslov as mv, sampling as sp, slp)
from oracle_helpers import dirichlet_spectrum_free


# ---------------------------------------------------------------------------
# layers and tan-paths

def test_layer_of_standard_planes():
    assert ex.layer_of(lg.dirichlet(4)) == 4
    assert ex.layer_of(lg.neumann(4)) == 0


def test_layer_of_canonical_construction():
    rng = sp.default_rng(0)
    F = sp.random_lagrangian_in_layer(4, 1, rng)
    assert ex.layer_of(F) == 1


def test_tan_path_fixes_base_point():
    rng = sp.default_rng(1)
    F = sp.random_lagrangian_in_layer(2, 1, rng)
    assert lg.dist(ex.tan_path(F, 0.0), F) < 1e-10


def test_tan_path_layer_constant_and_limit():
    rng = sp.default_rng(2)
    F = sp.random_lagrangian_in_layer(4, 2, rng)
    cf = lg.canonical_form(F)
    for s in (-1.4, -0.6, 0.0, 0.8, 1.45):
        assert ex.layer_of(ex.tan_path(cf, s)) == 2
    d = [lg.dist(ex.tan_path(cf, s), lg.dirichlet(4)) for s in (1.3, 1.45, 1.55)]
    assert d[0] > d[1] > d[2]
    assert lg.dist(ex.tan_path(cf, math.pi / 2), lg.dirichlet(4)) == 0.0
    assert lg.dist(ex.tan_path(cf, -math.pi / 2), lg.dirichlet(4)) == 0.0


def test_tan_path_eigenvalue_monotone(free1d):
    # eigenvalues never increase along the family as s grows
    rng = sp.default_rng(3)
    cf = sp.random_canonical(2, 0, rng)
    for j in (1, 2, 3):
        vals = []
        for s in np.linspace(-1.0, 1.0, 7):
            lam = ex._lambda_j(free1d, ex.tan_path(cf, float(s)), j,
                               floor=-40.0, top=14.0)
            vals.append(lam)
        vals = [v for v in vals if v is not None]
        assert all(a >= b - 1e-8 for a, b in zip(vals, vals[1:]))


def test_perturbation_bound_small_offsets():
    # near any base parameter the intersection with a fixed plane drops to
    # at most the layer number; the sharp case is the base point itself,
    # where the intersection is full before perturbing
    rng = sp.default_rng(4)
    for trial in range(10):
        m = int(rng.integers(1, 5))
        r = int(rng.integers(0, m))
        cf = sp.random_canonical(m, r, rng)
        s0 = float(rng.uniform(-1.2, 1.2))
        base = ex.tan_path(cf, s0)
        assert lg.intersection_dim(base, base) == m
        for ds in (7e-4, -7e-4, 2.3e-3, -2.3e-3):
            moved = ex.tan_path(cf, s0 + ds)
            assert lg.intersection_dim(base, moved) == r
        alpha = sp.random_lagrangian(m, rng)
        dims = [lg.intersection_dim(alpha, ex.tan_path(cf, s0 + ds))
                for ds in (7e-4, -7e-4, 2.3e-3, -2.3e-3)]
        assert max(dims) <= r


# ---------------------------------------------------------------------------
# constructed singular paths and the jump experiment

def test_make_singular_path_pattern():
    rng = sp.default_rng(5)
    path, spec = ex.make_singular_path(2, 2, [+1], [-1], rng, eps=0.3)
    dD = lg.dirichlet(2)
    assert lg.intersection_dim(path.frame_at(0.0), dD) == 2
    assert lg.intersection_dim(path.frame_at(0.2), dD) == 1
    assert lg.intersection_dim(path.frame_at(-0.2), dD) == 1
    assert spec.expected == {"c_minus": 1, "c0": 2, "c_plus": 1,
                             "k_minus": 1, "k_plus": 0}


def test_jump_tan_path_is_continuous(free1d):
    # a path staying inside one layer has no singularity: k = 0 and all
    # branch limits match the center spectrum with no reindexing
    rng = sp.default_rng(6)
    path, spec = ex.make_singular_path(2, 1, [], [], rng, eps=0.3)
    rep = ex.jump_experiment(free1d, path, j_max=3)
    assert (rep.c_minus, rep.c0, rep.c_plus) == (1, 1, 1)
    assert rep.k_minus == rep.k_plus == 0
    assert rep.passed
    for j, est, target, err in rep.left_limits + rep.right_limits:
        assert err <= 1e-6


def test_jump_through_dirichlet_limit(free1d):
    # closing a tan-path onto the Dirichlet plane reindexes by 2n - r
    rng = sp.default_rng(7)
    path, spec = ex.make_singular_path(2, 2, [+1], [+1], rng, eps=0.3)
    rep = ex.jump_experiment(free1d, path, j_max=4)
    assert rep.c0 == 2 and rep.c_minus == rep.c_plus == 1
    assert rep.k_minus == rep.k_plus == 1
    assert rep.passed
    # the center here is the Dirichlet plane pattern: limits hit j^2
    want = dirichlet_spectrum_free(math.pi, 3)
    for j, est, target, err in rep.right_limits:
        assert target == pytest.approx(want[j - 2], rel=1e-9)


def test_jump_strict_inequality_case(coupled2):
    # a mixed-sign move keeps k strictly below the dimension drop
    rng = sp.default_rng(8)
    path, spec = ex.make_singular_path(4, 2, [+1, -1], [+1, -1], rng, eps=0.25)
    rep = ex.jump_experiment(coupled2, path, j_max=4)
    assert rep.c0 - rep.c_minus == 2 and rep.k_minus == 1
    assert rep.c0 - rep.c_plus == 2 and rep.k_plus == 1
    assert 0 <= rep.k_minus <= rep.c0 - rep.c_minus
    assert rep.passed


def test_jump_rejects_bad_parametrization(free1d):
    rng = sp.default_rng(9)
    ev = lambda s: lg.dirichlet(2)
    path = mv.LagrangianPath.from_evaluator(0.0, 1.0, ev, num=5)
    with pytest.raises(errors.PatternViolation):
        ex.jump_experiment(free1d, path, j_max=2)


# ---------------------------------------------------------------------------
# predicted ranges

def test_predicted_interval_cases_free(free1d):
    dvals = np.array(dirichlet_spectrum_free(math.pi, 8))
    # j <= 2n - r regime
    pred = ex.predicted_interval(dvals, 1, 0, 1, gap_tol=1e-8)
    assert pred["left"] == -math.inf and not pred["right_closed"]
    pred = ex.predicted_interval(dvals, 1, 1, 1, gap_tol=1e-8)
    assert pred["left"] == -math.inf and pred["right_closed"]
    # j > 2n - r regime: simple spectrum means closed endpoints when r > 0
    pred = ex.predicted_interval(dvals, 2, 1, 1, gap_tol=1e-8)
    assert pred["left"] == pytest.approx(1.0) and pred["left_closed"]
    assert pred["right"] == pytest.approx(4.0) and pred["right_closed"]
    pred = ex.predicted_interval(dvals, 3, 2, 1, gap_tol=1e-8)
    assert pred["left"] == pred["right"] == pytest.approx(9.0)


def test_predicted_interval_multiplicity_cases():
    # doubled spectrum: open endpoints survive when the layer is shallow
    dvals = np.array([1.0, 1.0, 4.0, 4.0, 9.0, 9.0, 16.0, 16.0])
    pred = ex.predicted_interval(dvals, 3, 1, 2, gap_tol=1e-8)
    # b-cluster and c-cluster have one neighbor on each side
    assert pred["right"] == pytest.approx(4.0)
    assert pred["c2"] == 1 and not pred["right_closed"]
    pred = ex.predicted_interval(dvals, 3, 2, 2, gap_tol=1e-8)
    assert pred["right_closed"]


def test_predicted_interval_refuses_tight_clusters():
    dvals = np.array([1.0, 1.0 + 1e-9, 4.0])
    with pytest.raises(errors.DegenerateCluster):
        ex.predicted_interval(dvals, 1, 1, 1, gap_tol=1e-7)


def test_range_scan_open_interval(free1d):
    rep = ex.range_scan(free1d, 1, 0, 25, seed=11)
    assert rep.passed
    assert rep.prediction["left"] == -math.inf
    assert max(rep.samples) < 1.0
    assert not rep.witnesses


def test_range_scan_closed_interval_with_witnesses(free1d):
    rep = ex.range_scan(free1d, 2, 1, 15, seed=12)
    assert rep.passed
    assert rep.witnesses["left"]["error"] < 1e-8
    assert rep.witnesses["right"]["error"] < 1e-8
    assert all(1.0 - 1e-6 <= v <= 4.0 + 1e-6 for v in rep.samples)


def test_range_scan_singleton(free1d):
    rep = ex.range_scan(free1d, 3, 2, 6, seed=13)
    assert rep.passed
    assert all(abs(v - 9.0) < 1e-7 for v in rep.samples)


def test_endpoint_witness_refusals(free1d):
    with pytest.raises(errors.CasePrecludesAttainment):
        ex.endpoint_witness(free1d, 1, 0, "right")   # r <= c2
    with pytest.raises(errors.CasePrecludesAttainment):
        ex.endpoint_witness(free1d, 1, 0, "left")    # left endpoint at -inf
    with pytest.raises(errors.CasePrecludesAttainment):
        ex.endpoint_witness(free1d, 2, 0, "left")


def test_endpoint_witness_values(free1d):
    wR = ex.endpoint_witness(free1d, 1, 1, "right")
    assert ex.layer_of(wR) == 1
    assert slp.eigen_multiplicity(free1d, wR, 1.0) == 1
    wL = ex.endpoint_witness(free1d, 2, 1, "left")
    assert slp.eigen_multiplicity(free1d, wL, 1.0) == 1


def test_whole_space_range_union(free1d):
    # the union over layers lands inside (lambda_{j-2n}, lambda_j] and the
    # right endpoint is attained by the top layer
    j = 2
    rng = sp.default_rng(14)
    top = dirichlet_spectrum_free(math.pi, 2)[1]
    values = []
    for r in (0, 1, 2):
        for _ in range(8):
            F = sp.random_lagrangian_in_layer(2, r, rng)
            lam = ex._lambda_j(free1d, F, j, floor=-60.0, top=top + 2.0)
            if lam is not None:
                values.append(lam)
    assert max(values) <= top + 1e-7
    wit = ex.endpoint_witness(free1d, j, 2, "right")
    assert slp.eigen_multiplicity(free1d, wit, top) >= 1


def test_half_space_layers_left_attainment(decoupled2):
    # for layers at least n the left endpoint is attained once j > 2n - r
    rep = ex.range_scan(decoupled2, 3, 3, 4, seed=15, sweep_points=3)
    assert rep.prediction["left_closed"]
    assert "left" in rep.witnesses and rep.witnesses["left"]["error"] < 1e-7


# ---------------------------------------------------------------------------
# constant branches

def test_constant_branch_doubled_eigenvalue(decoupled2):
    rep = ex.constant_branch_check(decoupled2, 2, 2, layers=[3, 4],
                                   samples=8, seed=16)
    assert rep["passed"]
    assert rep["lambda"] == pytest.approx(1.0, abs=1e-9)


def test_constant_branch_trivial_top_layer(free1d):
    # r = 2n: the layer is the Dirichlet plane alone
    rep = ex.constant_branch_check(free1d, 1, 1, layers=[2], samples=3, seed=17)
    assert rep["passed"]


def test_constant_branch_premise_guard(decoupled2, free1d):
    with pytest.raises(errors.PremiseFailed):
        ex.constant_branch_check(decoupled2, 1, 1, samples=2, seed=18)
    with pytest.raises(errors.PremiseFailed):
        ex.constant_branch_check(free1d, 1, 2, samples=2, seed=18)


# ---------------------------------------------------------------------------
# the Dirichlet limit

def test_limit_experiment_free(free1d):
    rep = ex.limit_experiment(free1d, -1.0e7)
    assert rep.passed
    assert rep.maslov_on_tail == 2
    assert rep.final_dist < 1e-3
    assert rep.tail_monotone
    assert all(d == 0 for d in rep.transversality_dims)
    # closed-form decay: dist ~ 2 / sqrt(|lambda|)
    lam, dval = rep.lam_grid[-1], rep.dist_curve[-1]
    assert dval == pytest.approx(2.0 / math.sqrt(-lam), rel=1e-3)


def test_limit_experiment_coupled(coupled2):
    rep = ex.limit_experiment(coupled2, -4.0e7)
    assert rep.maslov_on_tail == 4
    assert rep.tail_monotone and rep.final_dist < 1e-3
    assert all(d == 0 for d in rep.transversality_dims)


def test_limit_floor_guard(free1d):
    with pytest.raises(ValueError):
        ex.limit_experiment(free1d, 5.0)


def test_neville_extrapolation_polynomial():
    svals = [0.4, 0.2, 0.1, 0.05]
    f = lambda s: 3.0 - 2.0 * s + 0.5 * s ** 2
    est = ex.neville_to_zero(svals, [f(s) for s in svals])
    assert est == pytest.approx(3.0, abs=1e-12)
