"""Command-line front end: problem/boundary-condition configs in, report
JSON + CSV + rendered figures out.

Exit codes: 0 success, 1 solver or infrastructure error, 2 when the
computation succeeded but a theory-derived invariant failed.  Every output
file embeds the config hash, seed and tolerance set; CSV bodies are
deterministic for a fixed config and seed (only the timestamp header line
varies).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import errors, experiments, maslov, plotting, sampling, slp
from .lagrangian import (boundary_condition_from_json, canonical_form,
                         dirichlet, TAU_RANK)

ENV_OUT = "SLMASLOV_OUT"

_DEFAULTS = {
    "problem": None,
    "bc": '{"named": "dirichlet"}',
    "command": None,
    "window": None,
    "j": 1,
    "r": 0,
    "samples": 30,
    "seed": 0,
    "jmax": 4,
    "tol_lambda": slp.TOL_LAMBDA,
    "tol_rank": TAU_RANK,
    "galerkin_n": 200,
    "floor_factor": 1e6,
    "trials": 50,
    "plot": True,
    "out": None,
}

_COMMANDS = ("solve", "maslov", "jump", "range", "limit", "axioms")


@dataclass
class RunConfig:
    problem: str
    command: str
    bc: str = _DEFAULTS["bc"]
    window: tuple | None = None
    j: int = 1
    r: int = 0
    samples: int = 30
    seed: int = 0
    jmax: int = 4
    tol_lambda: float = slp.TOL_LAMBDA
    tol_rank: float = TAU_RANK
    galerkin_n: int = 200
    floor_factor: float = 1e6
    trials: int = 50
    plot: bool = True
    out: str | None = None

    def hash(self) -> str:
        payload = dataclasses.asdict(self)
        payload.pop("out", None)   # where results land does not change them
        payload.pop("plot", None)
        blob = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# bundled problems with provenance-tagged reference spectra

def _free1d():
    return slp.SLProblem(n=1, T=math.pi,
                         P=slp.constant([[1.0]]), Q=slp.constant([[0.0]]),
                         R=slp.constant([[0.0]]), D=slp.constant([[1.0]]))


def _pot1d():
    # cosine-shaped polynomial potential (even Taylor profile to degree 6)
    coeffs = [[[1.0]], [[0.0]], [[-0.5]], [[0.0]], [[1.0 / 24]], [[0.0]],
              [[-1.0 / 720]]]
    return slp.SLProblem(n=1, T=math.pi,
                         P=slp.constant([[1.0]]), Q=slp.constant([[0.0]]),
                         R=slp.polynomial(coeffs), D=slp.constant([[1.0]]))


def _decoupled2():
    z = np.zeros((2, 2))
    return slp.SLProblem(n=2, T=math.pi, P=slp.constant(np.eye(2)),
                         Q=slp.constant(z), R=slp.constant(z),
                         D=slp.constant(np.eye(2)))


def _coupled2():
    return slp.SLProblem(n=2, T=math.pi,
                         P=slp.constant([[2.0, 0.3], [0.3, 1.0]]),
                         Q=slp.constant([[0.1, -0.2], [0.05, 0.15]]),
                         R=slp.constant([[0.5, 0.4], [0.4, -0.3]]),
                         D=slp.constant(np.eye(2)))


def bundled_examples() -> dict:
    """Named example problems with reference spectra.  Each reference
    records its provenance: separable closed forms where available,
    otherwise pinned-tolerance shooting cross-validated by the mesh-refined
    variational solver."""
    return {
        "free1d": {
            "problem": _free1d().validate(),
            "description": "free scalar problem on [0, pi]",
            "reference": {
                "dirichlet": {"values": [1.0, 4.0, 9.0, 16.0, 25.0],
                              "provenance": "closed form j^2"},
                "neumann": {"values": [0.0, 1.0, 4.0, 9.0, 16.0],
                            "provenance": "closed form (j-1)^2"},
            },
        },
        "pot1d": {
            "problem": _pot1d().validate(),
            "description": "scalar problem with cosine-shaped polynomial potential",
            "reference": {
                "dirichlet": {"values": [0.907429361312266, 4.01647690501458,
                                         8.99510682478777, 15.986920592046,
                                         24.9830646630895],
                              "provenance": "shooting tol=1e-10, matched by "
                                            "Galerkin N=640 to 2e-4"},
                "neumann": {"values": [-0.437024311489926, 1.27578429869161,
                                       4.00853595260971, 8.98814584106623,
                                       15.9825013690287],
                            "provenance": "shooting tol=1e-10"},
            },
        },
        "decoupled2": {
            "problem": _decoupled2().validate(),
            "description": "two uncoupled copies of the free scalar problem",
            "reference": {
                "dirichlet": {"values": [1.0, 1.0, 4.0, 4.0, 9.0, 9.0],
                              "provenance": "closed form j^2, doubled"},
            },
        },
        "coupled2": {
            "problem": _coupled2().validate(),
            "description": "coupled constant-coefficient 2x2 problem",
            "reference": {
                "dirichlet": {"values": [0.454241778916316, 2.6575012781674,
                                         3.28779971109141, 7.6781998059755,
                                         9.09878212620469],
                              "provenance": "shooting tol=1e-10, matched by "
                                            "Galerkin N=640 to 3e-4"},
            },
        },
    }


def load_problem(spec: str) -> slp.SLProblem:
    bundled = bundled_examples()
    if spec in bundled:
        return bundled[spec]["problem"]
    path = Path(spec)
    if not path.exists():
        raise errors.ParseError(f"problem {spec!r} is neither bundled nor a file")
    try:
        return slp.problem_from_json(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"problem file {spec}: {exc}") from exc


def load_bc(spec: str, n: int):
    if spec and Path(spec).exists():
        spec = Path(spec).read_text()
    try:
        obj = json.loads(spec)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"boundary condition is not valid JSON: {exc}") from exc
    return boundary_condition_from_json(obj, n)


# ---------------------------------------------------------------------------
# config parsing

def parse_config(argv=None, file: str | None = None) -> RunConfig:
    """Merge command line over config file over defaults; unknown file keys
    are rejected."""
    ap = argparse.ArgumentParser(prog="slmaslov", description=__doc__)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--problem", help="bundled name or problem JSON file")
    ap.add_argument("--bc", help="boundary condition JSON (inline or file)")
    ap.add_argument("--command", choices=_COMMANDS)
    ap.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    ap.add_argument("--j", type=int)
    ap.add_argument("--r", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jmax", type=int)
    ap.add_argument("--tol-lambda", dest="tol_lambda", type=float)
    ap.add_argument("--tol-rank", dest="tol_rank", type=float)
    ap.add_argument("--galerkin-n", dest="galerkin_n", type=int)
    ap.add_argument("--floor-factor", dest="floor_factor", type=float)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--no-plot", dest="plot", action="store_false", default=None)
    ap.add_argument("--out", help="output directory (or env SLMASLOV_OUT)")
    ns = ap.parse_args(argv)

    merged = dict(_DEFAULTS)
    file = file or ns.config
    if file:
        try:
            fileconf = json.loads(Path(file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise errors.ParseError(f"config file {file}: {exc}") from exc
        for key, value in fileconf.items():
            if key not in merged:
                raise errors.UnknownKey(f"unknown config key {key!r}")
            merged[key] = value
    for key in merged:
        value = getattr(ns, key, None)
        if value is not None:
            merged[key] = value

    if merged["command"] not in _COMMANDS:
        raise errors.ParseError("missing or unknown --command")
    if merged["problem"] is None:
        raise errors.ParseError("missing --problem")
    if merged["window"] is not None:
        w = merged["window"]
        if len(w) != 2 or not all(isinstance(x, (int, float)) for x in w):
            raise errors.ParseError("window must be two numbers")
        merged["window"] = (float(w[0]), float(w[1]))
    for key in ("tol_lambda", "tol_rank"):
        if merged[key] <= 0:
            raise errors.ParseError(f"{key} must be positive")
    return RunConfig(**merged)


# ---------------------------------------------------------------------------
# output helpers

def _meta_lines(cfg: RunConfig) -> list:
    return [f"# generated {time.strftime('%Y-%m-%dT%H:%M:%S')}",
            f"# config={cfg.hash()} seed={cfg.seed} "
            f"tol_lambda={cfg.tol_lambda:g} tol_rank={cfg.tol_rank:g}"]


def write_csv(path: Path, cfg: RunConfig, header, rows):
    with open(path, "w") as fh:
        for line in _meta_lines(cfg):
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_report(path: Path, cfg: RunConfig, payload: dict):
    payload = dict(payload)
    payload["config_hash"] = cfg.hash()
    payload["seed"] = cfg.seed
    payload["tolerances"] = {"tol_lambda": cfg.tol_lambda,
                             "tol_rank": cfg.tol_rank}
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return str(obj)


# ---------------------------------------------------------------------------
# command implementations

def _cmd_solve(cfg: RunConfig, out: Path) -> int:
    p = load_problem(cfg.problem)
    bc = load_bc(cfg.bc, p.n)
    window = cfg.window
    if window is None:
        spec = slp.eigenvalues_up_to(p, bc, max(cfg.jmax, 3),
                                     tol_lambda=cfg.tol_lambda)
    else:
        spec = slp.eigenvalues_shooting(p, bc, window, tol_lambda=cfg.tol_lambda,
                                        tau_rank=cfg.tol_rank)
    k = max(1, spec.count())
    gal = slp.galerkin_spectrum(p, bc, cfg.galerkin_n, k, tau_rank=cfg.tol_rank)
    rows = list(spec.csv_rows()) + list(gal.csv_rows())
    write_csv(out / "spectrum.csv", cfg,
              ["j", "lambda", "multiplicity", "method", "residual"], rows)
    agreement = [abs(a - b) for a, b in zip(spec.values, gal.values)]
    payload = {"command": "solve", "problem": cfg.problem,
               "eigenvalues": [{"lambda": l, "multiplicity": m}
                               for l, m in spec.entries],
               "galerkin": [v for v, _ in gal.entries],
               "max_method_gap": max(agreement) if agreement else None,
               "window": list(spec.window), "passed": True}
    write_report(out / "solve_report.json", cfg, payload)
    if cfg.plot:
        plotting.spectrum_figure(out / "spectrum.png", rows,
                                 title=f"{cfg.problem}: shooting vs Galerkin")
    return 0


def _cmd_maslov(cfg: RunConfig, out: Path) -> int:
    p = load_problem(cfg.problem)
    bc = load_bc(cfg.bc, p.n)
    cf = canonical_form(bc, tau_rank=cfg.tol_rank)
    m = 2 * p.n
    up = maslov.maslov_index(dirichlet(m),
                             experiments.tan_path_family(cf, 0.0, math.pi / 2))
    down = maslov.maslov_index(dirichlet(m),
                               experiments.tan_path_family(cf, -math.pi / 2, 0.0))
    br = up.branches
    write_csv(out / "branches.csv", cfg,
              ["t"] + [f"theta_{j + 1}" for j in range(br.m)], br.csv_rows())
    expected_up = -(m - cf.r)
    payload = {"command": "maslov", "layer": cf.r,
               "index_up": up.index, "expected_up": expected_up,
               "index_down": down.index, "expected_down": 0,
               "passed": up.index == expected_up and down.index == 0}
    write_report(out / "maslov_report.json", cfg, payload)
    if cfg.plot:
        plotting.branches_figure(out / "branches.png", br.ts, br.theta,
                                 title=f"tan-path eigenphases, layer {cf.r}")
    return 0 if payload["passed"] else 2


def _cmd_jump(cfg: RunConfig, out: Path) -> int:
    p = load_problem(cfg.problem)
    m = 2 * p.n
    rng = sampling.default_rng(cfg.seed)
    center_r = max(1, min(cfg.r if cfg.r else m, m))
    d = max(1, min(center_r, m - 1, 2))
    signs = [1 if rng.uniform() < 0.7 else -1 for _ in range(d)]
    path, spec = experiments.make_singular_path(m, center_r, signs, signs, rng)
    rep = experiments.jump_experiment(p, path, cfg.jmax,
                                      tol_lambda=cfg.tol_lambda)
    for side in ("minus", "plus"):
        svals, tables = rep.branch_curves[side]
        rows = []
        for s, vals in zip(svals, tables):
            for v in vals:
                rows.append([s, v])
        write_csv(out / f"jump_branches_{side}.csv", cfg, ["s", "lambda"], rows)
    payload = {"command": "jump", "constructed": spec.expected}
    payload.update(rep.to_json())
    write_report(out / "jump_report.json", cfg, payload)
    if cfg.plot:
        plotting.jump_figure(out / "jump.png", rep.branch_curves,
                             title=f"eigenvalue branches across the layer change "
                                   f"(k-={rep.k_minus}, k+={rep.k_plus})")
    return 0 if rep.passed else 2


def _cmd_range(cfg: RunConfig, out: Path) -> int:
    p = load_problem(cfg.problem)
    if cfg.j < 1 or not 0 <= cfg.r <= 2 * p.n:
        write_report(out / "range_report.json", cfg, {
            "command": "range", "passed": False,
            "explanation": f"the case table needs j >= 1 and 0 <= r <= {2 * p.n}; "
                           f"got j={cfg.j}, r={cfg.r}"})
        return 2
    rep = experiments.range_scan(p, cfg.j, cfg.r, cfg.samples, cfg.seed,
                                 tol_lambda=cfg.tol_lambda)
    write_csv(out / "range_samples.csv", cfg, ["sample", "lambda_j"],
              [[i, v] for i, v in enumerate(rep.samples)])
    write_report(out / "range_report.json", cfg, rep.to_json())
    if cfg.plot:
        plotting.range_figure(out / "range.png", rep,
                              title=f"range of eigenvalue {cfg.j} on layer {cfg.r}")
    return 0 if rep.passed else 2


def _cmd_limit(cfg: RunConfig, out: Path) -> int:
    p = load_problem(cfg.problem)
    scale = abs(slp.dirichlet_spectrum(p, 1).value(1))
    floor = -cfg.floor_factor * 10.0 * max(1.0, scale)
    rep = experiments.limit_experiment(p, floor, tol_lambda=cfg.tol_lambda)
    write_csv(out / "distcurve.csv", cfg, ["lambda", "dist"],
              list(zip(rep.lam_grid, rep.dist_curve)))
    write_report(out / "limit_report.json", cfg, rep.to_json())
    if cfg.plot:
        plotting.dist_curve_figure(out / "distcurve.png", rep.lam_grid,
                                   rep.dist_curve,
                                   title=f"{cfg.problem}: flow graph vs Dirichlet")
    return 0 if rep.passed else 2


def _cmd_axioms(cfg: RunConfig, out: Path) -> int:
    rep = maslov.verify_index_axioms(seed=cfg.seed, trials=cfg.trials)
    rows = [[k, v["trials"], v["failures"]]
            for k, v in rep.items() if isinstance(v, dict)]
    write_csv(out / "axioms.csv", cfg, ["axiom", "trials", "failures"], rows)
    write_report(out / "axioms_report.json", cfg,
                 {"command": "axioms", **rep})
    if cfg.plot:
        plotting.axioms_figure(out / "axioms.png", rep, title="index axioms")
    return 0 if rep["passed"] else 2


def run(cfg: RunConfig) -> int:
    """Execute the configured command; returns the process exit status."""
    out = Path(cfg.out or os.environ.get(ENV_OUT, "out"))
    out.mkdir(parents=True, exist_ok=True)
    dispatch = {"solve": _cmd_solve, "maslov": _cmd_maslov, "jump": _cmd_jump,
                "range": _cmd_range, "limit": _cmd_limit, "axioms": _cmd_axioms}
    try:
        return dispatch[cfg.command](cfg, out)
    except (errors.ToolkitError, ValueError, OSError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc),
                  "command": cfg.command}
        write_report(out / "error.json", cfg, record)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except errors.ToolkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    status = run(cfg)
    if status == 0:
        print(f"ok: {cfg.command} -> {cfg.out or os.environ.get(ENV_OUT, 'out')}")
    elif status == 2:
        print(f"invariant failure: see report in "
              f"{cfg.out or os.environ.get(ENV_OUT, 'out')}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
