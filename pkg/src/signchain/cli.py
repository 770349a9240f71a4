"""Command-line front end for the sign-chain pipelines.

Subcommands: kernel, gamma, curvature, poincare, correlation, probe,
verify. Every run resolves its configuration from defaults, then an
optional JSON config file, then explicit flags (flags win), validates
it before any compute, and writes a JSON report embedding the resolved
configuration. Reports are byte-identical across reruns of the same
configuration and seed apart from the timestamp field. Tabular kinds
also write a CSV next to the JSON report when --csv is given.

Exit codes: 0 success (all checked inequalities hold), 1 a checked
inequality failed, 2 invalid usage or configuration, 3 internal error.
The SIGNCHAIN_WORKERS environment variable is the only concurrency
control; results never depend on it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance
from .io import dump_json, rows_to_csv, to_jsonable, worker_map
from .lattice import LatticeParams, exact_ring_size
from .kernels import (
    kernel_to_json,
    mc_poissonized_two_point_kernel,
    mc_two_point_kernel,
    poisson_quantile,
    poisson_weights,
    STATE_PAIRS,
)
from .gamma import pair_matrices_k0, resolve_kernel_k0, starred_pair_k0
from .mcgamma import estimate_state_matrices
from .curvature import rho_k0, rho_sampled
from .verify import (
    check_local_poincare,
    correlation_bound_check,
    ergodic_limit_probe,
    pair_indicator,
    pair_product,
    pair_sum,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Invalid flags or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configuration plumbing

# per-subcommand configuration keys and defaults; None means unset
_KEYS = {
    "kernel": {
        "gamma": None, "coupling": 0.0, "n_steps": None, "t": None,
        "eps": None, "pair_distance": 1, "x1": None, "x2": None,
        "n_sites": None, "samples": None, "seed": 0,
        "out": None, "csv": False,
    },
    "gamma": {
        "gamma": None, "coupling": 0.0, "state": 0, "n_steps": None,
        "t": None, "eps": None, "pair_distance": 1, "samples": None,
        "n_batches": 32, "seed": 0, "out": None, "csv": False,
    },
    "curvature": {
        "gamma": None, "coupling": 0.0, "n_steps": None, "t": None,
        "eps": None, "sampled": False, "window_radius": 2,
        "pair_distance": 1, "eps_tail": 1e-6, "eps_shift": None,
        "samples": 20_000, "n_batches": 32, "seed": 0,
        "out": None, "csv": False,
    },
    "poincare": {
        "gamma": None, "coupling": 0.0, "t": None,
        "f": "sum,product,indicator0", "replicas": 200_000,
        "pair_distance": 1, "x1": None, "x2": None, "n_sites": None,
        "rho": None, "rho_table": None, "factor_stderr": 0.0,
        "rhs_scale": 1.0, "negative_control": False, "n_batches": 32,
        "seed": 0, "out": None, "csv": False,
    },
    "correlation": {
        "gamma": None, "coupling": 0.0, "t": None, "replicas": 200_000,
        "pair_distance": 1, "x1": None, "x2": None, "n_sites": None,
        "rho": None, "rho_table": None, "factor_stderr": 0.0,
        "n_batches": 32, "seed": 0, "out": None, "csv": False,
    },
    "probe": {
        "gamma": None, "coupling": 0.0, "t_grid": "1,2,4,8", "f": "sum",
        "replicas": 100_000, "pair_distance": 1, "x1": None, "x2": None,
        "n_sites": None, "rho": None, "rho_table": None, "n_batches": 32,
        "seed": 0, "out": None, "csv": False,
    },
    "verify": {
        "scale": 1.0, "quick": False, "only": None,
        "out": None, "csv": False,
    },
}


def _merge(args, kind):
    """Defaults, then config file fields, then explicit flags."""
    keys = _KEYS[kind]
    cfg = dict(keys)
    path = getattr(args, "config", None)
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise UsageError(f"config: {exc}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: invalid JSON ({exc})")
        if not isinstance(raw, dict):
            raise UsageError("config: a JSON object is required")
        for k, v in raw.items():
            if k not in keys:
                raise UsageError(
                    f"config: unknown field '{k}' for kind '{kind}'")
            cfg[k] = v
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg.get("csv") and not cfg.get("out"):
        raise UsageError("csv: requires out (the CSV is written next to "
                         "the JSON report)")
    return cfg


def _require(cfg, key):
    if cfg.get(key) is None:
        raise UsageError(f"{key}: required value missing")
    return cfg[key]


def _check_gamma(gamma):
    if not (float(gamma) > 1.0):
        raise UsageError("gamma: value greater than 1 required")
    return float(gamma)


def _horizon(cfg, default=None):
    n, t = cfg.get("n_steps"), cfg.get("t")
    if n is None and t is None:
        if default is not None:
            return default
        raise UsageError("horizon: one of n_steps or t required")
    if n is not None and t is not None:
        raise UsageError("horizon: n_steps and t are mutually exclusive")
    if n is not None:
        if int(n) < 0:
            raise UsageError("n_steps: non-negative integer required")
        return ("discrete", int(n))
    if float(t) < 0:
        raise UsageError("t: non-negative value required")
    eps = cfg.get("eps")
    if eps is None:
        return ("poisson", float(t))
    return ("poisson", float(t), float(eps))


def _parse_function(tag):
    tag = tag.strip()
    if tag == "sum":
        return pair_sum()
    if tag == "product":
        return pair_product()
    if tag.startswith("indicator"):
        rest = tag[len("indicator"):]
        try:
            state = int(rest) if rest else 0
        except ValueError:
            raise UsageError(f"f: malformed indicator tag '{tag}'")
        if not 0 <= state <= 3:
            raise UsageError("f: indicator state in 0..3 required")
        return pair_indicator(state)
    raise UsageError(f"f: unknown tag '{tag}' "
                     "(expected sum, product, or indicator0..indicator3)")


def _parse_functions(spec):
    parts = [p for p in str(spec).split(",") if p.strip()]
    if not parts:
        raise UsageError("f: at least one function tag required")
    return tuple(_parse_function(p) for p in parts)


def _parse_grid(spec):
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
    else:
        try:
            vals = [float(p) for p in str(spec).split(",") if p.strip()]
        except ValueError:
            raise UsageError("t_grid: comma-separated numbers required")
    if not vals or any(v <= 0 for v in vals) or any(
            b <= a for a, b in zip(vals, vals[1:])):
        raise UsageError("t_grid: strictly increasing positive times required")
    return vals


def _ring_and_pair(cfg, t):
    """Ring size and pair sites with the light-cone margin prevalidated."""
    d = int(cfg["pair_distance"])
    if d < 1:
        raise UsageError("pair_distance: positive integer required")
    if (cfg["x1"] is None) != (cfg["x2"] is None):
        raise UsageError("x1/x2: both or neither must be given")
    if cfg["x1"] is not None:
        if cfg["n_sites"] is None:
            raise UsageError("x1/x2: explicit pair sites require n_sites")
        ring = int(cfg["n_sites"])
        x1, x2 = int(cfg["x1"]), int(cfg["x2"])
        if not (0 <= x1 < x2 < ring):
            raise UsageError("x1/x2: 0 <= x1 < x2 < n_sites required")
        d = min(x2 - x1, ring - (x2 - x1))
    else:
        need = exact_ring_size(poisson_quantile(float(t), 1.0 - 1e-9) + 2, d)
        ring = int(cfg["n_sites"]) if cfg["n_sites"] is not None else need
        x1 = (ring - d) // 2
        x2 = x1 + d
    need = exact_ring_size(poisson_quantile(float(t), 1.0 - 1e-9) + 2, d)
    if ring < need:
        raise UsageError(
            f"n_sites: at least {need} required so the light cone of "
            f"t={t} (1-1e-9 Poisson quantile) never wraps")
    return ring, x1, x2


def _rho_spec(cfg, gamma):
    """Constant, loaded table, or the exact zero-coupling value."""
    if cfg["rho"] is not None and cfg["rho_table"] is not None:
        raise UsageError("rho: constant and rho_table are mutually exclusive")
    if cfg["rho"] is not None:
        return float(cfg["rho"])
    if cfg["rho_table"] is not None:
        try:
            raw = json.loads(Path(cfg["rho_table"]).read_text())
        except OSError as exc:
            raise UsageError(f"rho_table: {exc}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"rho_table: invalid JSON ({exc})")
        try:
            u = np.asarray([float(p[0]) for p in raw])
            r = np.asarray([float(p[1]) for p in raw])
        except (TypeError, ValueError, IndexError):
            raise UsageError("rho_table: a JSON list of [time, rho] pairs "
                             "is required")
        if u.size < 1 or np.any(np.diff(u) <= 0):
            raise UsageError("rho_table: strictly increasing times required")
        return (u, r)
    if float(cfg["coupling"]) == 0.0:
        return rho_k0(gamma).rho
    raise UsageError("rho: a constant or rho_table is required at nonzero "
                     "coupling (run the curvature command to estimate one)")


# ---------------------------------------------------------------------------
# subcommand runners; each returns (exit_code, result, csv_rows)


def _run_kernel(cfg):
    gamma = _check_gamma(_require(cfg, "gamma"))
    horizon = _horizon(cfg)
    coupling = float(cfg["coupling"])
    samples = cfg["samples"]
    if samples is None:
        if coupling != 0.0:
            raise UsageError("samples: Monte Carlo sample count required "
                             "at nonzero coupling")
        km = resolve_kernel_k0(gamma, horizon)
    else:
        t_guard = (horizon[1] if horizon[0] == "discrete"
                   else float(horizon[1]))
        ring, x1, x2 = _ring_and_pair(cfg, t_guard)
        params = LatticeParams(ring, coupling, gamma, int(cfg["seed"]))
        if horizon[0] == "discrete":
            km = mc_two_point_kernel(params, x1, x2, horizon[1],
                                     int(samples), seed=int(cfg["seed"]))
        else:
            km = mc_poissonized_two_point_kernel(params, x1, x2,
                                                 float(horizon[1]),
                                                 int(samples),
                                                 seed=int(cfg["seed"]))
    rows = []
    err = km.stderr
    for j in range(4):
        for i in range(4):
            rows.append({
                "from_state": j, "to_state": i,
                "probability": float(km.entries[i, j]),
                "stderr": None if err is None else float(err[i, j]),
            })
    return EXIT_OK, {"kernel": json.loads(kernel_to_json(km))}, rows


def _run_gamma(cfg):
    gamma = _check_gamma(_require(cfg, "gamma"))
    state = int(cfg["state"])
    if not 0 <= state <= 3:
        raise UsageError("state: index in 0..3 required")
    coupling = float(cfg["coupling"])
    samples = cfg["samples"]
    if samples is None:
        if coupling != 0.0:
            raise UsageError("samples: Monte Carlo sample count required "
                             "at nonzero coupling")
        horizon = _horizon(cfg, default=("discrete", 1))
        gp = pair_matrices_k0(gamma, horizon, state)
        n_star, m_star = starred_pair_k0(gamma, horizon, state)
        result = to_jsonable(gp)
        result["n_star"] = to_jsonable(n_star)
        result["m_star"] = to_jsonable(m_star)
    else:
        t = cfg.get("t")
        if t is None:
            raise UsageError("t: Monte Carlo form matrices run on the "
                             "continuized horizon")
        eps = float(cfg["eps"]) if cfg.get("eps") is not None else 1e-6
        level = poisson_weights(float(t), eps).level
        d = int(cfg["pair_distance"])
        ring = exact_ring_size(level + 2, d)
        x1 = (ring - d) // 2
        x2 = x1 + d
        params = LatticeParams(ring, coupling, gamma, int(cfg["seed"]))
        eta = np.ones(ring, dtype=np.int8)
        eta[x1], eta[x2] = STATE_PAIRS[state]
        gp = estimate_state_matrices(params, eta, x1, x2, float(t), eps,
                                     int(samples), seed=int(cfg["seed"]),
                                     n_batches=int(cfg["n_batches"]))
        result = to_jsonable(gp)
    rows = []
    for name in ("n_matrix", "m_matrix"):
        mat = result[name]
        for i in range(4):
            for j in range(4):
                rows.append({"matrix": name, "row": i, "col": j,
                             "value": mat[i][j]})
    return EXIT_OK, result, rows


def _run_curvature(cfg):
    gamma = _check_gamma(_require(cfg, "gamma"))
    coupling = float(cfg["coupling"])
    if coupling == 0.0 and not cfg["sampled"]:
        horizon = _horizon(cfg, default=("discrete", 1))
        rep = rho_k0(gamma, horizon)
        rows = [{"state": i, "ratio": float(rep.ratios[i]),
                 "m_psd_margin": float(rep.m_psd_margins[i]),
                 "n_psd_margin": float(rep.n_psd_margins[i])}
                for i in range(4)]
        return EXIT_OK, to_jsonable(rep), rows
    t = cfg.get("t")
    if t is None:
        raise UsageError("t: sampled curvature runs on the continuized "
                         "horizon")
    est = rho_sampled(gamma, coupling, float(t),
                      pair_distance=int(cfg["pair_distance"]),
                      window_radius=int(cfg["window_radius"]),
                      eps_tail=float(cfg["eps_tail"]),
                      eps_shift=(None if cfg["eps_shift"] is None
                                 else float(cfg["eps_shift"])),
                      samples=int(cfg["samples"]), seed=int(cfg["seed"]),
                      n_batches=int(cfg["n_batches"]))
    rows = [{"cell": c, "state": c % 4, "env": c // 4,
             "ratio": float(est.cell_ratios[c])}
            for c in range(est.cell_ratios.size)]
    return EXIT_OK, to_jsonable(est), rows


def _run_poincare(cfg):
    gamma = _check_gamma(_require(cfg, "gamma"))
    t = float(_require(cfg, "t"))
    functions = _parse_functions(cfg["f"])
    rho_spec = _rho_spec(cfg, gamma)
    ring, x1, x2 = _ring_and_pair(cfg, t)
    params = LatticeParams(ring, float(cfg["coupling"]), gamma,
                           int(cfg["seed"]))
    eta = np.ones(ring, dtype=np.int8)
    rhs_scale = float(cfg["rhs_scale"])
    if cfg["negative_control"]:
        rhs_scale *= 0.5
    reports = check_local_poincare(
        params, eta, x1, x2, t, functions, int(cfg["replicas"]), rho_spec,
        seed=int(cfg["seed"]), factor_stderr=float(cfg["factor_stderr"]),
        rhs_scale=rhs_scale, n_batches=int(cfg["n_batches"]))
    rows = [to_jsonable(r) for r in reports]
    code = EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL
    return code, {"reports": rows}, rows


def _run_correlation(cfg):
    gamma = _check_gamma(_require(cfg, "gamma"))
    t = float(_require(cfg, "t"))
    rho_spec = _rho_spec(cfg, gamma)
    ring, x1, x2 = _ring_and_pair(cfg, t)
    params = LatticeParams(ring, float(cfg["coupling"]), gamma,
                           int(cfg["seed"]))
    eta = np.ones(ring, dtype=np.int8)
    rep = correlation_bound_check(
        params, eta, x1, x2, t, int(cfg["replicas"]), rho_spec,
        seed=int(cfg["seed"]), factor_stderr=float(cfg["factor_stderr"]),
        n_batches=int(cfg["n_batches"]))
    result = to_jsonable(rep)
    code = EXIT_OK if rep.chain_passed else EXIT_FAIL
    return code, result, [result]


def _probe_point(item):
    params, eta, x1, x2, t, f, replicas, rho_spec, seed, n_batches = item
    return ergodic_limit_probe(params, eta, x1, x2, [t], f, replicas,
                               rho_spec, seed=seed, n_batches=n_batches)[0]


def _run_probe(cfg):
    gamma = _check_gamma(_require(cfg, "gamma"))
    grid = _parse_grid(cfg["t_grid"])
    f = _parse_function(str(cfg["f"]))
    rho_spec = _rho_spec(cfg, gamma)
    ring, x1, x2 = _ring_and_pair(cfg, grid[-1])
    params = LatticeParams(ring, float(cfg["coupling"]), gamma,
                           int(cfg["seed"]))
    eta = np.ones(ring, dtype=np.int8)
    items = [(params, eta, x1, x2, t, f, int(cfg["replicas"]), rho_spec,
              int(cfg["seed"]), int(cfg["n_batches"])) for t in grid]
    rows = worker_map(_probe_point, items)
    code = EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAIL
    return code, {"function": f.name, "rows": rows}, rows


def _run_verify(cfg):
    scale = 0.05 if cfg["quick"] else float(cfg["scale"])
    if not (0.0 < scale <= 1.0):
        raise UsageError("scale: value in (0, 1] required")
    numbers = None
    if cfg["only"] is not None:
        try:
            numbers = sorted({int(p) for p in str(cfg["only"]).split(",")
                              if p.strip()})
        except ValueError:
            raise UsageError("only: comma-separated criterion numbers "
                             "required")
        known = {n for n, _ in acceptance.CRITERIA}
        bad = [n for n in numbers if n not in known]
        if bad:
            raise UsageError(f"only: unknown criterion number {bad[0]}")
    results = acceptance.run_all(
        scale=scale, numbers=numbers,
        progress=lambda r: print(acceptance.format_result_line(r),
                                 flush=True))
    for r in results:
        for s in r.failing():
            print(f"      failing: {s.name}: {s.detail}")
    n_pass = sum(r.passed for r in results)
    total = sum(r.seconds for r in results)
    print(f"{n_pass}/{len(results)} criteria passed in {total:.1f} s")
    rows = [{"criterion": r.number, "title": r.title, "passed": r.passed,
             "seconds": round(r.seconds, 3)} for r in results]
    code = EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    return code, {"scale": scale, "criteria": to_jsonable(results)}, rows


_RUNNERS = {
    "kernel": _run_kernel,
    "gamma": _run_gamma,
    "curvature": _run_curvature,
    "poincare": _run_poincare,
    "correlation": _run_correlation,
    "probe": _run_probe,
    "verify": _run_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--out", help="JSON report path (default: stdout)")
    sub.add_argument("--csv", action="store_const", const=True,
                     default=None,
                     help="also write a CSV table next to --out")
    sub.add_argument("--json", action="store_const", const=True,
                     default=None,
                     help="write the JSON report (always on)")


def _add_lattice(sub):
    sub.add_argument("--gamma", type=float, help="drift parameter, > 1")
    sub.add_argument("--coupling", type=float, help="pair coupling K")
    sub.add_argument("--seed", type=int, help="base seed, 64-bit unsigned")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="signchain",
        description="simulate and verify the synchronous sign chain")
    subs = parser.add_subparsers(dest="kind", required=True)

    p = subs.add_parser("kernel", help="two-point transition kernel")
    _add_common(p)
    _add_lattice(p)
    p.add_argument("--n-steps", dest="n_steps", type=int,
                   help="discrete horizon")
    p.add_argument("--t", type=float, help="continuized horizon")
    p.add_argument("--eps", type=float, help="Poisson truncation tail mass")
    p.add_argument("--pair-distance", dest="pair_distance", type=int)
    p.add_argument("--x1", type=int, help="first site (requires n_sites)")
    p.add_argument("--x2", type=int, help="second site (requires n_sites)")
    p.add_argument("--n-sites", dest="n_sites", type=int)
    p.add_argument("--samples", type=int,
                   help="Monte Carlo replicas (omit for the closed form)")

    p = subs.add_parser("gamma", help="form matrices at one pair state")
    _add_common(p)
    _add_lattice(p)
    p.add_argument("--state", type=int, help="pair state index 0..3")
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--pair-distance", dest="pair_distance", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--n-batches", dest="n_batches", type=int)

    p = subs.add_parser("curvature", help="curvature ratio")
    _add_common(p)
    _add_lattice(p)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--sampled", action="store_const", const=True,
                   default=None,
                   help="force the sampled estimator even at K=0")
    p.add_argument("--window-radius", dest="window_radius", type=int)
    p.add_argument("--pair-distance", dest="pair_distance", type=int)
    p.add_argument("--eps-tail", dest="eps_tail", type=float)
    p.add_argument("--eps-shift", dest="eps_shift", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--n-batches", dest="n_batches", type=int)

    for name, helptext in (("poincare", "local variance bound check"),
                           ("correlation", "pair covariance bound chain")):
        p = subs.add_parser(name, help=helptext)
        _add_common(p)
        _add_lattice(p)
        p.add_argument("--t", type=float, help="horizon time")
        if name == "poincare":
            p.add_argument("--f", help="comma list of function tags")
            p.add_argument("--rhs-scale", dest="rhs_scale", type=float)
            p.add_argument("--negative-control", dest="negative_control",
                           action="store_const", const=True, default=None,
                           help="halve the bound; a tight bound then fails")
        p.add_argument("--replicas", type=int)
        p.add_argument("--pair-distance", dest="pair_distance", type=int)
        p.add_argument("--x1", type=int)
        p.add_argument("--x2", type=int)
        p.add_argument("--n-sites", dest="n_sites", type=int)
        p.add_argument("--rho", type=float, help="constant curvature value")
        p.add_argument("--rho-table", dest="rho_table",
                       help="JSON file of [time, rho] pairs")
        p.add_argument("--factor-stderr", dest="factor_stderr", type=float)
        p.add_argument("--n-batches", dest="n_batches", type=int)

    p = subs.add_parser("probe", help="variance bound along a time grid")
    _add_common(p)
    _add_lattice(p)
    p.add_argument("--t-grid", dest="t_grid",
                   help="comma list of increasing times")
    p.add_argument("--f", help="function tag")
    p.add_argument("--replicas", type=int)
    p.add_argument("--pair-distance", dest="pair_distance", type=int)
    p.add_argument("--x1", type=int)
    p.add_argument("--x2", type=int)
    p.add_argument("--n-sites", dest="n_sites", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--rho-table", dest="rho_table")
    p.add_argument("--n-batches", dest="n_batches", type=int)

    p = subs.add_parser("verify", help="run the acceptance suite")
    _add_common(p)
    p.add_argument("--scale", type=float,
                   help="replica scale factor in (0, 1]")
    p.add_argument("--quick", action="store_const", const=True, default=None,
                   help="smoke run at scale 0.05")
    p.add_argument("--only", help="comma list of criterion numbers")

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge(args, args.kind)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        code, result, rows = _RUNNERS[args.kind](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    report = {
        "kind": args.kind,
        "config": {k: v for k, v in cfg.items()},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "result": result,
    }
    text = dump_json(report)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    elif args.kind != "verify":
        sys.stdout.write(text)
    if cfg.get("csv"):
        Path(cfg["out"]).with_suffix(".csv").write_text(rows_to_csv(rows))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
