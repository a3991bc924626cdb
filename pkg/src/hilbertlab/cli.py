"""Command-line interface: transforms, norm estimation, simulations, constants,
and report/plot emission, with reproducible seeds and run manifests.

Every run writes a manifest JSON next to its output (full config echo plus a
content hash of each input file).  Exit codes: 0 success, 1 invocation/input
error, 2 a mathematical gate failed its tolerance (so CI can tell the two
apart).  Identical configurations produce byte-identical CSV output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from .core import (
    Domain,
    GaugePair,
    PiecewiseFunction,
    parse_gauge,
    parse_piecewise,
)
from .norms import (
    cross_domain_consistency,
    phi_psi_ratio_ascent,
    pichorides_constant,
    p_norm_power_iteration,
    reference_constants,
)
from .mcsim import (
    SimConfig,
    DeterministicIntegrand,
    check_orthogonality,
    estimate_decoupling_gamma,
    harmonic_inequality_check,
    mc_inequality,
    sign_of_path_integrand,
    simulate_pair,
    subordination_step_fractions,
    tau_moment_check,
)
from . import transforms as tr

GATE_EXIT = 2


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: str, header: list, rows: list):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(out_path: str, subcommand: str, config: dict, inputs: list):
    config = {k: v for k, v in sorted(config.items()) if v is not None}
    body = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": [os.path.basename(out_path)],
    }
    blob = json.dumps(body, sort_keys=True)
    body["id"] = hashlib.sha256(blob.encode()).hexdigest()[:16]
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)


def _parse_points(spec: str) -> np.ndarray:
    """Points argument: inline floats ('2' or '0.5,1.5'), 'grid:lo:hi:n', or a
    file with one whitespace-separated point per line."""
    if spec.startswith("grid:"):
        _, lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))[:, None]
    try:
        vals = [float(tok) for tok in spec.replace(",", " ").split()]
        return np.array(vals)[:, None]
    except ValueError:
        pass
    rows = []
    with open(spec) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append([float(t) for t in line.split()])
    return np.array(rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_constants(args) -> int:
    ref = reference_constants(args.p)
    print(f"p*={ref['p_star']:g}, pichorides={ref['pichorides']:.6f}, "
          f"beta_hilbert={ref['beta_hilbert']:g}, wds_bound={ref['wds_bound_hilbert']:.6f}")
    if args.out:
        _write_csv(args.out,
                   ["p", "p_star", "pichorides", "beta_hilbert", "wds_bound"],
                   [[args.p, ref["p_star"], ref["pichorides"], ref["beta_hilbert"],
                     ref["wds_bound_hilbert"]]])
        _write_manifest(args.out, "constants", {"p": args.p}, [])
    return 0


def _builtin_bump(pts):
    pts = np.atleast_2d(pts)
    return np.exp(-0.5 * np.sum(pts ** 2, axis=1))


def _cmd_transform(args) -> int:
    points = _parse_points(args.points)
    inputs = []
    f = None
    if args.input:
        with open(args.input) as fh:
            f = parse_piecewise(fh.read())
        inputs.append(args.input)
    rows = []
    for pt in points:
        if args.op == "ht":
            val = tr.periodic_hilbert_step(f, float(pt[0]))
        elif args.op == "hr":
            val = tr.real_hilbert_step(f, float(pt[0]))
        elif args.op == "hdis":
            val = tr.discrete_hilbert(f, int(pt[0]))
        elif args.op == "hsemi":
            val = tr.semidiscrete_hilbert(f, args.eps, float(pt[0]))
        elif args.op == "tj":
            val = tr.hilbert_operator_T(f, float(pt[0]), d=1, j=1)
        elif args.op == "dir":
            theta = np.array([float(t) for t in args.theta.split(",")])
            target = f if f is not None else _builtin_bump
            val = tr.directional_hilbert(target, theta, pt[: len(theta)])
        elif args.op == "riesz":
            target = f if f is not None else _builtin_bump
            val = tr.riesz_rotations(target, args.j, pt, nodes=args.nodes)
        else:
            raise ValueError(f"unknown op {args.op}")
        rows.append(list(pt) + list(np.atleast_1d(val)))
    n_pt = points.shape[1]
    n_val = len(rows[0]) - n_pt if rows else 0
    header = [f"x{i+1}" for i in range(n_pt)] + [f"v{i+1}" for i in range(n_val)]
    _write_csv(args.out, header, rows)
    _write_manifest(args.out, "transform",
                    {"op": args.op, "points": args.points, "eps": args.eps,
                     "theta": args.theta, "j": args.j, "nodes": args.nodes,
                     "input": args.input}, inputs)
    return 0


def _cmd_norm_estimate(args) -> int:
    rows = []
    gate_ok = True
    ceiling = pichorides_constant(args.p)
    if args.gauges:
        phi_s, psi_s = args.gauges.split(",")
        pair = GaugePair(parse_gauge(phi_s), parse_gauge(psi_s))
        est = phi_psi_ratio_ascent(pair, args.size, constraint=args.constraint,
                                   seed=args.seed, tol=args.tol)
        bound = ceiling ** args.p  # Power(p)/Power(p) ratios live on the p-th-power scale
        gate_ok = est.lower_bound <= bound + 1e-6
        rows.append([f"{args.op}:{args.gauges}:{args.constraint}", args.p, args.size,
                     est.lower_bound, bound, est.iterations, est.residual, est.converged])
    else:
        est = p_norm_power_iteration(args.op, args.p, size=args.size,
                                     scheme=args.scheme, tol=args.tol, seed=args.seed)
        gate_ok = est.lower_bound <= ceiling + 1e-6
        rows.append([f"{args.op}:{args.scheme}", args.p, args.size, est.lower_bound,
                     ceiling, est.iterations, est.residual, est.converged])
    _write_csv(args.out,
               ["operator", "p", "size", "estimate", "pichorides", "iterations",
                "residual", "converged"],
               rows)
    _write_manifest(args.out, "norm-estimate",
                    {"op": args.op, "p": args.p, "size": args.size,
                     "scheme": args.scheme, "gauges": args.gauges,
                     "constraint": args.constraint, "tol": args.tol,
                     "seed": args.seed}, [])
    return 0 if gate_ok else GATE_EXIT


def _load_torus_input(path: str) -> PiecewiseFunction:
    with open(path) as fh:
        f = parse_piecewise(fh.read())
    if f.domain is not Domain.TORUS:
        raise ValueError("this experiment needs a torus step function")
    return f


def _cmd_simulate(args) -> int:
    config = SimConfig(dt=args.dt, n_paths=args.paths, seed=args.seed)
    if args.gauges:
        phi_s, psi_s = args.gauges.split(",")
        gauges = GaugePair(parse_gauge(phi_s), parse_gauge(psi_s))
    else:
        gauges = GaugePair.power(args.p)
    rows = []
    inputs = []
    gate_ok = True

    def add(quantity, estimate, sigma, target, passed):
        nonlocal gate_ok
        gate_ok = gate_ok and passed
        rows.append([args.experiment, quantity, estimate, sigma,
                     estimate - 3 * sigma, estimate + 3 * sigma, target, passed])

    if args.experiment == "inequality":
        f = _load_torus_input(args.input)
        inputs.append(args.input)
        res = mc_inequality(f, gauges, config)
        bound = pichorides_constant(args.p) ** args.p
        add("ratio_vs_boundary", res["ratio"], res["sigma"], res["boundary_ratio"],
            abs(res["ratio"] - res["boundary_ratio"]) <= 3 * res["sigma"])
        add("ratio_vs_ceiling", res["ratio"], res["sigma"], bound,
            res["ratio"] <= bound + 3 * res["sigma"])
    elif args.experiment == "orthogonality":
        f = _load_torus_input(args.input)
        inputs.append(args.input)
        x1 = [np.eye(f.space.dim)[k] for k in range(f.space.dim)]
        res = {}
        for label, dt in (("fine", args.dt), ("coarse", 4.0 * args.dt)):
            cfg = SimConfig(dt=dt, n_paths=args.paths, seed=args.seed)
            covs, bad, tot, i, ok = [], 0, 0, 0, 0
            while ok < args.paths:
                pair = simulate_pair(f, cfg, path_index=i)
                i += 1
                if pair.resample:
                    continue
                ok += 1
                covs.append(check_orthogonality(pair, x1))
                b, t = subordination_step_fractions(pair, x1, 10.0 * dt)
                bad += b
                tot += t
            res[label] = (float(np.sqrt(np.mean(np.array(covs) ** 2))), bad / tot)
        halving = res["fine"][0] / res["coarse"][0]
        add("rms_covariation_halving", halving, 0.15 / 3.0, 0.5,
            abs(halving - 0.5) <= 0.15)
        add("subordination_bad_fraction", res["fine"][1], 0.0, 0.01,
            res["fine"][1] <= 0.01)
    elif args.experiment == "decoupling":
        if args.integrand == "deterministic":
            times = np.linspace(0.0, 1.0, 33)
            phi = DeterministicIntegrand(times, 1.5 + np.sin(np.arange(32)))
        else:
            phi = sign_of_path_integrand(np.linspace(0.0, 1.0, 33))
        res = estimate_decoupling_gamma(phi, args.p, config)
        if res["degenerate"]:
            print("degenerate integrand: both integrals vanish", file=sys.stderr)
            return 1
        if args.integrand == "deterministic" and args.p == 2.0:
            add("beta_plus_lb", res["beta_plus_lb"], res["sigma_plus"], 1.0,
                abs(res["beta_plus_lb"] - 1.0) <= 0.02)
            add("beta_minus_lb", res["beta_minus_lb"], res["sigma_minus"], 1.0,
                abs(res["beta_minus_lb"] - 1.0) <= 0.02)
        else:
            bound = pichorides_constant(args.p)
            worst = max(res["beta_plus_lb"], res["beta_minus_lb"])
            sig = max(res["sigma_plus"], res["sigma_minus"])
            add("max_ratio_vs_transform_norm", worst, sig, bound,
                worst <= bound + 3 * sig)
    elif args.experiment == "tau":
        res = tau_moment_check(config)
        add("E_tau", res["E_tau"], res["sigma_tau"], 1.0,
            abs(res["E_tau"] - 1.0) <= 3 * res["sigma_tau"])
        add("E_tau_sq", res["E_tau_sq"], res["sigma_tau_sq"], 5.0 / 3.0,
            abs(res["E_tau_sq"] - 5.0 / 3.0) <= 3 * res["sigma_tau_sq"])
        target = math.sqrt(6.0) / math.sqrt(5.0 * math.pi)
        add("decoupling_C_lower", res["C_lower"], res["sigma_C"], target,
            res["C_lower"] >= target - 3 * res["sigma_C"])
    elif args.experiment == "harmonic":
        if args.domain == "disc":
            f = _load_torus_input(args.input)
            inputs.append(args.input)
            res = harmonic_inequality_check("disc", f, None, gauges, config)
        else:
            # built-in conjugate polynomial pair (f, g) = (x, y) on the square
            res = harmonic_inequality_check(
                "square", lambda p: p[:, 0], lambda p: p[:, 1], gauges, config)
        bound = pichorides_constant(args.p) ** args.p
        add("boundary_ratio", res["ratio"], res["sigma"], bound,
            res["ratio"] <= bound + 3 * res["sigma"])
        rows.append([args.experiment, "hypotheses_verified",
                     1.0 if res["verified_hypotheses"] else 0.0, 0.0, 0.0, 0.0,
                     1.0, True])
    else:
        raise ValueError(f"unknown experiment {args.experiment}")

    _write_csv(args.out,
               ["experiment", "quantity", "estimate", "sigma", "lo3", "hi3",
                "target", "pass"],
               rows)
    _write_manifest(args.out, "simulate",
                    {"experiment": args.experiment, "input": args.input,
                     "p": args.p, "gauges": args.gauges, "dt": args.dt,
                     "paths": args.paths, "seed": args.seed,
                     "domain": args.domain, "integrand": args.integrand},
                    inputs)
    return 0 if gate_ok else GATE_EXIT


def _svg_line_chart(path: str, series: dict, ceiling: float, title: str):
    """Minimal hand-emitted SVG: estimate-vs-size polylines under the ceiling."""
    W, H, pad = 640, 400, 56
    xs = sorted({x for pts in series.values() for x, _ in pts})
    ys = [y for pts in series.values() for _, y in pts] + [ceiling]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys) * 0.98, max(ys) * 1.02

    def X(x):
        span = math.log(x_hi / x_lo) if x_hi > x_lo else 1.0
        return pad + (W - 2 * pad) * (math.log(x / x_lo) / span if span else 0.5)

    def Y(y):
        return H - pad - (H - 2 * pad) * (y - y_lo) / (y_hi - y_lo)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W/2}" y="24" text-anchor="middle" font-size="15">{title}</text>']
    cy = Y(ceiling)
    parts.append(f'<line x1="{pad}" y1="{cy:.1f}" x2="{W-pad}" y2="{cy:.1f}" '
                 'stroke="#444" stroke-dasharray="6,4"/>')
    parts.append(f'<text x="{W-pad}" y="{cy-6:.1f}" text-anchor="end" font-size="12">'
                 f'ceiling {ceiling:.6f}</text>')
    for ci, (label, pts) in enumerate(sorted(series.items())):
        pts = sorted(pts)
        poly = " ".join(f"{X(x):.1f},{Y(y):.1f}" for x, y in pts)
        col = colors[ci % len(colors)]
        parts.append(f'<polyline points="{poly}" fill="none" stroke="{col}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{X(x):.1f}" cy="{Y(y):.1f}" r="3" fill="{col}"/>')
        lx, ly = pts[-1]
        parts.append(f'<text x="{X(lx)+6:.1f}" y="{Y(ly)+4:.1f}" font-size="12" '
                     f'fill="{col}">{label}</text>')
    parts.append(f'<line x1="{pad}" y1="{H-pad}" x2="{W-pad}" y2="{H-pad}" stroke="#000"/>')
    parts.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H-pad}" stroke="#000"/>')
    for x in xs:
        parts.append(f'<text x="{X(x):.1f}" y="{H-pad+18}" text-anchor="middle" '
                     f'font-size="11">{x}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def _cmd_report(args) -> int:
    manifests = []
    seen = {}
    for mpath in args.manifests:
        with open(mpath) as fh:
            m = json.load(fh)
        mid = m.get("id", mpath)
        blob = json.dumps({k: v for k, v in m.items() if k != "id"}, sort_keys=True)
        digest = hashlib.sha256(blob.encode()).hexdigest()
        if mid in seen and seen[mid] != digest:
            print(f"conflicting manifests with id {mid}", file=sys.stderr)
            return 1
        seen[mid] = digest
        m["_dir"] = os.path.dirname(os.path.abspath(mpath))
        manifests.append((mid, m))
    rows = []
    series = {}
    ceiling = None
    for mid, m in manifests:
        for out in m["outputs"]:
            csv_path = os.path.join(m["_dir"], out)
            if not os.path.exists(csv_path):
                print(f"manifest {mid}: missing output file {out}", file=sys.stderr)
                return 1
            with open(csv_path) as fh:
                header = fh.readline().strip().split(",")
                for line in fh:
                    rec = dict(zip(header, line.strip().split(",")))
                    if m["subcommand"] == "norm-estimate" and "estimate" in rec:
                        est = float(rec["estimate"])
                        ceil = float(rec["pichorides"])
                        ceiling = ceil
                        gap = ceil - est
                        rows.append([mid, rec["operator"], rec["p"], rec["size"],
                                     est, ceil, gap, est <= ceil + 1e-6])
                        series.setdefault(rec["operator"], []).append(
                            (int(rec["size"]), est))
                    elif "quantity" in rec:
                        rows.append([mid, rec["experiment"], rec["quantity"],
                                     rec.get("estimate", ""), rec.get("target", ""),
                                     "", rec.get("pass", "")])
    out_csv = os.path.join(args.out, "summary.csv")
    os.makedirs(args.out, exist_ok=True)
    _write_csv(out_csv, ["id", "what", "p_or_quantity", "size_or_estimate",
                         "estimate_or_target", "ceiling_or_gap", "gap_or_blank",
                         "pass"],
               [r + [""] * (8 - len(r)) for r in rows])
    if args.svg and series and ceiling is not None:
        _svg_line_chart(os.path.join(args.out, "estimates.svg"), series, ceiling,
                        "norm estimates vs truncation size")
    print(f"report written to {args.out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hilbertlab",
        description="Hilbert-transform norm laboratory: exact transforms, "
                    "sharp-constant estimators, and martingale Monte Carlo.")
    ap.add_argument("--config", help="key=value file with default options")
    sub = ap.add_subparsers(dest="subcommand")

    default_seed = int(os.environ.get("HILBERTLAB_SEED", "20240901"))

    c = sub.add_parser("constants", help="closed-form reference constants at p")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--out", help="optional CSV (columns: p, p_star, pichorides, "
                                 "beta_hilbert, wds_bound)")

    t = sub.add_parser("transform", help="apply a transform to a step function")
    t.add_argument("--op", required=True,
                   choices=["ht", "hr", "hdis", "hsemi", "tj", "dir", "riesz"])
    t.add_argument("--input", help="step function file (core format); "
                                   "omit for dir/riesz to use the built-in gaussian bump")
    t.add_argument("--points", required=True,
                   help="inline floats, 'grid:lo:hi:n', or a points file")
    t.add_argument("--eps", type=float, default=1.0, help="lattice spacing for hsemi")
    t.add_argument("--theta", default="1", help="direction components for dir")
    t.add_argument("--j", type=int, default=1, help="coordinate index for riesz")
    t.add_argument("--nodes", type=int, default=256, help="sphere quadrature nodes")
    t.add_argument("--out", required=True, help="CSV: point coords then value coords")

    n = sub.add_parser("norm-estimate", help="lower-bound an operator norm")
    n.add_argument("--op", default="hdis", choices=["ht", "hr", "hdis"])
    n.add_argument("--p", type=float, required=True)
    n.add_argument("--size", type=int, default=1024)
    n.add_argument("--scheme", default="graded", choices=["graded", "uniform"])
    n.add_argument("--gauges", help="phi,psi (e.g. pow3,pow3) switches to ratio ascent")
    n.add_argument("--constraint", default="none", choices=["none", "zero-mean"])
    n.add_argument("--tol", type=float, default=1e-9)
    n.add_argument("--seed", type=int, default=default_seed)
    n.add_argument("--out", required=True,
                   help="CSV: operator, p, size, estimate, pichorides, iterations, "
                        "residual, converged")

    s = sub.add_parser("simulate", help="martingale Monte Carlo experiments")
    s.add_argument("--experiment", required=True,
                   choices=["inequality", "orthogonality", "decoupling", "tau", "harmonic"])
    s.add_argument("--input", help="torus step function file")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--gauges", help="phi,psi descriptors (default pow p, pow p)")
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--paths", type=int, default=10000)
    s.add_argument("--seed", type=int, default=default_seed)
    s.add_argument("--domain", default="disc", choices=["disc", "square"])
    s.add_argument("--integrand", default="deterministic",
                   choices=["deterministic", "sign"])
    s.add_argument("--out", required=True,
                   help="CSV: experiment, quantity, estimate, sigma, lo3, hi3, "
                        "target, pass")

    r = sub.add_parser("report", help="merge run manifests into a summary")
    r.add_argument("--manifests", nargs="+", required=True)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--svg", action="store_true", help="emit convergence SVG")
    return ap


def _apply_config_file(argv: list) -> list:
    """Prepend options from a key=value --config file (CLI flags win)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    extra = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            flag = "--" + key.strip()
            if flag not in argv:
                extra.extend([flag, value.strip()])
    head = argv[:1] if argv and not argv[0].startswith("-") else []
    return head + extra + argv[len(head):]


def run(argv: list) -> int:
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 1
    handler = {
        "constants": _cmd_constants,
        "transform": _cmd_transform,
        "norm-estimate": _cmd_norm_estimate,
        "simulate": _cmd_simulate,
        "report": _cmd_report,
    }[args.subcommand]
    try:
        return handler(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
