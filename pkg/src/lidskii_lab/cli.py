"""Command-line entry point ``lidskii``.

Every subcommand writes its tables and a JSON envelope
``{op, inputs_digest, outputs, margins}`` into ``--out-dir`` and exits with
status 0 exactly when all of its declared assertions pass.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import evolution, io, schatten, zoo
from .contour import contour_integral, s1_contour_sum
from .jordan import DEFAULT_TOL, jordan_decompose
from .summation import abel_lidskii_sum, bracketing_plan, s1_norm_monitor, series_context

log = logging.getLogger("lidskii")

GENERATORS = {
    "power_law": lambda a: schatten.power_law(a.rho),
    "n_log_n": lambda a: schatten.n_log_n(a.rho),
    "geometric": lambda a: schatten.geometric(a.ratio),
    "subtle": lambda a: schatten.subtle_sequence(a.kappa, a.q),
}


def _parse_params(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise SystemExit(f"parameter {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _finish(out_dir: Path, name: str, op: str, inputs, outputs, checks) -> int:
    margins = {k: {"passed": bool(p), "value": v, "threshold": thr} for k, (p, v, thr) in checks.items()}
    io.write_json(out_dir / f"{name}.json", io.envelope(op, inputs, outputs, margins))
    ok = all(m["passed"] for m in margins.values())
    for k, m in margins.items():
        log.info("%s %s: %s (value %s, threshold %s)", op, k, "PASS" if m["passed"] else "FAIL", m["value"], m["threshold"])
    return 0 if ok else 1


def _models_from(args):
    if args.config:
        cfg = evolution.load_config(args.config, {"seed": args.seed})
        return cfg, cfg.models
    if not args.variant:
        raise SystemExit("either --config or --variant is required")
    spec = evolution.ModelSpec("main", args.variant, _parse_params(args.param))
    return None, [spec]


def cmd_zoo_build(args) -> int:
    out = Path(args.out_dir)
    _, specs = _models_from(args)
    outputs, checks = {}, {}
    for spec in specs:
        model = zoo.build(spec.variant, **spec.params)
        io.write_matrix(out / f"B_{spec.ident}.mtx", model.b)
        if model.w is not None:
            io.write_matrix(out / f"W_{spec.ident}.mtx", model.w)
        rs = evolution.model_root_system(model)
        (out / f"root_system_{spec.ident}.json").write_text(rs.to_json() + "\n")
        theta = evolution.sector_angle(model.b)
        outputs[spec.ident] = {"variant": model.variant, "dim": model.dim, "theta": theta}
        checks[f"{spec.ident}.sectorial"] = (theta < math.pi / 2, theta, math.pi / 2)
    inputs = {"models": [vars(s) for s in specs], "seed": args.seed}
    return _finish(out, "zoo", "zoo build", inputs, outputs, checks)


def cmd_diag_schatten(args) -> int:
    out = Path(args.out_dir)
    if args.sequence:
        seq = schatten.SingularSequence.explicit(io.read_sequence(args.sequence), name=Path(args.sequence).stem)
    else:
        seq = GENERATORS[args.generator](args)
    window = tuple(int(x) for x in args.window.split(","))
    if seq.length is not None:
        window = (window[0], min(window[1], seq.length))
    est = schatten.convergence_exponent(seq, window)
    rows = [("rho_hat", est.rho_hat), ("mu_hat", est.mu_hat), ("class", est.class_tag),
            ("residual", est.residual), ("slope_log_log", est.slope_log_log)]
    outputs = {"rho_hat": est.rho_hat, "mu_hat": est.mu_hat, "class": est.class_tag,
               "window": list(est.fit_window), "super_polynomial": est.super_polynomial}
    checks = {}
    if args.p:
        sn = schatten.schatten_norm(seq, args.p, n_max=min(seq.length or 10 ** 6, 10 ** 6))
        rows.append((f"schatten_sum_p{args.p}", sn.partial))
        outputs["schatten"] = {"p": args.p, "partial": sn.partial, "tail_flag": sn.tail_flag}
    if args.expect_rho is not None:
        err = abs(est.rho_hat - args.expect_rho) / args.expect_rho
        checks["rho_recovered"] = (err <= args.rtol, err, args.rtol)
    io.write_csv(out / "schatten.csv", ["quantity", "value"], rows)
    head = seq.head(min(seq.length or 1000, 1000))
    io.write_sequence(out / "sequence.csv", head)
    inputs = {"sequence": args.sequence or args.generator, "rho": args.rho, "kappa": args.kappa, "q": args.q,
              "ratio": args.ratio, "window": list(window), "p": args.p, "seed": args.seed}
    return _finish(out, "schatten", "diag schatten", inputs, outputs, checks)


def cmd_jordan(args) -> int:
    out = Path(args.out_dir)
    if args.matrix:
        b = io.read_matrix(args.matrix)
        rs = jordan_decompose(b, args.tol)
        label = Path(args.matrix).stem
    else:
        _, specs = _models_from(args)
        model = zoo.build(specs[0].variant, **specs[0].params)
        b = model.b
        rs = jordan_decompose(b, args.tol)
        label = specs[0].ident
    res = rs.residuals(b)
    (out / "root_system.json").write_text(rs.to_json() + "\n")
    rows = [(i, c.eigenvalue.real, c.eigenvalue.imag, c.length, r) for i, (c, r) in enumerate(zip(rs.chains, res))]
    io.write_csv(out / "chains.csv", ["chain", "mu_re", "mu_im", "length", "residual"], rows)
    worst = max(res) if res else 0.0
    outputs = {"source": label, "chains": len(rs.chains), "condition_number": rs.condition_number(),
               "characteristic_numbers": [1 / c.eigenvalue for c in rs.chains]}
    checks = {"chain_residual": (worst <= 1e-8, worst, 1e-8)}
    return _finish(out, "jordan", "jordan", {"matrix": io.digest(np.asarray(b)), "tol": args.tol}, outputs, checks)


def _config(args):
    return evolution.load_config(args.config, {"seed": args.seed})


def cmd_sum(args) -> int:
    out = Path(args.out_dir)
    cfg = _config(args)
    dig = cfg.digest()
    phi = cfg.phi()
    rows, outputs, checks = [], {}, {}
    ts = [t for t in cfg.t_grid if t > 0]
    for spec in cfg.models:
        model = zoo.build(spec.variant, **spec.params)
        f = evolution.initial_vector(model, cfg.f_kind, cfg.f_index, cfg.seed, cfg.f_path)
        rs = evolution.model_root_system(model)
        ctx = series_context(model.b, f, rs)
        plan = bracketing_plan(ctx.lambda_abs, cfg.plan_alpha, cfg.plan_K)
        bad = plan.verify()
        checks[f"{spec.ident}.plan_algebra"] = (not bad, len(bad), 0)
        res = evolution._map(lambda t: abel_lidskii_sum(model.b, phi, t, f, plan=plan, rs=rs), ts, args.threads)
        for t, r in zip(ts, res):
            for nu, norm in enumerate(r.group_norms):
                rows.append((dig, spec.ident, t, nu, plan.boundaries[nu], float(norm)))
        outputs[spec.ident] = {"groups": len(plan.boundaries), "K": plan.K, "warning": plan.warning}
        if ts and (spec.ident in cfg.monitor or "all" in cfg.monitor):
            mon = s1_norm_monitor([r.group_norms for r in res], ts, 1e-3, cfg.monitor_skip)
            checks[f"{spec.ident}.s1_monitor"] = (mon.summable, max(mon.last_over_max), 1e-3)
    io.write_csv(out / "groups.csv", evolution.GROUP_HEADER, rows)
    return _finish(out, "sum", "sum", cfg.as_dict(), outputs, checks)


def cmd_contour(args) -> int:
    out = Path(args.out_dir)
    cfg = _config(args)
    dig = cfg.digest()
    phi = cfg.phi()
    alpha_phi = evolution._power_alpha(phi)
    rows, outputs, checks = [], {}, {}
    ts = [t for t in cfg.t_grid if t > 0]
    for spec in cfg.models:
        model = zoo.build(spec.variant, **spec.params)
        f = evolution.initial_vector(model, cfg.f_kind, cfg.f_index, cfg.seed, cfg.f_path)
        rs = evolution.model_root_system(model)
        ctx = series_context(model.b, f, rs)
        plan = bracketing_plan(ctx.lambda_abs, cfg.plan_alpha, cfg.plan_K)
        theta = evolution.sector_angle(model.b)
        cs = evolution._contour_spec(ctx.lambdas, theta, cfg, alpha_phi)
        worst = 0.0
        for t in ts:
            if phi.name == "power":
                rep = s1_contour_sum(model.b, alpha_phi, t, f, cs, plan=plan, theta=theta, rs=rs)
                err = rep.agreement
                rows.append((dig, spec.ident, t, err, rep.reassembly, rep.ring_summable["J"], rep.ring_summable["J_plus"], rep.ring_summable["J_minus"]))
            else:
                series = abel_lidskii_sum(model.b, phi, t, f, plan=plan, rs=rs).value
                q = contour_integral(np.linalg.inv(model.b), lambda lam, t=t: np.exp(-t * phi(lam)), f, cs)
                err = float(np.linalg.norm(q.value - series) / max(np.linalg.norm(series), 1e-300))
                rows.append((dig, spec.ident, t, err, 0.0, "", "", ""))
            worst = max(worst, err)
        outputs[spec.ident] = {"theta": theta, "r": cs.r, "epsilon": cs.epsilon}
        checks[f"{spec.ident}.contour_cross_check"] = (worst <= evolution.CROSS_TOL, worst, evolution.CROSS_TOL)
    io.write_csv(out / "contour.csv", evolution.CONTOUR_HEADER, rows)
    return _finish(out, "contour", "contour", cfg.as_dict(), outputs, checks)


def cmd_evolve(args) -> int:
    out = Path(args.out_dir)
    cfg = _config(args)
    dig = cfg.digest()
    phi = cfg.phi()
    traj, resid, outputs, checks = [], [], {}, {}
    for spec in cfg.models:
        model = zoo.build(spec.variant, **spec.params)
        f = evolution.initial_vector(model, cfg.f_kind, cfg.f_index, cfg.seed, cfg.f_path)
        sol = evolution.solve_cauchy(model, phi, f, cfg.t_grid, cfg.plan_alpha, cfg.plan_K, args.threads)
        for p in sol.points:
            for i, v in enumerate(p.u):
                traj.append((dig, spec.ident, p.t, i + 1, float(v.real), float(v.imag)))
            resid.append((dig, spec.ident, p.t, "" if p.residual is None else p.residual, "" if p.step is None else p.step))
        outputs[spec.ident] = {"limit_error": sol.limit_error, "smallest_stencil_t": sol.smallest_t, "notes": sol.notes}
        checks[f"{spec.ident}.evolution_residual"] = (sol.max_residual <= evolution.RESIDUAL_TOL, sol.max_residual,
                                                      evolution.RESIDUAL_TOL)
        checks[f"{spec.ident}.limit_t0"] = (sol.limit_error <= evolution.LIMIT_TOL, sol.limit_error, evolution.LIMIT_TOL)
    io.write_csv(out / "trajectory.csv", evolution.TRAJECTORY_HEADER, traj)
    io.write_csv(out / "residuals.csv", evolution.RESIDUAL_HEADER, resid)
    return _finish(out, "evolve", "evolve", cfg.as_dict(), outputs, checks)


def cmd_report(args) -> int:
    cfg = _config(args)
    try:
        env = evolution.run_experiment(cfg, out_dir=args.out_dir, threads=args.threads)
    except evolution.ExperimentError as exc:
        log.error("%s", exc)
        return 1
    for k, m in env.margins.items():
        log.info("report %s: %s (value %s)", k, "PASS" if m["passed"] else "FAIL", m["value"])
    return 0 if env.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out-dir", default="out", help="directory for tables and envelopes")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent t points")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lidskii", description="Spectral toolkit for sectorial non-selfadjoint operators")
    sub = p.add_subparsers(dest="command", required=True)

    zp = sub.add_parser("zoo", help="operator zoo")
    zsub = zp.add_subparsers(dest="zoo_command", required=True)
    zb = zsub.add_parser("build", parents=[common], help="build a model and export its matrices")
    zb.add_argument("--config")
    zb.add_argument("--variant")
    zb.add_argument("--param", action="append", help="constructor parameter key=value (repeatable)")
    zb.set_defaults(func=cmd_zoo_build)

    dp = sub.add_parser("diag", help="sequence diagnostics")
    dsub = dp.add_subparsers(dest="diag_command", required=True)
    ds = dsub.add_parser("schatten", parents=[common], help="order estimate and Schatten sums")
    src = ds.add_mutually_exclusive_group(required=True)
    src.add_argument("--sequence", help="CSV file with columns n, s_n")
    src.add_argument("--generator", choices=sorted(GENERATORS))
    ds.add_argument("--rho", type=float, default=1.0)
    ds.add_argument("--kappa", type=float, default=1.0)
    ds.add_argument("--q", type=float, default=15.0)
    ds.add_argument("--ratio", type=float, default=0.5)
    ds.add_argument("--window", default="1000,1000000")
    ds.add_argument("--p", type=float)
    ds.add_argument("--expect-rho", type=float)
    ds.add_argument("--rtol", type=float, default=0.05)
    ds.set_defaults(func=cmd_diag_schatten)

    jp = sub.add_parser("jordan", parents=[common], help="numerical Jordan structure")
    jp.add_argument("--matrix", help="Matrix Market file")
    jp.add_argument("--config")
    jp.add_argument("--variant")
    jp.add_argument("--param", action="append")
    jp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    jp.set_defaults(func=cmd_jordan)

    for name, func, text in (("sum", cmd_sum, "grouped series norms"),
                             ("contour", cmd_contour, "contour cross-check"),
                             ("evolve", cmd_evolve, "Cauchy-problem trajectory and residuals"),
                             ("report", cmd_report, "full pipeline with persisted report")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--config", required=True)
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
