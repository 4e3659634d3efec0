"""Command-line surface: roots, scan, grid, check, simulate, single-lag.

Every command emits machine-readable JSON or CSV, with complex numbers as
re/im pairs and floats at full precision.  Outputs are deterministic: no
timestamps, branch records sorted by index, grid rows in axis order.

Exit codes: 0 success, 1 invalid input, 2 partial numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dynamics, lambert, model, oracle, series

_FMT = "{:.17g}"


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on bad input (code 2 means partial failure here)."""

    def error(self, message):
        self.exit(1, f"error: {message}\n")


def _fnum(x: float) -> float:
    return float(x)


def _cplx(z: complex) -> dict:
    return {"re": _fnum(z.real), "im": _fnum(z.imag)}


def _emit(args, payload, csv_text: str | None):
    if args.format == "json":
        text = json.dumps(payload, indent=2)
    else:
        if csv_text is None:
            raise _CliError("csv output is not supported for this command")
        text = csv_text
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


class _CliError(ValueError):
    pass


def _model_from_args(args) -> model.ModelParams:
    if getattr(args, "params_reduced", False):
        need = [args.alpha1, args.beta2, args.gamma2, args.tau]
        if any(v is None for v in need):
            raise _CliError("--params-reduced requires --alpha1 --beta2 --gamma2 --tau")
        return model.reduced_to_model(args.alpha1, args.beta2, args.gamma2, args.tau,
                                      tau1=args.tau1 if args.tau1 is not None else 1.0)
    need = [args.alpha, args.beta, args.gamma, args.tau1, args.tau2]
    if any(v is None for v in need):
        raise _CliError("need --alpha --beta --gamma --tau1 --tau2 (or --params-reduced)")
    if args.gamma == 0.0:
        raise _CliError("gamma == 0 is a single-lag problem; use the single-lag command")
    return model.ModelParams(args.alpha, args.beta, args.gamma, args.tau1, args.tau2)


def _add_model_opts(sp):
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--tau1", type=float)
    sp.add_argument("--tau2", type=float)
    sp.add_argument("--params-reduced", action="store_true",
                    help="specify the problem as (alpha1, beta2, gamma2, tau) instead")
    sp.add_argument("--alpha1", type=float)
    sp.add_argument("--beta2", type=float)
    sp.add_argument("--gamma2", type=float)
    sp.add_argument("--tau", type=float)


def _add_common_opts(sp):
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default=None)


def _thread_count() -> int:
    raw = os.environ.get("DDE_SPECTRA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    n = _thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _diag_dict(d) -> dict:
    return {"ratio": _fnum(d.ratio), "mu_abs": _fnum(d.mu_abs),
            "sigma_abs": _fnum(d.sigma_abs), "ok": d.ok}


# ---------------------------------------------------------------- roots

def _one_branch(p, j, trunc, refine):
    rec = {"j": j}
    try:
        root = series.root_series(p, j, trunc)
    except Exception as exc:
        rec["error"] = str(exc)
        return rec
    rec.update({
        "s_original": _cplx(root.s_original),
        "s_rescaled": _cplx(root.s_rescaled),
        "v": _cplx(root.v),
        "residual_series": _fnum(root.residual),
        "diagnostics": _diag_dict(root.diagnostics),
    })
    if refine:
        ref = oracle.newton_refine(p, root.s_original)
        rec.update({
            "s_original_refined": _cplx(ref.s_original),
            "s_rescaled_refined": _cplx(ref.s_rescaled),
            "residual_refined": _fnum(ref.residual),
            "iterations": ref.iterations,
            "converged": ref.converged,
        })
        if not ref.converged:
            rec["error"] = "newton refinement did not converge"
    return rec


def _roots_csv(records) -> str:
    cols = ["j", "s_re", "s_im", "s_rescaled_re", "s_rescaled_im", "v_re", "v_im",
            "residual_series", "s_refined_re", "s_refined_im", "residual_refined",
            "iterations", "converged", "ratio", "error"]
    lines = [",".join(cols)]
    for r in records:
        def g(path, default=""):
            cur = r
            for key in path:
                if not isinstance(cur, dict) or key not in cur:
                    return default
                cur = cur[key]
            return _FMT.format(cur) if isinstance(cur, float) else str(cur)
        lines.append(",".join([
            str(r["j"]), g(("s_original", "re")), g(("s_original", "im")),
            g(("s_rescaled", "re")), g(("s_rescaled", "im")),
            g(("v", "re")), g(("v", "im")), g(("residual_series",)),
            g(("s_original_refined", "re")), g(("s_original_refined", "im")),
            g(("residual_refined",)), g(("iterations",)), g(("converged",)),
            g(("diagnostics", "ratio")), '"' + r.get("error", "").replace('"', '""') + '"',
        ]))
    return "\n".join(lines)


def cmd_roots(args) -> int:
    p = _model_from_args(args)
    trunc = model.Truncation(args.mmax, args.kmax)
    js = list(range(args.jmin, args.jmax + 1))
    if not js:
        raise _CliError("empty branch range")
    records = _map_ordered(lambda j: _one_branch(p, j, trunc, args.refine), js)
    records.sort(key=lambda r: r["j"])
    failed = [r["j"] for r in records if "error" in r]
    payload = {"params": vars_model(p), "m_max": trunc.m_max, "k_max": trunc.k_max,
               "records": records, "failed_branches": failed}
    _emit(args, payload, _roots_csv(records))
    return 2 if failed else 0


def vars_model(p: model.ModelParams) -> dict:
    return {"alpha": _fnum(p.alpha), "beta": _fnum(p.beta), "gamma": _fnum(p.gamma),
            "tau1": _fnum(p.tau1), "tau2": _fnum(p.tau2)}


# ---------------------------------------------------------------- scan

def cmd_scan(args) -> int:
    if args.tau2_min is None or args.tau2_max is None:
        raise _CliError("need --tau2-min and --tau2-max")
    trunc = model.Truncation(args.mmax, args.kmax)
    report = dynamics.hopf_scan(args.r, args.a1, args.a2, args.tau1_scan,
                                (args.tau2_min, args.tau2_max), args.grid_n, trunc)
    pts = [{"tau2": _fnum(pt.tau2), "status": pt.status, "re_s0": _fnum(pt.re_s0),
            "im_s0": _fnum(pt.im_s0), "ratio": _fnum(pt.ratio)} for pt in report.points]
    payload = {
        "hypotheses": {"equal_gains": report.hypotheses.equal_gains,
                       "tau1_threshold": _fnum(report.hypotheses.tau1_threshold),
                       "satisfied": report.hypotheses.satisfied},
        "points": pts,
        "crossings": [_fnum(c) for c in report.crossings],
        "failures": report.failures,
    }
    lines = ["tau2,status,re_s0,im_s0,ratio"]
    for pt in report.points:
        lines.append(",".join([_FMT.format(pt.tau2), pt.status, _FMT.format(pt.re_s0),
                               _FMT.format(pt.im_s0), _FMT.format(pt.ratio)]))
    _emit(args, payload, "\n".join(lines))
    return 2 if report.failures else 0


# ---------------------------------------------------------------- grid

def cmd_grid(args) -> int:
    p = _model_from_args(args)
    spec = oracle.GridSpec(args.re_min, args.re_max, args.im_min, args.im_max,
                           args.n_re, args.n_im)
    vals = oracle.transfer_grid(p, spec)
    res = np.linspace(spec.re_min, spec.re_max, spec.n_re)
    ims = np.linspace(spec.im_min, spec.im_max, spec.n_im)
    payload = {"spec": {k: _fnum(getattr(spec, k)) for k in
                        ("re_min", "re_max", "im_min", "im_max")} |
                       {"n_re": spec.n_re, "n_im": spec.n_im},
               "values": [[_fnum(v) for v in row] for row in vals]}
    lines = ["im\\re," + ",".join(_FMT.format(r) for r in res)]
    for i, row in enumerate(vals):
        lines.append(_FMT.format(ims[i]) + "," + ",".join(_FMT.format(v) for v in row))
    _emit(args, payload, "\n".join(lines))
    return 0


# ---------------------------------------------------------------- check

def cmd_check(args) -> int:
    p = _model_from_args(args)
    r = model.reduce(p)
    d = model.assumption_diagnostics(r, args.j)
    b = model.branch_quantities(r, args.j)
    payload = {
        "params": vars_model(p),
        "reduced": {"alpha1": _fnum(r.alpha1), "beta1": _fnum(r.beta1),
                    "gamma1": _fnum(r.gamma1), "tau": _fnum(r.tau),
                    "beta2": _fnum(r.beta2), "gamma2": _fnum(r.gamma2)},
        "branch": {"j": args.j, "L": _cplx(b.L), "sigma": _cplx(b.sigma),
                   "c": _cplx(b.c), "mu": _cplx(b.mu)},
        "diagnostics": _diag_dict(d),
    }
    lines = ["field,value",
             f"ratio,{_FMT.format(d.ratio)}",
             f"mu_abs,{_FMT.format(d.mu_abs)}",
             f"sigma_abs,{_FMT.format(d.sigma_abs)}",
             f"ok,{d.ok}"]
    _emit(args, payload, "\n".join(lines))
    return 0


# ---------------------------------------------------------------- simulate

def _parse_history(text: str) -> dynamics.HistoryFn:
    if text.startswith("const:"):
        try:
            return dynamics.constant_history(float(text[6:]))
        except ValueError:
            raise _CliError(f"bad history constant in {text!r}")
    raise _CliError(f"unsupported history spec {text!r} (use const:<value>)")


def cmd_simulate(args) -> int:
    p = _model_from_args(args)
    phi = _parse_history(args.history)
    traj = dynamics.integrate_mos(p, phi, args.T, args.dt)
    payload = {"params": vars_model(p), "history": phi.tag,
               "dt": _fnum(traj.dt),
               "t": [_fnum(t) for t in traj.t], "x": [_fnum(x) for x in traj.x]}
    status = 0
    if args.fit:
        trunc = model.Truncation(args.mmax, args.kmax)
        roots, failed = [], []
        for j in range(args.jmin, args.jmax + 1):
            try:
                ref = oracle.newton_refine(p, series.root_series(p, j, trunc).s_original)
            except Exception as exc:
                failed.append({"j": j, "error": str(exc)})
                continue
            if ref.converged:
                roots.append(series.Root(j=j, s_rescaled=ref.s_rescaled,
                                         s_original=ref.s_original, v=None,
                                         residual=ref.residual))
            else:
                failed.append({"j": j, "error": "refinement diverged"})
        fit = dynamics.spectral_fit(p, phi, roots)
        recon = fit.reconstruct(traj.t)
        payload["fit"] = {
            "branches": list(fit.js),
            "eigenvalues": [_cplx(s) for s in fit.eigenvalues],
            "coefficients": [_cplx(c) for c in fit.coefficients],
            "window_residual": _fnum(fit.window_residual),
            "failed_branches": failed,
            "reconstruction": [_cplx(v) for v in recon],
        }
        status = 2 if failed else 0
    lines = ["t,x"]
    for t, x in zip(traj.t, traj.x):
        lines.append(f"{_FMT.format(t)},{_FMT.format(x)}")
    _emit(args, payload, "\n".join(lines))
    return status


# ---------------------------------------------------------------- single-lag

def cmd_single_lag(args) -> int:
    if args.beta == 0.0:
        raise _CliError("beta == 0 has no delay term")
    s = lambert.single_lag_root(args.alpha, args.beta, args.tau, args.j)
    import cmath
    residual = abs(s - args.alpha - args.beta * cmath.exp(-s * args.tau))
    payload = {"alpha": _fnum(args.alpha), "beta": _fnum(args.beta),
               "tau": _fnum(args.tau), "j": args.j,
               "s": _cplx(s), "residual": _fnum(residual)}
    csv_text = "j,s_re,s_im,residual\n" + ",".join(
        [str(args.j), _FMT.format(s.real), _FMT.format(s.imag), _FMT.format(residual)])
    _emit(args, payload, csv_text)
    return 0


# ---------------------------------------------------------------- parser

def _build_parser() -> _Parser:
    ap = _Parser(prog="dde-spectra",
                 description="Characteristic roots and stability analysis of two-lag linear DDEs")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("roots", help="branch roots of the characteristic equation")
    _add_model_opts(sp)
    sp.add_argument("--jmin", type=int, default=-10)
    sp.add_argument("--jmax", type=int, default=10)
    sp.add_argument("--mmax", type=int, default=8)
    sp.add_argument("--kmax", type=int, default=1000)
    sp.add_argument("--refine", action="store_true")
    _add_common_opts(sp)
    sp.set_defaults(fn=cmd_roots)

    sp = sub.add_parser("scan", help="Hopf-crossing scan of the blowfly linearization")
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--a1", type=float, default=1.0)
    sp.add_argument("--a2", type=float, default=1.0)
    sp.add_argument("--tau1", type=float, dest="tau1_scan", default=10.0)
    sp.add_argument("--tau2-min", type=float)
    sp.add_argument("--tau2-max", type=float)
    sp.add_argument("--grid-n", type=int, default=100)
    sp.add_argument("--mmax", type=int, default=8)
    sp.add_argument("--kmax", type=int, default=1000)
    _add_common_opts(sp)
    sp.set_defaults(fn=cmd_scan)

    sp = sub.add_parser("grid", help="transfer-function magnitude grid")
    _add_model_opts(sp)
    sp.add_argument("--re-min", type=float, required=True)
    sp.add_argument("--re-max", type=float, required=True)
    sp.add_argument("--im-min", type=float, required=True)
    sp.add_argument("--im-max", type=float, required=True)
    sp.add_argument("--n-re", type=int, default=400)
    sp.add_argument("--n-im", type=int, default=400)
    _add_common_opts(sp)
    sp.set_defaults(fn=cmd_grid)

    sp = sub.add_parser("check", help="assumption diagnostics for one branch")
    _add_model_opts(sp)
    sp.add_argument("--j", type=int, default=0)
    _add_common_opts(sp)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("simulate", help="method-of-steps integration (+ spectral fit)")
    _add_model_opts(sp)
    sp.add_argument("--history", default="const:1", help="history spec, e.g. const:1")
    sp.add_argument("--dt", type=float, required=True)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--fit", action="store_true", help="also fit/reconstruct from refined roots")
    sp.add_argument("--jmin", type=int, default=-10)
    sp.add_argument("--jmax", type=int, default=10)
    sp.add_argument("--mmax", type=int, default=8)
    sp.add_argument("--kmax", type=int, default=1000)
    _add_common_opts(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("single-lag", help="single-lag eigenvalue via Lambert W")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--j", type=int, default=0)
    _add_common_opts(sp)
    sp.set_defaults(fn=cmd_single_lag)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (_CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
