"""Command-line access to the solvers, models, sampler and figure data.

Every command is a thin wrapper over the library; numbers print with 17
significant digits and are byte-identical to what --json emits.  Exit codes:
0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from lapbayes import __version__
from lapbayes.corrmats import (
    concordance_to_correlation,
    correlation_to_concordance,
    fisher_z,
)
from lapbayes.errors import (
    AdaptationError,
    InitializationError,
    LapError,
)
from lapbayes.figures import FIGURES, figure_data
from lapbayes.models import model_from_json
from lapbayes.sampler import SamplerConfig, run_chains
from lapbayes.solvers import (
    TertileAnswer,
    dap_median_survival_quantile,
    dap_survival_prob,
    elicitation_count,
    ess_to_tertiles,
    estimate_ess_gamma,
    fit_student_t_hyperparams,
    lognormal_from_ig_median_survival,
    regression_ess_heuristic,
    solve_lomax_tertiles,
    coherency_intervals,
)

INPUT_ERRORS = (LapError, ValueError, KeyError, OSError, json.JSONDecodeError)
NUMERICAL_ERRORS = (InitializationError, AdaptationError, np.linalg.LinAlgError,
                    FloatingPointError)


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _emit(args, payload: dict):
    if args.json:
        print(json.dumps(payload, sort_keys=True,
                         default=lambda x: float(x)))
    else:
        for key, value in payload.items():
            if isinstance(value, (int, float, np.floating)):
                print(f"{key} = {_fmt(value)}")
            else:
                print(f"{key} = {value}")


def _add_common(p):
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lapbayes",
        description="Loss-adjusted posteriors: elicitation solvers, models, "
                    "sampler, figure data and the session service.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-lomax", help="Lomax parameters from tertiles")
    p.add_argument("--q13", type=float, required=True)
    p.add_argument("--q23", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("lomax-tertiles", help="tertiles implied by ESS + median")
    p.add_argument("--ess", type=str, required=True,
                   help="comma-separated ESS values, e.g. 1,10,25,100")
    p.add_argument("--median", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("dap-tau", help="survival exceedance probability")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--ytilde", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--grid", type=int, default=0,
                   help="emit tau over N gamma values instead of one")
    _add_common(p)

    p = sub.add_parser("dap-median", help="median-survival quantiles under the DAP")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--ytilde", type=float, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("moment-match-ln", help="lognormal matching the DAP median survival")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--ytilde", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("fit-t", help="NormalGamma hypers from predictive quantiles")
    p.add_argument("--q50", type=float, required=True)
    p.add_argument("--q75", type=float, required=True)
    p.add_argument("--ess", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("concord", help="concordance <-> correlation")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--r", type=float)
    _add_common(p)

    p = sub.add_parser("coherency", help="feasible intervals for elicited correlations")
    p.add_argument("--matrix", type=str, required=True,
                   help='JSON file {"matrix": [[...], ...], "pairs": [[i,j], ...]?}')
    _add_common(p)

    p = sub.add_parser("fit-ess-gamma", help="gamma fit to posterior quantile pairs")
    p.add_argument("--pairs", type=str, required=True,
                   help="CSV file with p,value rows or JSON [[p, value], ...]")
    _add_common(p)

    p = sub.add_parser("ess-heuristic", help="regression prior effective sample size")
    p.add_argument("--sd-post", type=float, required=True)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--sd-expert", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("elicitation-count", help="questions needed for dimension k")
    p.add_argument("--k", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("sample", help="run MCMC for a model+belief JSON document")
    p.add_argument("--model", type=str, required=True)
    p.add_argument("--data", type=str, default=None,
                   help="CSV path overriding the document's data entry")
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=2000)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("plot-data", help="emit CSV data reproducing a figure")
    p.add_argument("--figure", type=int, required=True, choices=FIGURES)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data-dir", type=str, default=None)
    p.add_argument("--workers", type=int, default=None)

    return parser


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def cmd_solve_lomax(args):
    alpha, beta = solve_lomax_tertiles(TertileAnswer(args.q13, args.q23))
    _emit(args, {"alpha": alpha, "beta": beta})


def cmd_lomax_tertiles(args):
    ess_values = [float(s) for s in args.ess.split(",") if s.strip()]
    rows = []
    for a in ess_values:
        t = ess_to_tertiles(a, args.median)
        rows.append({"ess": a, "q13": t.q13, "median": args.median, "q23": t.q23})
    if args.json:
        print(json.dumps({"rows": rows}, sort_keys=True))
    else:
        print("ess,q13,median,q23")
        for r in rows:
            print(",".join(_fmt(r[c]) for c in ("ess", "q13", "median", "q23")))


def cmd_dap_tau(args):
    if args.grid:
        gammas = np.linspace(0.01, 0.99, args.grid)
        rows = [{"gamma": float(g),
                 "tau": dap_survival_prob(args.alpha, args.ytilde, args.t, float(g))}
                for g in gammas]
        if args.json:
            print(json.dumps({"rows": rows}, sort_keys=True))
        else:
            print("gamma,tau")
            for r in rows:
                print(f"{_fmt(r['gamma'])},{_fmt(r['tau'])}")
        return
    tau = dap_survival_prob(args.alpha, args.ytilde, args.t, args.gamma)
    _emit(args, {"tau": tau})


def cmd_dap_median(args):
    if args.grid:
        probs = np.linspace(0.005, 0.995, args.grid)
        rows = [{"p": float(p),
                 "t_med": dap_median_survival_quantile(args.alpha, args.ytilde, float(p))}
                for p in probs]
        if args.json:
            print(json.dumps({"rows": rows}, sort_keys=True))
        else:
            print("p,t_med")
            for r in rows:
                print(f"{_fmt(r['p'])},{_fmt(r['t_med'])}")
        return
    _emit(args, {"t_med": dap_median_survival_quantile(args.alpha, args.ytilde, args.p)})


def cmd_moment_match_ln(args):
    mu, sigma = lognormal_from_ig_median_survival(args.alpha, args.ytilde)
    _emit(args, {"mu": mu, "sigma": sigma})


def cmd_fit_t(args):
    h = fit_student_t_hyperparams(args.q50, args.q75, args.ess)
    _emit(args, {"mu0": h.mu0, "gamma": h.gamma_ng,
                 "alpha": h.alpha_ng, "beta": h.beta_ng})


def cmd_concord(args):
    if args.p is not None:
        r = concordance_to_correlation(args.p)
        _emit(args, {"r": r, "fisher_z": fisher_z(r) if abs(r) < 1 else float("inf")})
    else:
        _emit(args, {"p": correlation_to_concordance(args.r),
                     "fisher_z": fisher_z(args.r)})


def cmd_coherency(args):
    with open(args.matrix) as fh:
        doc = json.load(fh)
    R = np.asarray(doc["matrix"], dtype=float)
    pairs = [tuple(int(v) for v in pq) for pq in doc.get("pairs", [])] or None
    reports = coherency_intervals(R, pairs)
    payload = {"reports": [r.to_json() for r in reports]}
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print("pair,elicited_r,lo,hi,in_interval,conc_lo,conc_hi")
        for r in reports:
            print(f"{r.pair[0]}-{r.pair[1]},{_fmt(r.elicited_r)},{_fmt(r.lo)},"
                  f"{_fmt(r.hi)},{int(r.in_interval)},{_fmt(r.concordance_lo)},"
                  f"{_fmt(r.concordance_hi)}")


def cmd_fit_ess_gamma(args):
    pairs = _read_pairs(args.pairs)
    shape, rate, residual = estimate_ess_gamma(pairs)
    _emit(args, {"shape": shape, "rate": rate, "residual": residual})


def _read_pairs(path):
    if path.endswith(".json"):
        with open(path) as fh:
            return [(float(p), float(v)) for p, v in json.load(fh)]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and row[0].strip()]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    return [(float(r[0]), float(r[1])) for r in rows]


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_ess_heuristic(args):
    _emit(args, {"n_expert": regression_ess_heuristic(args.sd_post, args.n, args.sd_expert)})


def cmd_elicitation_count(args):
    _emit(args, {"count": elicitation_count(args.k)})


def cmd_sample(args):
    with open(args.model) as fh:
        doc = json.load(fh)
    if args.data is not None:
        doc["data"] = args.data
    import os

    model, beliefs, _ = model_from_json(doc, base_dir=os.path.dirname(os.path.abspath(args.model)))
    target = model.build_target(beliefs)
    config = SamplerConfig(
        n_chains=args.chains, warmup=args.warmup, samples=args.samples,
        seed=args.seed, thin=args.thin, n_workers=args.workers,
    )
    batch = run_chains(target, config)
    batch.to_csv(args.out)
    batch.write_diagnostics_json(args.out + ".diagnostics.json")
    payload = {"out": args.out, "chains": batch.n_chains, "samples": batch.n_samples,
               "columns": ",".join(batch.all_names())}
    _emit(args, payload)


def cmd_plot_data(args):
    files = figure_data(args.figure, args.out, seed=args.seed)
    if args.json:
        print(json.dumps({"files": files}, sort_keys=True))
    else:
        for f in files:
            print(f)


def cmd_serve(args):
    from lapbayes.service import serve

    serve(port=args.port, data_dir=args.data_dir, n_workers=args.workers)


COMMANDS = {
    "solve-lomax": cmd_solve_lomax,
    "lomax-tertiles": cmd_lomax_tertiles,
    "dap-tau": cmd_dap_tau,
    "dap-median": cmd_dap_median,
    "moment-match-ln": cmd_moment_match_ln,
    "fit-t": cmd_fit_t,
    "concord": cmd_concord,
    "coherency": cmd_coherency,
    "fit-ess-gamma": cmd_fit_ess_gamma,
    "ess-heuristic": cmd_ess_heuristic,
    "elicitation-count": cmd_elicitation_count,
    "sample": cmd_sample,
    "plot-data": cmd_plot_data,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
