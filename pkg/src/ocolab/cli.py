"""Command line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 a declared assertion failed.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .errors import ConfigInvalid, NonpositiveReturn

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT = 0, 2, 3


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_run(args):
    from .harness import parse_config_text, run_experiment
    with open(args.config) as fh:
        raw = parse_config_text(fh.read())
    out = args.out or os.path.join("runs", raw.get("name", "run"))
    res = run_experiment(raw, out, write_figure=False if args.no_figure else None)
    for run, path in zip(res.runs, res.csv_paths):
        led = run.ledger
        print(f"seed {run.seed}: regret {led.regret:.6g} bound {led.bound_rhs[-1]:.6g} "
              f"comparator {led.method} -> {path}")
    for name, ok, detail in res.assertions:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"metadata -> {res.metadata_path}")
    if res.figure_path:
        print(f"figure -> {res.figure_path}")
    return EXIT_OK if res.passed else EXIT_ASSERT


def cmd_solve_game(args):
    from .games_lp import GameMatrix, simple_lp
    game = GameMatrix.read(args.matrix)
    cert = simple_lp(game, args.T, mode=args.mode)
    text = cert.to_csv(seed=None)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    ok = cert.chain_holds(1e-9) if args.mode == "best_response" else True
    if args.mode == "best_response":
        ok = ok and cert.gap <= cert.bound + 1e-9
    if not ok:
        print("FAIL certificate gap exceeds the approximation bound", file=sys.stderr)
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_portfolio(args):
    from .applications import portfolio_backtest, read_price_csv
    dates, names, r = read_price_csv(args.prices)
    rep = portfolio_backtest(r, args.learner, args.delta_floor)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"portfolio_{args.learner}.csv")
    header = ["round", "date"] + [f"x_{n}" for n in names] + \
        ["log_return", "log_wealth", "turnover", "regret"]
    rows = []
    for t in range(len(dates)):
        rows.append([t + 1, dates[t], *map(float, rep.decisions[t]), float(rep.round_log_return[t]),
                     float(rep.log_wealth[t]), float(rep.turnover[t]), float(rep.regret_trace[t])])
    _write_rows(path, header, rows)
    summary = {"learner": args.learner, "delta_floor": args.delta_floor, "T": len(dates),
               "final_log_wealth": float(rep.log_wealth[-1]), "regret": rep.regret,
               "bound": rep.bound, "G": rep.G, "D": rep.D, "best_crp": rep.crp.x.tolist(),
               "comparator_precision": rep.crp.gap, "total_turnover": float(rep.turnover.sum())}
    with open(os.path.join(args.out, f"portfolio_{args.learner}.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    if not args.no_figure:
        from .plotting import plot_series
        plot_series({"learner": rep.log_wealth, "best CRP": rep.log_wealth + rep.regret_trace},
                    os.path.join(args.out, f"portfolio_{args.learner}.png"),
                    title="cumulative log-wealth", ylabel="log wealth")
    print(f"log-wealth {rep.log_wealth[-1]:.6g}, regret {rep.regret:.6g} "
          f"(bound {rep.bound:.6g}), best CRP {np.round(rep.crp.x, 4).tolist()} -> {path}")
    if args.assert_bound and rep.regret > rep.bound:
        print("FAIL regret exceeds the bound", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_complete(args):
    from .applications import complete_matrix_offline, read_completion_file
    task = read_completion_file(args.file)
    res = complete_matrix_offline(task, args.T)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "completion_trace.csv")
    _write_rows(path, ["round", "objective", "fw_gap", "nuclear_norm"],
                [[t + 1, float(res.objective_trace[t]), float(res.gap_trace[t]),
                  float(res.nuclear_trace[t])] for t in range(args.T)])
    np.savetxt(os.path.join(args.out, "completion_matrix.txt"), res.x, fmt="%.10g")
    if not args.no_figure:
        from .plotting import plot_series
        plot_series({"objective": res.objective_trace},
                    os.path.join(args.out, "completion_trace.png"), title="conditional gradient",
                    ylabel="objective")
    print(f"final objective {res.objective_trace[-1]:.6g}, lower bound {res.lower_bound:.6g}, "
          f"mode {res.method} -> {path}")
    feasible = bool(np.all(res.nuclear_trace <= task.k + 1e-6))
    if not feasible:
        print("FAIL nuclear norm exceeded k", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_probe(args):
    from .harness import lower_bound_probe
    st = lower_bound_probe(args.n, args.T, args.trials, args.seed)
    print(f"mean {st.mean:.6g} +/- {st.stderr:.3g} (reference {st.reference:.6g}), "
          f"fitted c = {st.fitted_c:.4f}")
    if st.fitted_c <= 0.5:
        print("FAIL fitted constant not above 0.5", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ocolab", description="Online convex optimization experiments")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config (key=value file)")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--no-figure", action="store_true")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("solve-game", help="approximate a zero-sum game equilibrium")
    g.add_argument("matrix", help="file with 'n m' then n rows of m payoffs")
    g.add_argument("--T", type=int, default=1000)
    g.add_argument("--mode", choices=("best_response", "hedge"), default="best_response")
    g.add_argument("--out", default=None, help="write the certificate CSV here")
    g.set_defaults(func=cmd_solve_game)

    pf = sub.add_parser("portfolio", help="backtest OGD or ONS on a price-ratio CSV")
    pf.add_argument("prices")
    pf.add_argument("--learner", choices=("ogd", "ons"), default="ons")
    pf.add_argument("--delta-floor", type=float, default=1e-3)
    pf.add_argument("--out", default="portfolio_out")
    pf.add_argument("--assert-bound", action="store_true")
    pf.add_argument("--no-figure", action="store_true")
    pf.set_defaults(func=cmd_portfolio)

    c = sub.add_parser("complete", help="offline matrix completion by conditional gradient")
    c.add_argument("file", help="file with 'n m k' then 'i j value' lines")
    c.add_argument("--T", type=int, default=500)
    c.add_argument("--out", default="completion_out")
    c.add_argument("--no-figure", action="store_true")
    c.set_defaults(func=cmd_complete)

    lb = sub.add_parser("probe-lower-bound", help="Monte-Carlo hypercube lower-bound statistic")
    lb.add_argument("--n", type=int, default=1)
    lb.add_argument("--T", type=int, default=10000)
    lb.add_argument("--trials", type=int, default=10000)
    lb.add_argument("--seed", type=int, default=0)
    lb.set_defaults(func=cmd_probe)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, NonpositiveReturn, FileNotFoundError, IsADirectoryError) as exc:
        where = f" [{exc.field}]" if getattr(exc, "field", None) else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
