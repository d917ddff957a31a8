"""Command-line front end.

Subcommands::

    inexact-gmres solve --config run.toml [overrides]
    inexact-gmres experiment example1a [--matrix 494_bus.mtx]
    inexact-gmres verify stls --trials 1000
    inexact-gmres gen-matrix grcar 100 5 --out grcar.mtx

Exit codes: 0 success, 1 configuration or file error, 2 iteration limit
reached (or a verification check failed), 3 numerical failure.
"""
import argparse
import os
import sys

from . import experiments, runner, verify
from .config import ConfigError, ExperimentConfig, SOLVE_MODES, load_config
from .linalg import grcar
from .mmio import MatrixMarketError, write_matrix_market
from .tolerance import MODES as THRESHOLDS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(runner.EXIT_CONFIG, "%s: error: %s\n" % (self.prog, message))


def _add_run_flags(p, with_matrix=True):
    if with_matrix:
        p.add_argument("--matrix", help="Matrix Market file")
    p.add_argument("--epsilon", type=float, help="base tolerance")
    p.add_argument("--relative-epsilon", action="store_true", default=None,
                   help="scale epsilon by ||A||_2")
    p.add_argument("--mode", choices=SOLVE_MODES)
    p.add_argument("--threshold", choices=THRESHOLDS)
    p.add_argument("--seed", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--out", help="output directory (default $%s or .)" % runner.OUTPUT_ENV)
    p.add_argument("--no-reference", action="store_true",
                   help="skip the double-precision reference run")
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    parser = _Parser(prog="inexact-gmres",
                     description="GMRES with inexact inner products and matvecs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run a configuration file")
    p.add_argument("--config", help="TOML configuration")
    _add_run_flags(p)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=sorted(experiments.EXPERIMENTS))
    _add_run_flags(p)

    p = sub.add_parser("verify", help="run a verification sweep")
    p.add_argument("suite", choices=verify.SUITES)
    p.add_argument("--trials", type=int, help="trials per suite (default depends on suite)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("gen-matrix", help="write a generated matrix")
    p.add_argument("kind", choices=["grcar"])
    p.add_argument("params", type=int, nargs="+", metavar="N",
                   help="grcar: order n and number of superdiagonals")
    p.add_argument("--out", help="output file (default <kind>_<params>.mtx)")
    return parser


def _overrides(args):
    out = {}
    for key in ("epsilon", "mode", "threshold", "seed", "kmax"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if getattr(args, "relative_epsilon", None):
        out["relative_epsilon"] = True
    return out


def _report(label, art):
    rows = art.outcome.report.rows
    final = rows[-1].rel_resid_true if rows else float("nan")
    line = "%s: %s after %d iterations, true relative residual %.3e" % (
        label, art.outcome.status, art.outcome.k, final)
    if art.reference is not None and art.reference.report.rows:
        line += " (reference %.3e)" % art.reference.report.rows[-1].rel_resid_true
    print(line)
    for path in art.paths.values():
        print("  wrote %s" % path)


def cmd_solve(args):
    if args.config:
        cfg = load_config(args.config)
        stem = cfg.name or os.path.splitext(os.path.basename(args.config))[0]
    elif args.matrix:
        cfg = ExperimentConfig()
        stem = None
    else:
        raise ConfigError("give --config or --matrix")
    changes = _overrides(args)
    if args.matrix:
        changes.update(matrix=args.matrix, generator=None)
    if changes:
        cfg = cfg.replace(**changes)
    if stem is None:
        stem = cfg.name or os.path.splitext(os.path.basename(cfg.matrix))[0]
    out_dir = args.out or cfg.output or runner.default_output_dir()
    A, b = runner.load_problem(cfg)
    reference = cfg.reference and not args.no_reference
    art = runner.run_and_write(A, b, cfg, out_dir, stem, reference=reference,
                               workers=args.workers)
    _report(stem, art)
    return art.exit_code


def cmd_experiment(args):
    exp = experiments.get_experiment(args.name)
    runs = experiments.resolve_runs(exp, args.matrix, _overrides(args))
    out_dir = args.out or runner.default_output_dir()
    for variant, cfg in runs:
        A, b = runner.load_problem(cfg)
        stop = experiments.stop_tolerance_for(exp, A, b)
        if stop is not None:
            cfg = cfg.replace(stop_tolerance=stop)
        stem = exp.name if len(runs) == 1 else "%s-%s" % (exp.name, variant)
        art = runner.run_and_write(A, b, cfg, out_dir, stem,
                                   provenance=experiments.provenance(exp, cfg, variant),
                                   reference=not args.no_reference, workers=args.workers)
        _report(stem, art)
    return runner.EXIT_OK


def cmd_verify(args):
    if args.trials is not None and args.trials < 1:
        raise ConfigError("trials must be >= 1", "--trials")
    results = verify.run_suites(args.suite, args.trials, args.seed, args.workers)
    for res in results:
        print(res.summary())
    return runner.EXIT_OK if all(r.ok for r in results) else runner.EXIT_MAXITER


def cmd_gen_matrix(args):
    if len(args.params) != 2:
        raise ConfigError("grcar needs two parameters: n superdiags", "params")
    n, k = args.params
    try:
        A = grcar(n, k)
    except ValueError as exc:
        raise ConfigError(str(exc), "params") from None
    path = args.out or os.path.join(runner.default_output_dir(), "grcar_%d_%d.mtx" % (n, k))
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_matrix_market(A, path, comment="grcar n=%d superdiags=%d" % (n, k))
    print("wrote %s (%d nonzeros)" % (path, A.nnz))
    return runner.EXIT_OK


COMMANDS = {"solve": cmd_solve, "experiment": cmd_experiment,
            "verify": cmd_verify, "gen-matrix": cmd_gen_matrix}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MatrixMarketError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return runner.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
