"""Run a configuration end to end and write its CSV artifacts.

For an output stem ``s`` the files are ``s.csv`` (inexact run),
``s.reference.csv`` (all inexactness disabled) and ``s.diagnostics.csv``.
"""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__, config as config_mod, diagnostics, linalg
from .report import write_diagnostics_csv, write_report_csv
from .solver import (BREAKDOWN, CONVERGED, MAX_ITERATIONS, NUMERICAL_FAILURE,
                     gmres_solve, reference_exact_solve)

OUTPUT_ENV = "INEXACT_GMRES_OUTPUT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAXITER = 2
EXIT_NUMERICAL = 3

STATUS_EXIT = {CONVERGED: EXIT_OK, MAX_ITERATIONS: EXIT_MAXITER,
               NUMERICAL_FAILURE: EXIT_NUMERICAL, BREAKDOWN: EXIT_NUMERICAL}


def default_output_dir():
    return os.environ.get(OUTPUT_ENV) or "."


@dataclass
class RunArtifacts:
    outcome: object
    reference: object
    paths: dict
    diagnostics: list

    @property
    def exit_code(self):
        return STATUS_EXIT[self.outcome.status]


def config_summary(cfg):
    """Provenance lines describing the parameters of a run."""
    if cfg.generator is None:
        source = os.path.basename(str(cfg.matrix))
    else:
        params = ", ".join("%s=%s" % (k, v) for k, v in cfg.generator.items()
                           if k != "name")
        source = "%s(%s)" % (cfg.generator["name"], params)
    table = "; ".join("%d-%d: %r" % (r.start, r.stop, r.value) for r in cfg.table)
    lines = ["inexact_gmres %s" % __version__,
             "matrix: %s" % source,
             "rhs: %s" % (cfg.rhs if cfg.rhs in ("sine", "ones") else os.path.basename(cfg.rhs)),
             "mode: %s, threshold: %s, seed: %d" % (cfg.mode, cfg.threshold, cfg.seed),
             "epsilon: %r%s" % (cfg.epsilon, " * ||A||_2" if cfg.relative_epsilon else "")]
    if table:
        lines.append("table: %s" % table)
    for note in cfg.notes:
        lines.append("note: %s" % note)
    return lines


def _solve_job(args):
    kind, A, b, cfg, kmax, stop = args
    if kind == "reference":
        return reference_exact_solve(A, b, kmax, stop_tolerance=stop,
                                     track_orthogonality=cfg.track_orthogonality)
    return gmres_solve(A, b, cfg)


def solve_pair(A, b, cfg, reference=True, workers=1):
    """Inexact run plus (optionally) the exact reference with the same stop rule."""
    kmax = cfg.kmax or A.shape[0]
    stop = cfg.stop_tolerance
    if reference and stop is None:
        eps = cfg.epsilon * (linalg.matrix_norm2(A) if cfg.relative_epsilon else 1.0)
        stop = eps * linalg.norm2(b)
        cfg = cfg.replace(stop_tolerance=stop)
    jobs = [("inexact", A, b, cfg, kmax, stop)]
    if reference:
        jobs.append(("reference", A, b, cfg, kmax, stop))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_solve_job, jobs))
    else:
        results = [_solve_job(j) for j in jobs]
    return results[0], (results[1] if reference else None)


def diagnostic_items(A, b, outcome, reference=None):
    rows = outcome.report.rows
    info = outcome.info
    items = [("status", outcome.status), ("iterations", outcome.k)]
    if rows:
        items += [("final_rel_resid_true", rows[-1].rel_resid_true),
                  ("final_rel_resid_recurred", rows[-1].rel_resid_recurred),
                  ("max_F_norm", max(outcome.report.column("F_norm")))]
    items += [("epsilon", info["epsilon"]), ("stop_tolerance", info["stop_tolerance"])]
    for key in ("a_norm", "sigma_min_A", "sigma_min_hk"):
        if info.get(key) is not None:
            items.append((key, info[key]))
    state = outcome.state
    usable = state.k - (1 if state.breakdown else 0)
    record = state.record
    if record.matvec_columns and usable >= 1:
        diag = diagnostics.OrthoDiagnostics.from_outcome(outcome)
        items.append(("nur_relative_defect", diagnostics.check_nur_identity(diag)))
        gap, bound = diagnostics.residual_gap(A, b, outcome)
        items += [("residual_gap", gap), ("residual_gap_bound", bound),
                  ("arnoldi_defect", diagnostics.arnoldi_defect(A, outcome))]
    if record.matvec_errors or record.dot_errors:
        for col, label in (("mv_fmt", "first_lowprec_matvec"),
                           ("dot_fmt", "first_lowprec_dot")):
            fmts = outcome.report.column(col)
            first = next((i + 1 for i, f in enumerate(fmts) if f != "binary64"), 0)
            items.append((label, first))
        items.append(("precision_fallbacks", len(record.fallbacks)))
    if reference is not None:
        items += [("reference_status", reference.status),
                  ("reference_iterations", reference.k)]
        if reference.report.rows:
            items.append(("reference_final_rel_resid_true",
                          reference.report.rows[-1].rel_resid_true))
    return items


def run_and_write(A, b, cfg, out_dir, stem, provenance=(), reference=True, workers=1):
    """Solve, then write the run, reference and diagnostics CSVs."""
    outcome, ref = solve_pair(A, b, cfg, reference=reference, workers=workers)
    os.makedirs(out_dir, exist_ok=True)
    header = list(provenance) + config_summary(cfg)
    paths = {"run": os.path.join(out_dir, stem + ".csv")}
    write_report_csv(outcome.report, paths["run"],
                     header + ["status: %s" % outcome.status])
    if ref is not None:
        paths["reference"] = os.path.join(out_dir, stem + ".reference.csv")
        write_report_csv(ref.report, paths["reference"],
                         header + ["double-precision reference", "status: %s" % ref.status])
    items = diagnostic_items(A, b, outcome, ref)
    paths["diagnostics"] = os.path.join(out_dir, stem + ".diagnostics.csv")
    write_diagnostics_csv(items, paths["diagnostics"])
    return RunArtifacts(outcome=outcome, reference=ref, paths=paths, diagnostics=items)


def load_problem(cfg):
    A = config_mod.load_matrix(cfg)
    b = config_mod.build_rhs(cfg, A)
    return A, b
