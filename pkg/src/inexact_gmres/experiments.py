"""Named experiments with their parameters fixed in code.

Each experiment expands to one or more runs (a variant label plus an
:class:`ExperimentConfig`).  Deviations from the original setup are listed
in :data:`DEVIATIONS` and copied into the CSV provenance header.
"""
import os
from dataclasses import dataclass

from . import linalg
from .config import ConfigError, ExperimentConfig
from .tolerance import TableRange

U52 = 2.0 ** -52
BUS_ENV = "INEXACT_GMRES_494_BUS"

GRCAR = {"name": "grcar", "n": 100, "superdiags": 5}

DEVIATIONS = {
    "grcar": ("Grcar matrix of order 5 read as 5 superdiagonals (684 nonzeros for n=100)",),
    "494_bus": ("rhs is A*sin(1..n) with n=494 rather than a length-100 vector",),
    "multiprec": (
        "runs continue past epsilon*||b|| down to 2^-52*||A||_2*||b|| so curves extend"
        " as in the double-precision reference",
        "format choice uses the coarse trigger u*||A||_2 <= tolerance",
        "precision emulated by IEEE round-to-nearest-even in numpy,"
        " not native low-precision hardware",
    ),
}


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    needs_bus: bool
    runs: tuple  # ((variant, ExperimentConfig), ...)
    deviations: tuple
    stop_scale: float = None  # stop at stop_scale * ||A||_2 * ||b||_2 when set


def _example1(name, threshold, table):
    cfg = ExperimentConfig(generator=dict(GRCAR), rhs="sine", epsilon=U52,
                           relative_epsilon=True, threshold=threshold,
                           mode="perturbation", kmax=100, table=table, name=name)
    return cfg


def _bus_config(name, **kw):
    return ExperimentConfig(matrix=None, rhs="sine", relative_epsilon=True,
                            name=name, **kw)


def _build():
    ex = {}
    table = (TableRange(20, 30, 1e-8), TableRange(40, 50, 1e-4))
    ex["example1a"] = Experiment(
        "example1a", "Grcar(100,5), fixed inexactness table, eta_j = eps_j",
        False, (("inexact", _example1("example1a", "fixed-table", table)),),
        DEVIATIONS["grcar"])
    ex["example1b"] = Experiment(
        "example1b", "Grcar(100,5), aggressive threshold, eps = 2^-52 ||A||_2",
        False, (("inexact", _example1("example1b", "aggressive", ())),),
        DEVIATIONS["grcar"])
    for name, threshold in (("example2a", "aggressive"), ("example2b", "conservative")):
        ex[name] = Experiment(
            name, "494_bus, %s threshold, eps = 2^-52 ||A||_2" % threshold, True,
            (("inexact", _bus_config(name, epsilon=U52, threshold=threshold,
                                     mode="perturbation")),),
            DEVIATIONS["494_bus"])
    for tag, eps in (("eps6", 1e-6), ("eps12", 1e-12)):
        name = "multiprec-494-%s" % tag
        runs = tuple((th, _bus_config("%s-%s" % (name, th), epsilon=eps, threshold=th,
                                      mode="multiprecision"))
                     for th in ("conservative", "aggressive"))
        ex[name] = Experiment(
            name, "494_bus in emulated binary16/32/64, eps = %g ||A||_2" % eps, True,
            runs, DEVIATIONS["494_bus"] + DEVIATIONS["multiprec"], stop_scale=U52)
    return ex


EXPERIMENTS = _build()


def get_experiment(name):
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise ConfigError("unknown experiment %r (choose from %s)"
                          % (name, ", ".join(EXPERIMENTS))) from None


def find_bus_matrix(path=None):
    """Locate 494_bus.mtx: explicit path, then the environment variable."""
    candidate = path or os.environ.get(BUS_ENV)
    if not candidate:
        raise ConfigError("494_bus.mtx is required; pass --matrix or set %s" % BUS_ENV,
                          "matrix")
    if not os.path.isfile(candidate):
        raise ConfigError("no such file: %s" % candidate, "matrix")
    return candidate


def resolve_runs(experiment, matrix_path=None, overrides=None):
    """Concrete ``(variant, config)`` pairs with the matrix source filled in."""
    overrides = dict(overrides or {})
    runs = []
    for variant, cfg in experiment.runs:
        if experiment.needs_bus:
            cfg = cfg.replace(matrix=find_bus_matrix(matrix_path))
        runs.append((variant, cfg.replace(**overrides) if overrides else cfg))
    return runs


def stop_tolerance_for(experiment, A, b):
    """Absolute stopping tolerance for experiments that fix one, else None."""
    if experiment.stop_scale is None:
        return None
    return experiment.stop_scale * linalg.matrix_norm2(A) * linalg.norm2(b)


def provenance(experiment, cfg, variant):
    lines = ["experiment: %s (%s)" % (experiment.name, variant),
             experiment.description]
    lines += ["deviation: %s" % d for d in experiment.deviations]
    return lines
