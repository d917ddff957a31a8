"""Experiment configuration files.

Configurations are TOML documents.  Example::

    matrix = "data/494_bus.mtx"   # or a [matrix] table, see below
    rhs = "sine"                  # "sine", "ones", or a vector file
    epsilon = 2.220446049250313e-16
    relative_epsilon = true       # multiply epsilon by ||A||_2
    threshold = "fixed-table"     # aggressive | conservative | theorem | fixed-table
    mode = "perturbation"         # perturbation | multiprecision | exact
    kmax = 100
    seed = 0

    [[table]]                     # fixed-table mode only
    start = 20
    stop = 30                     # inclusive
    value = 1e-8                  # scaled by ||A||_2 when relative_epsilon

A generated matrix is given as a table instead of a path::

    [matrix]
    generator = "grcar"
    n = 100
    superdiags = 5

See README.md for the full key list.
"""
import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import linalg
from .mmio import read_matrix_market
from .tolerance import MODES as THRESHOLDS, TableRange, validate_table

SOLVE_MODES = ("perturbation", "multiprecision", "exact")
GENERATORS = {"grcar": ("n", "superdiags")}


class ConfigError(ValueError):
    def __init__(self, message, key=None, source=None):
        where = []
        if source:
            where.append(str(source))
        if key:
            where.append("key %r" % key)
        if where:
            message = "%s: %s" % (", ".join(where), message)
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    matrix: str = None  # path to a Matrix Market file
    generator: dict = None  # e.g. {"name": "grcar", "n": 100, "superdiags": 5}
    rhs: str = "sine"
    epsilon: float = 2.0 ** -52
    relative_epsilon: bool = False
    threshold: str = "aggressive"
    mode: str = "perturbation"
    kmax: int = None  # defaults to n
    seed: int = 0
    stop_tolerance: float = None  # absolute; defaults to epsilon * ||b||_2
    output: str = None
    table: tuple = ()
    perturb_normalization: bool = True
    inexact_dots: bool = True
    inexact_matvecs: bool = True
    rank_one_perturbation: bool = False
    coarse_trigger: bool = True
    phi_dot: float = None
    phi_matvec: float = None
    sigma_min_hk: float = None  # theorem mode; filled by a reference run if absent
    track_orthogonality: bool = True
    reference: bool = True
    name: str = None
    notes: tuple = field(default=())

    def __post_init__(self):
        validate(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def validate(cfg, source=None):
    def fail(msg, key):
        raise ConfigError(msg, key, source)

    if not (isinstance(cfg.epsilon, (int, float)) and cfg.epsilon > 0):
        fail("epsilon must be a positive number", "epsilon")
    if cfg.kmax is not None and (not isinstance(cfg.kmax, int) or cfg.kmax < 1):
        fail("kmax must be an integer >= 1", "kmax")
    if cfg.threshold not in THRESHOLDS:
        fail("threshold must be one of %s" % ", ".join(THRESHOLDS), "threshold")
    if cfg.mode not in SOLVE_MODES:
        fail("mode must be one of %s" % ", ".join(SOLVE_MODES), "mode")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        fail("seed must be a 64-bit unsigned integer", "seed")
    if cfg.stop_tolerance is not None and not cfg.stop_tolerance >= 0:
        fail("stop_tolerance must be non-negative", "stop_tolerance")
    if cfg.matrix is not None and cfg.generator is not None:
        fail("give either a matrix path or a generator, not both", "matrix")
    if cfg.generator is not None:
        name = cfg.generator.get("name")
        if name not in GENERATORS:
            fail("unknown generator %r" % (name,), "matrix.generator")
    try:
        validate_table(cfg.table)
    except ValueError as exc:
        fail(str(exc), "table")
    for key in ("phi_dot", "phi_matvec", "sigma_min_hk"):
        value = getattr(cfg, key)
        if value is not None and not value > 0:
            fail("%s must be positive" % key, key)


_BOOL_KEYS = ("relative_epsilon", "perturb_normalization", "inexact_dots",
              "inexact_matvecs", "rank_one_perturbation", "coarse_trigger",
              "track_orthogonality", "reference")
_FLOAT_KEYS = ("epsilon", "stop_tolerance", "phi_dot", "phi_matvec", "sigma_min_hk")
_STR_KEYS = ("rhs", "threshold", "mode", "output", "name")
_INT_KEYS = ("kmax", "seed")


def config_from_dict(data, source=None, base_dir=None):
    """Build a validated config from parsed TOML (or an equivalent dict)."""
    kwargs = {}
    for key, value in data.items():
        if key == "matrix":
            if isinstance(value, str):
                kwargs["matrix"] = _resolve(value, base_dir)
            elif isinstance(value, dict):
                value = dict(value)
                if "path" in value:
                    path = value.pop("path")
                    if value:
                        raise ConfigError("unexpected keys %s next to path"
                                          % sorted(value), "matrix", source)
                    kwargs["matrix"] = _resolve(path, base_dir)
                else:
                    name = value.pop("generator", None)
                    allowed = GENERATORS.get(name)
                    if allowed is None:
                        raise ConfigError("unknown generator %r" % (name,),
                                          "matrix.generator", source)
                    for k, v in value.items():
                        if k not in allowed:
                            raise ConfigError("unknown key", "matrix.%s" % k, source)
                        if not isinstance(v, int) or isinstance(v, bool):
                            raise ConfigError("must be an integer", "matrix.%s" % k,
                                              source)
                    kwargs["generator"] = dict(name=name, **value)
            else:
                raise ConfigError("must be a path or a table", "matrix", source)
        elif key == "table":
            if not isinstance(value, list):
                raise ConfigError("must be an array of tables", "table", source)
            ranges = []
            for i, entry in enumerate(value):
                loc = "table[%d]" % i
                if not isinstance(entry, dict) or set(entry) != {"start", "stop", "value"}:
                    raise ConfigError("each range needs exactly start, stop, value",
                                      loc, source)
                try:
                    ranges.append(TableRange(int(entry["start"]), int(entry["stop"]),
                                             float(entry["value"])))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(str(exc), loc, source) from None
            kwargs["table"] = tuple(ranges)
        elif key in _BOOL_KEYS:
            if not isinstance(value, bool):
                raise ConfigError("must be true or false", key, source)
            kwargs[key] = value
        elif key in _FLOAT_KEYS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError("must be a number", key, source)
            kwargs[key] = float(value)
        elif key in _INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError("must be an integer", key, source)
            kwargs[key] = value
        elif key in _STR_KEYS:
            if not isinstance(value, str):
                raise ConfigError("must be a string", key, source)
            if key == "rhs" and value not in ("sine", "ones"):
                value = _resolve(value, base_dir)
            if key == "output":
                value = _resolve(value, base_dir)
            kwargs[key] = value
        else:
            raise ConfigError("unknown key", key, source)
    try:
        cfg = ExperimentConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), None, source) from None
    return cfg


def _resolve(path, base_dir):
    if base_dir is None or os.path.isabs(path):
        return path
    return os.path.join(base_dir, path)


def load_config(path):
    """Parse and validate a TOML configuration file.

    Relative paths inside the file are taken relative to the file itself.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("syntax error: %s" % exc, None, path) from None
    return config_from_dict(data, source=path,
                            base_dir=os.path.dirname(os.path.abspath(path)))


def load_matrix(cfg):
    if cfg.generator is not None:
        params = {k: v for k, v in cfg.generator.items() if k != "name"}
        return linalg.grcar(**params)
    if cfg.matrix is None:
        raise ConfigError("no matrix given", "matrix")
    return linalg.as_matrix(read_matrix_market(cfg.matrix))


def build_rhs(cfg, A):
    if cfg.rhs == "sine":
        return linalg.sine_rhs(A)
    if cfg.rhs == "ones":
        return np.ones(A.shape[0])
    if cfg.rhs.endswith(".mtx"):
        b = linalg.to_dense(read_matrix_market(cfg.rhs)).ravel()
    else:
        b = np.loadtxt(cfg.rhs, dtype=np.float64).ravel()
    if b.shape[0] != A.shape[0]:
        raise ConfigError("right-hand side has length %d, matrix has %d rows"
                          % (b.shape[0], A.shape[0]), "rhs")
    return b
