"""Per-iteration inexactness tolerances and precision selection."""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .inexact import (BINARY64, FORMATS, FormatOverflowError, LowPrecisionMatrix,
                      dot_magnitude_estimate)

MODES = ("aggressive", "conservative", "theorem", "fixed-table")


def _check_t_prev(t_prev):
    if not t_prev > 0.0:
        raise ValueError("previous residual norm must be positive (got %r); "
                         "the solve should already have stopped" % (t_prev,))


def eta_aggressive(eps, b_norm, t_prev):
    _check_t_prev(t_prev)
    return eps * b_norm / t_prev


def eta_conservative(eps, sigma_min_A, b_norm, t_prev):
    _check_t_prev(t_prev)
    if not sigma_min_A > 0.0:
        raise ValueError("sigma_min(A) must be positive")
    return eps * sigma_min_A * b_norm / t_prev


def eta_theorem(eps, phi_j, sigma_min_Hk, b_norm, t_prev):
    _check_t_prev(t_prev)
    if phi_j <= 0.0:
        raise ValueError("phi_j must be positive")
    return phi_j * eps * sigma_min_Hk * b_norm / (math.sqrt(2.0) * t_prev)


def epsilon_theorem(eps, phi_j, sigma_min_Hk, b_norm, t_prev):
    """Matvec tolerance giving a residual gap of at most ``eps/2 * ||b||``
    when the ``phi_j`` sum to at most one."""
    _check_t_prev(t_prev)
    if phi_j <= 0.0:
        raise ValueError("phi_j must be positive")
    return phi_j * eps * sigma_min_Hk * b_norm / (2.0 * t_prev)


@dataclass(frozen=True)
class TableRange:
    start: int
    stop: int  # inclusive
    value: float


def validate_table(table):
    ranges = sorted(table, key=lambda r: r.start)
    for r in ranges:
        if r.start < 1 or r.stop < r.start:
            raise ValueError("invalid iteration range %d..%d" % (r.start, r.stop))
        if not r.value > 0.0:
            raise ValueError("tolerance for range %d..%d must be positive"
                             % (r.start, r.stop))
    for a, b in zip(ranges, ranges[1:]):
        if b.start <= a.stop:
            raise ValueError("overlapping ranges %d..%d and %d..%d"
                             % (a.start, a.stop, b.start, b.stop))
    return tuple(ranges)


@dataclass
class ToleranceSchedule:
    """Rule producing the inner-product tolerance ``eta_j`` and the matvec
    tolerance ``eps_j`` at each iteration.

    ``eps`` is absolute (any ``||A||_2`` scaling already applied).  In
    ``fixed-table`` mode iterations outside every range use ``eps``.
    In ``theorem`` mode ``phi_dot`` defaults to ``kmax**-0.5`` (squares sum
    to one) and ``phi_matvec`` to ``1/kmax`` (values sum to one).
    """

    mode: str
    eps: float
    b_norm: float
    sigma_min_A: float = None
    sigma_min_Hk: float = None
    kmax: int = None
    phi_dot: float = None
    phi_matvec: float = None
    table: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError("unknown threshold mode %r" % (self.mode,))
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if self.mode == "conservative" and not (self.sigma_min_A or 0) > 0:
            raise ValueError("conservative mode needs sigma_min(A) > 0")
        if self.mode == "theorem":
            if not (self.sigma_min_Hk or 0) > 0:
                raise ValueError("theorem mode needs sigma_min(H_k) > 0")
            if self.phi_dot is None or self.phi_matvec is None:
                if not self.kmax:
                    raise ValueError("theorem mode needs kmax or explicit phi")
            if self.phi_dot is None:
                self.phi_dot = self.kmax ** -0.5
            if self.phi_matvec is None:
                self.phi_matvec = 1.0 / self.kmax
            if self.kmax and self.kmax * self.phi_dot ** 2 > 1.0 + 1e-12:
                raise ValueError("sum of phi_j**2 exceeds one")
        self.table = validate_table(self.table)

    def _table_value(self, j):
        for r in self.table:
            if r.start <= j <= r.stop:
                return r.value
        return self.eps

    def eta(self, j, t_prev):
        if self.mode == "aggressive":
            return eta_aggressive(self.eps, self.b_norm, t_prev)
        if self.mode == "conservative":
            return eta_conservative(self.eps, self.sigma_min_A, self.b_norm, t_prev)
        if self.mode == "theorem":
            return eta_theorem(self.eps, self.phi_dot, self.sigma_min_Hk,
                               self.b_norm, t_prev)
        return self._table_value(j)

    def epsilon(self, j, t_prev):
        if self.mode == "theorem":
            return epsilon_theorem(self.eps, self.phi_matvec, self.sigma_min_Hk,
                                   self.b_norm, t_prev)
        return self.eta(j, t_prev)


def epsilon_matvec(schedule, j, t_prev):
    return schedule.epsilon(j, t_prev)


def is_vacuous(tolerance, a_norm, u=BINARY64.u):
    """True when ``tolerance < u ||A||_2``: no inexactness is possible."""
    return tolerance < u * a_norm


@dataclass
class PrecisionDecision:
    j: int
    kind: str  # "dot" or "matvec"
    fmt: object
    tolerance: float
    modeled_errors: dict = field(default_factory=dict)
    vacuous: bool = False


class PrecisionSelector:
    """Chooses the cheapest format whose modeled error meets a tolerance.

    With ``coarse=True`` a format ``f`` is admissible once the tolerance
    reaches ``u(f) ||A||_2``, for both operation kinds.  Otherwise the error
    models are

    * dot:    ``n u(f) M`` with ``M = dot_magnitude_estimate(v, w)``;
    * matvec: ``||A - fl(A)||_2 ||v||_2 + sqrt(n) (r + 1) u(f) ||A||_inf ||v||_inf``
      where ``r`` is the longest row.
    """

    def __init__(self, A, a_norm, coarse=True, lowprec=None):
        self.lowprec = lowprec if lowprec is not None else LowPrecisionMatrix(A)
        self.n = A.shape[0]
        self.a_norm = float(a_norm)
        self.coarse = coarse
        absA = abs(A) if sp.issparse(A) else np.abs(A)
        self.a_inf = float(np.max(np.asarray(absA.sum(axis=1)).ravel()))
        self.row_length = self.lowprec.row_length

    def _matrix_error(self, fmt):
        try:
            return self.lowprec.rounding_error(fmt)
        except FormatOverflowError:
            return math.inf

    def model(self, fmt, kind, v=None, w=None):
        if fmt.precision >= 53:
            return 0.0
        if self.coarse:
            return fmt.u * self.a_norm
        if kind == "dot":
            return self.n * fmt.u * dot_magnitude_estimate(v, w)
        vnorm = float(np.linalg.norm(v))
        vinf = float(np.max(np.abs(v)))
        return (self._matrix_error(fmt) * vnorm
                + math.sqrt(self.n) * (self.row_length + 1) * fmt.u * self.a_inf * vinf)

    def select(self, tolerance, kind, v=None, w=None, j=0):
        if not tolerance > 0.0:
            raise ValueError("tolerance must be positive")
        if kind not in ("dot", "matvec"):
            raise ValueError("unknown operation kind %r" % (kind,))
        errors = {}
        chosen = BINARY64
        for fmt in FORMATS:
            err = self.model(fmt, kind, v, w)
            errors[fmt.label] = err
            if err <= tolerance:
                chosen = fmt
                break
        return PrecisionDecision(j=j, kind=kind, fmt=chosen, tolerance=tolerance,
                                 modeled_errors=errors,
                                 vacuous=is_vacuous(tolerance, self.a_norm))


def select_precision(tolerance, kind, selector, v=None, w=None, j=0):
    return selector.select(tolerance, kind, v=v, w=w, j=j)
