"""Variable-precision GMRES: Arnoldi with modified Gram-Schmidt, injected
inexactness in the inner products and matrix-vector products, and an
incremental Givens least-squares solve."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .config import ExperimentConfig
from .inexact import (BINARY64, LowPrecisionMatrix, higher_format, lowprec_dot,
                      make_rng, perturbed_dot, perturbed_matvec)
from .report import IterationRow, SolveReport
from .tolerance import PrecisionSelector, TableRange, ToleranceSchedule

BREAKDOWN_THRESHOLD = 1e-30

CONVERGED = "converged"
BREAKDOWN = "breakdown"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class PerturbationRecord:
    """What was actually injected, iteration by iteration.

    ``etas[j-1]`` holds ``eta_{1j}, ..., eta_{jj}`` followed by the
    normalization perturbation ``eta_{j+1,j}``.  ``matvec_columns[j-1]`` is
    the column ``E_j v_j`` added to ``A v_j``.  In multiprecision mode the
    ``*_errors`` lists hold ``(actual, modeled)`` error pairs.
    """

    etas: list = field(default_factory=list)
    normalization_fallback: list = field(default_factory=list)
    matvec_norms: list = field(default_factory=list)
    matvec_columns: list = field(default_factory=list)
    dot_errors: list = field(default_factory=list)
    matvec_errors: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)

    def N(self, k):
        """Upper-triangular ``k x k`` matrix of the MGS perturbations."""
        N = np.zeros((k, k))
        for j in range(1, k + 1):
            N[:j, j - 1] = self.etas[j - 1][:j]
        return N

    def E(self, k):
        return np.column_stack(self.matvec_columns[:k])


class KrylovState:
    def __init__(self, n, kmax, beta):
        self.V = np.zeros((n, kmax + 1))
        self.H = np.zeros((kmax + 1, kmax))
        self.qr = linalg.GivensQR(beta, capacity=kmax)
        self.beta = beta
        self.k = 0
        self.t_norms = [beta]
        self.record = PerturbationRecord()
        self.breakdown = False

    def basis(self, k=None):
        """``V_{k+1}`` (or ``V_k`` after a breakdown at step ``k``)."""
        k = self.k if k is None else k
        m = k if (self.breakdown and k == self.k) else k + 1
        return self.V[:, :m]

    def hessenberg(self, k=None):
        k = self.k if k is None else k
        return self.H[:k + 1, :k]


@dataclass
class SolveOutcome:
    x: np.ndarray
    status: str
    k: int
    report: SolveReport
    state: KrylovState
    info: dict = field(default_factory=dict)


def reconstruct_iterate(state, j):
    if not 1 <= j <= state.k:
        raise IndexError("iteration %d out of range 1..%d" % (j, state.k))
    y = state.qr.solution(j)
    return state.V[:, :j] @ y


def _build_schedule(cfg, A, b_norm, eps, a_norm, kmax, sigma_min_hk):
    scale = a_norm if cfg.relative_epsilon else 1.0
    table = tuple(TableRange(r.start, r.stop, r.value * scale) for r in cfg.table)
    sigma_a = linalg.sigma_min(A) if cfg.threshold == "conservative" else None
    return ToleranceSchedule(mode=cfg.threshold, eps=eps, b_norm=b_norm,
                             sigma_min_A=sigma_a, sigma_min_Hk=sigma_min_hk,
                             kmax=kmax, phi_dot=cfg.phi_dot,
                             phi_matvec=cfg.phi_matvec, table=table)


def gmres_solve(A, b, config=None, **overrides):
    """Run variable-precision GMRES on ``A x = b``.

    ``config`` is an :class:`ExperimentConfig` (its matrix source fields are
    ignored here); keyword arguments override individual fields.
    """
    cfg = config if config is not None else ExperimentConfig()
    if overrides:
        cfg = cfg.replace(**overrides)
    A = linalg.as_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("matrix must be square, got %dx%d" % A.shape)
    if b.shape != (n,):
        raise ValueError("right-hand side must have length %d" % n)
    beta = linalg.norm2(b)
    if not beta > 0.0:
        raise ValueError("right-hand side must be nonzero")
    kmax = cfg.kmax or n
    mode = cfg.mode

    needs_norm = cfg.relative_epsilon or mode == "multiprecision"
    a_norm = linalg.matrix_norm2(A) if needs_norm else None
    eps = cfg.epsilon * (a_norm if cfg.relative_epsilon else 1.0)
    stop_tol = cfg.stop_tolerance if cfg.stop_tolerance is not None else eps * beta

    schedule = None
    sigma_min_hk = cfg.sigma_min_hk
    if mode != "exact":
        if cfg.threshold == "theorem" and sigma_min_hk is None:
            ref = reference_exact_solve(A, b, kmax, stop_tolerance=stop_tol)
            sigma_min_hk = reference_sigma_min_hk(ref)
        schedule = _build_schedule(cfg, A, beta, eps, a_norm, kmax, sigma_min_hk)

    lowprec = selector = None
    if mode == "multiprecision":
        lowprec = LowPrecisionMatrix(A)
        selector = PrecisionSelector(A, a_norm, coarse=cfg.coarse_trigger,
                                     lowprec=lowprec)

    state = KrylovState(n, kmax, beta)
    V, H, rec = state.V, state.H, state.record
    V[:, 0] = b / beta
    gram = np.zeros((kmax + 1, kmax + 1)) if cfg.track_orthogonality else None
    if gram is not None:
        gram[0, 0] = V[:, 0] @ V[:, 0]
    report = SolveReport()
    status = MAX_ITERATIONS
    x = np.zeros(n)

    def run_lowprec(op, fmt, j, kind):
        value = op(fmt)
        while fmt is not BINARY64 and not np.all(np.isfinite(value)):
            nxt = higher_format(fmt)
            rec.fallbacks.append((j, kind, fmt.label, nxt.label))
            fmt = nxt
            value = op(fmt)
        return value, fmt

    for j in range(1, kmax + 1):
        t_prev = state.qr.residual_norm
        v = V[:, j - 1]
        if schedule is None:
            eta_j = eps_j = 0.0
        else:
            eta_j = schedule.eta(j, t_prev) if cfg.inexact_dots else 0.0
            eps_j = schedule.epsilon(j, t_prev) if cfg.inexact_matvecs else 0.0
        rng = make_rng(cfg.seed, j)
        dot_fmt = mv_fmt = BINARY64

        # matrix-vector product
        if mode == "perturbation":
            w, applied, Ev = perturbed_matvec(A, v, eps_j, rng,
                                              rank_one=cfg.rank_one_perturbation)
            rec.matvec_norms.append(applied)
            rec.matvec_columns.append(Ev)
        elif mode == "multiprecision" and eps_j > 0.0:
            decision = selector.select(eps_j, "matvec", v=v, j=j)
            w, mv_fmt = run_lowprec(lambda f: lowprec.matvec(v, f), decision.fmt,
                                    j, "matvec")
            exact = linalg.matvec(A, v)
            rec.matvec_errors.append((float(np.linalg.norm(w - exact)),
                                      selector.model(mv_fmt, "matvec", v=v)))
        else:
            w = linalg.matvec(A, v)
        w = np.array(w, dtype=np.float64)

        # modified Gram-Schmidt
        etas = np.zeros(j + 1)
        coarse_dot = None
        if mode == "multiprecision" and eta_j > 0.0 and cfg.coarse_trigger:
            coarse_dot = selector.select(eta_j, "dot", j=j).fmt
        lowest = BINARY64

        def inner(vi, wv):
            nonlocal lowest
            if mode == "perturbation":
                return perturbed_dot(vi, wv, eta_j, rng)
            if mode == "multiprecision" and eta_j > 0.0:
                fmt = coarse_dot or selector.select(eta_j, "dot", v=vi, w=wv, j=j).fmt
                h, used = run_lowprec(lambda f: lowprec_dot(vi, wv, f), fmt, j, "dot")
                exact = float(vi @ wv)
                rec.dot_errors.append((abs(h - exact),
                                       selector.model(used, "dot", v=vi, w=wv)))
                if used.precision < lowest.precision:
                    lowest = used
                return h, h - exact
            return float(np.dot(vi, wv)), 0.0

        for i in range(j):
            vi = V[:, i]
            h, etas[i] = inner(vi, w)
            H[i, j - 1] = h
            w -= h * vi

        # normalization scalar
        fallback = False
        if mode == "perturbation" and not cfg.perturb_normalization:
            s, etas[j] = float(w @ w), 0.0
        else:
            s, etas[j] = inner(w, w)
        if not s > 0.0:
            s, etas[j], fallback = float(w @ w), 0.0, True
        rec.etas.append(etas)
        rec.normalization_fallback.append(fallback)
        h_sub = math.sqrt(s) if s > 0.0 else 0.0
        dot_fmt = lowest

        if not (np.all(np.isfinite(w)) and math.isfinite(h_sub)
                and np.all(np.isfinite(H[:j, j - 1]))):
            status = NUMERICAL_FAILURE
            break

        breakdown = h_sub <= BREAKDOWN_THRESHOLD
        if breakdown:
            h_sub = 0.0
        H[j, j - 1] = h_sub
        if not breakdown:
            V[:, j] = w / h_sub
        state.qr.update(H[:j, j - 1], h_sub)
        state.k = j
        t_j = state.qr.residual_norm
        state.t_norms.append(t_j)
        state.breakdown = breakdown

        with np.errstate(divide="ignore", invalid="ignore"):
            x = reconstruct_iterate(state, j)
        if not np.all(np.isfinite(x)):
            status = NUMERICAL_FAILURE  # singular triangular factor
            break
        r = b - linalg.matvec(A, x)
        F_norm = float("nan")
        if gram is not None:
            m = j if breakdown else j + 1
            if not breakdown:
                col = V[:, :j + 1].T @ V[:, j]
                gram[:j + 1, j] = col
                gram[j, :j + 1] = col
            F = gram[:m, :m] - np.eye(m)
            F_norm = float(np.max(np.abs(np.linalg.eigvalsh(F))))
        report.rows.append(IterationRow(
            j=j, rel_resid_true=float(np.linalg.norm(r) / beta),
            rel_resid_recurred=float(t_j / beta), F_norm=F_norm,
            eta_j=float(eta_j), eps_j=float(eps_j),
            dot_fmt=dot_fmt.label, mv_fmt=mv_fmt.label))

        if t_j < stop_tol:
            status = CONVERGED
            break
        if breakdown:
            status = BREAKDOWN
            break

    report.status = status
    info = dict(beta=beta, epsilon=eps, stop_tolerance=stop_tol, a_norm=a_norm,
                kmax=kmax, sigma_min_hk=sigma_min_hk,
                sigma_min_A=schedule.sigma_min_A if schedule else None)
    return SolveOutcome(x=x, status=status, k=state.k, report=report,
                        state=state, info=info)


def reference_exact_solve(A, b, kmax, stop_tolerance=0.0, track_orthogonality=True):
    """The same driver with all inexactness disabled."""
    cfg = ExperimentConfig(mode="exact", kmax=kmax, stop_tolerance=stop_tolerance,
                           track_orthogonality=track_orthogonality)
    return gmres_solve(A, b, cfg)


def reference_sigma_min_hk(outcome):
    """``sigma_min(H_k)`` at the final step of a completed run."""
    return linalg.sigma_min(outcome.state.hessenberg())
