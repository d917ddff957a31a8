"""Loss-of-orthogonality and residual-gap diagnostics.

Everything here is recomputed densely from the run artifacts (basis,
Hessenberg matrix, recorded perturbations) and deliberately does not reuse
the solver's incremental quantities, so the two can be checked against
each other.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg

U64 = 2.0 ** -53
SQRT3 = math.sqrt(3.0)


class OrthogonalityError(ValueError):
    pass


def loss_of_orthogonality(V):
    """``||V^T V - I||_2`` from a dense SVD of the Gram deviation."""
    V = np.asarray(V, dtype=np.float64)
    F = V.T @ V - np.eye(V.shape[1])
    return float(np.linalg.svd(F, compute_uv=False)[0])


def hessenberg_residual_norms(H, beta):
    """``||t_j||_2`` for ``j = 0..k`` via one complete Householder QR of ``H_k``.

    The prefix problems share the leading columns of ``Q``, so
    ``||t_j||_2`` is the norm of the trailing part of ``Q^T beta e_1``.
    """
    kp1, k = H.shape
    Q, _ = np.linalg.qr(H, mode="complete")
    c = beta * Q[0, :]
    tail = np.sqrt(np.cumsum((c ** 2)[::-1])[::-1])
    return tail[:k + 1]


def lstsq_solution(H, beta):
    rhs = np.zeros(H.shape[0])
    rhs[0] = beta
    y = np.linalg.lstsq(H, rhs, rcond=None)[0]
    return y, rhs - H @ y


@dataclass
class OrthoDiagnostics:
    F: np.ndarray
    F_norm: float
    U: np.ndarray
    N: np.ndarray
    R: np.ndarray
    normalization_etas: np.ndarray

    @classmethod
    def from_outcome(cls, outcome, k=None):
        state = outcome.state
        k = state.k if k is None else k
        if state.breakdown and k == state.k:
            k -= 1  # no v_{k+1} after a breakdown
        if k < 1:
            raise ValueError("need at least one completed Arnoldi step")
        V = state.V[:, :k + 1]
        G = V.T @ V
        F = G - np.eye(k + 1)
        U = np.triu(G[:k, 1:k + 1])
        R = state.H[1:k + 1, :k]
        N = state.record.N(k) if state.record.etas else np.zeros((k, k))
        norm_etas = np.array([e[j] for j, e in enumerate(state.record.etas[:k], 1)])
        return cls(F=F, F_norm=loss_of_orthogonality(V), U=U, N=N, R=R,
                   normalization_etas=norm_etas)


def check_nur_identity(diag):
    """Relative defect of ``N_k = -U_k R_k``."""
    N, U, R = diag.N, diag.U, diag.R
    if N.shape != U.shape or U.shape[1] != R.shape[0] or R.shape[0] != R.shape[1]:
        raise ValueError("dimension mismatch: N %s, U %s, R %s"
                         % (N.shape, U.shape, R.shape))
    UR = U @ R
    scale = max(np.linalg.norm(N), np.linalg.norm(UR), U64)
    return float(np.linalg.norm(N + UR) / scale)


@dataclass
class InnerProductMatrixW:
    M: np.ndarray
    delta: float
    kappa: float
    eigenvalues: np.ndarray
    orthonormality_defect: float  # ||V^T (I + M) V - I||_2

    @property
    def kappa_bound(self):
        return (1.0 + self.delta) / (1.0 - self.delta)


def construct_w_inner_product(V):
    """Symmetric ``M`` with ``V^T (I + M) V = I``.

    ``M = V (V^T V)^{-1} (I - V^T V) (V^T V)^{-1} V^T``.  Requires
    ``delta = ||V^T V - I||_2 < 1``.
    """
    Q = np.asarray(V, dtype=np.float64)
    n, k = Q.shape
    G = Q.T @ Q
    delta = float(np.linalg.svd(G - np.eye(k), compute_uv=False)[0])
    if not delta < 1.0:
        raise OrthogonalityError("orthogonality too degraded: ||V^T V - I||_2 = %g"
                                 % delta)
    P = np.linalg.solve(G, Q.T)  # (V^T V)^{-1} V^T
    M = P.T @ (np.eye(k) - G) @ P
    M = 0.5 * (M + M.T)
    W = np.eye(n) + M
    lam = np.linalg.eigvalsh(W)
    defect = float(np.linalg.norm(Q.T @ W @ Q - np.eye(k), 2))
    return InnerProductMatrixW(M=M, delta=delta, kappa=float(lam[-1] / lam[0]),
                               eigenvalues=lam, orthonormality_defect=defect)


def residual_gap(A, b, outcome, j=None):
    """Measured residual gap at step ``j`` and its a-priori bound.

    ``gap = ||(b - A x_j) - V_{j+1} t_j||_2`` with ``x_j = V_j y_j`` and
    ``y_j, t_j`` from a dense least-squares solve;
    ``bound = sum_i eps_i ||t_{i-1}||_2 / sigma_min(H_j)``.
    """
    state = outcome.state
    j = state.k if j is None else j
    if not 1 <= j <= state.k:
        raise IndexError("step %d out of range 1..%d" % (j, state.k))
    A = linalg.as_matrix(A)
    Hj = state.H[:j + 1, :j]
    beta = linalg.norm2(b)
    y, t = lstsq_solution(Hj, beta)
    x = state.V[:, :j] @ y
    r = b - A @ x
    gap = float(np.linalg.norm(r - state.V[:, :j + 1] @ t))
    eps = np.asarray(state.record.matvec_norms[:j], dtype=np.float64)
    if eps.size == 0 or not np.any(eps):
        return gap, 0.0
    tn = hessenberg_residual_norms(Hj, beta)
    smin = linalg.sigma_min(Hj)
    bound = float(np.sum(eps * tn[:j]) / smin) if smin > 0 else math.inf
    return gap, bound


@dataclass
class StlsReport:
    condition_holds: bool
    ejyk_slack: float  # min over j of bound - |e_j^T y_k|, relative
    lower: float
    sigma: float
    upper: float

    @property
    def lower_slack(self):
        return (self.sigma - self.lower) / self.sigma

    @property
    def upper_slack(self):
        return (self.upper - self.sigma) / self.upper

    @property
    def holds(self):
        return (self.condition_holds and self.ejyk_slack >= 0.0
                and self.lower_slack >= 0.0 and self.upper_slack >= 0.0)


def stls_d_bound(H, beta, eps):
    """Largest ``||D_k||_2`` allowed by the scaling condition."""
    tn = hessenberg_residual_norms(H, beta)
    return linalg.sigma_min(H) * eps * beta / (math.sqrt(2.0) * tn[-1])


def check_stls_lemma(H, beta, D, eps):
    """Check the coefficient bound and the two-sided STLS sandwich on ``H``
    (with ``||b||_2 = beta``)."""
    H = np.asarray(H, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 1:
        D = np.diag(D)
    k = H.shape[1]
    d = np.diag(D)
    if np.any(d == 0.0):
        raise np.linalg.LinAlgError("D is singular")
    smin = linalg.sigma_min(H)
    tn = hessenberg_residual_norms(H, beta)
    t_k = tn[-1]
    condition = np.linalg.norm(D, 2) <= smin * eps * beta / (math.sqrt(2.0) * t_k)
    y, _ = lstsq_solution(H, beta)
    bounds = tn[:k] / smin
    ejyk = float(np.min((bounds - np.abs(y)) / bounds))
    C = np.column_stack([np.eye(k + 1)[:, 0] / eps, H / d[np.newaxis, :]])
    sigma = linalg.sigma_min(C)
    lower = t_k / math.sqrt(eps ** 2 * beta ** 2 + 2.0 * np.linalg.norm(d * y) ** 2)
    upper = t_k / (eps * beta)
    return StlsReport(condition_holds=bool(condition), ejyk_slack=ejyk,
                      lower=float(lower), sigma=float(sigma), upper=float(upper))


@dataclass
class TheoremReport:
    eps: float
    slack: float
    rows: list = field(default_factory=list)  # (k, ratio, rel_recurred, ok)

    @property
    def holds(self):
        return all(r[3] for r in self.rows)

    @property
    def violations(self):
        return [r for r in self.rows if not r[3]]


def check_theorem_conclusion(run, reference_run, eps, kmax=None, slack=0.1):
    """At every step ``k``: the residual ratio to exact GMRES is at most
    ``sqrt(3) (1 + slack)``, or the recurred relative residual is at most
    ``6 k eps``."""
    rows = run.report.rows
    ref = {r.j: r for r in reference_run.report.rows}
    report = TheoremReport(eps=eps, slack=slack)
    for row in rows:
        if kmax is not None and row.j > kmax:
            break
        rel_t = row.rel_resid_recurred
        converged = rel_t <= 6.0 * row.j * eps
        r_ref = ref.get(row.j)
        if r_ref is None or r_ref.rel_resid_true == 0.0:
            ratio = math.inf
        else:
            ratio = row.rel_resid_true / r_ref.rel_resid_true
        ok = ratio <= SQRT3 * (1.0 + slack) or converged
        report.rows.append((row.j, ratio, rel_t, ok))
    return report


def arnoldi_defect(A, outcome, k=None):
    """``||A V_k + E_k - V_{k+1} H_k||_F / ||A||_2`` with ``E_k`` rebuilt from
    the recorded matvec perturbations (zero when none were injected)."""
    state = outcome.state
    k = state.k if k is None else k
    A = linalg.as_matrix(A)
    Vk = state.V[:, :k]
    AV = np.asarray(A @ Vk)
    if state.record.matvec_columns:
        AV = AV + state.record.E(k)
    D = AV - state.V[:, :k + 1] @ state.H[:k + 1, :k]
    return float(np.linalg.norm(D) / linalg.matrix_norm2(A))


# ---------------------------------------------------------------------------
# random instance generators used by the verification sweeps


def random_hessenberg(rng, k):
    """Random ``(k+1) x k`` upper Hessenberg matrix with positive subdiagonal."""
    H = np.triu(rng.standard_normal((k + 1, k)), -1)
    idx = np.arange(k)
    H[idx + 1, idx] = np.abs(H[idx + 1, idx]) + 0.1
    return H


def random_basis_with_loss(rng, n, k, delta):
    """``n x k`` matrix ``Q`` with ``||Q^T Q - I||_2 = delta`` exactly attained
    by the smallest singular value; the others are drawn inside the band."""
    U, _ = np.linalg.qr(rng.standard_normal((n, k)))
    W, _ = np.linalg.qr(rng.standard_normal((k, k)))
    s2 = rng.uniform(1.0 - delta, 1.0 + delta, size=k)
    s2[0] = 1.0 - delta
    return (U * np.sqrt(s2)) @ W.T
