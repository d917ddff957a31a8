"""Dense/sparse primitives shared by the solver and the diagnostics.

Matrices are either 2-D ``numpy`` arrays or ``scipy.sparse`` matrices; all
arithmetic here is ordinary binary64.
"""
import numpy as np
import scipy.sparse as sp


class ConvergenceError(RuntimeError):
    """Raised when an iterative estimate fails to converge.

    The best estimate obtained so far is kept in ``estimate``.
    """

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


def as_matrix(A):
    """Return ``A`` as a CSR matrix (if sparse) or a float64 ndarray."""
    if sp.issparse(A):
        return sp.csr_array(A, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("matrix must be two-dimensional, got ndim=%d" % A.ndim)
    return A


def to_dense(A):
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A, dtype=np.float64)


def matvec(A, v):
    v = np.asarray(v, dtype=np.float64)
    if A.shape[1] != v.shape[0]:
        raise ValueError("dimension mismatch: A is %dx%d, v has length %d"
                         % (A.shape[0], A.shape[1], v.shape[0]))
    return np.asarray(A @ v, dtype=np.float64)


def norm2(v):
    return float(np.linalg.norm(np.asarray(v, dtype=np.float64)))


def matrix_norm2(A, tol=1e-8, maxiter=5000):
    """Estimate ``sigma_max(A)`` by power iteration on ``A^T A``.

    Starts from the normalized all-ones vector, so the result is
    deterministic.  The estimates increase linearly towards ``sigma_max``;
    the remaining error is extrapolated from the ratio of successive
    increments, and iteration stops once it is below ``tol`` relative.
    Raises :class:`ConvergenceError` after ``maxiter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, n = A.shape
    if m == 0 or n == 0:
        raise ValueError("empty matrix")
    if not np.any(A.data if sp.issparse(A) else A):
        return 0.0
    AT = A.T
    x = np.full(n, 1.0 / np.sqrt(n))
    sigma = 0.0
    prev_step = None
    for _ in range(maxiter):
        y = AT @ (A @ x)
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            # x lies in the null space; restart from a fixed non-constant vector
            x = np.cos(np.arange(1, n + 1))
            x /= np.linalg.norm(x)
            continue
        new_sigma = float(np.sqrt(ynorm))
        x = y / ynorm
        step = abs(new_sigma - sigma)
        if step <= tol * new_sigma:
            # geometric tail step * rho / (1 - rho) of the remaining increments
            if step == 0.0:
                return new_sigma
            if prev_step:
                rho = step / prev_step
                if rho < 1.0 and step * rho / (1.0 - rho) <= tol * new_sigma:
                    return new_sigma
        prev_step = step if step > 0.0 else prev_step
        sigma = new_sigma
    raise ConvergenceError("power iteration did not converge in %d iterations"
                           % maxiter, sigma)


def sigma_min(A):
    """Smallest singular value via a dense SVD (0 if column-rank deficient)."""
    A = to_dense(A)
    m, n = A.shape
    if m < n:
        return 0.0
    try:
        s = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("SVD did not converge", float("nan")) from exc
    return float(s[-1])


class GivensQR:
    """Incremental QR factorization of an upper Hessenberg matrix.

    Solves ``min_y ||beta e_1 - H_k y||_2`` one column at a time.  After
    ``k`` updates ``R[:k, :k]`` is upper triangular and ``|g[k]|`` is the
    least-squares residual norm ``||t_k||_2``.
    """

    def __init__(self, beta, capacity=16):
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.beta = float(beta)
        self.k = 0
        self._R = np.zeros((capacity + 1, capacity))
        self._g = np.zeros(capacity + 1)
        self._g[0] = self.beta
        self.cosines = []
        self.sines = []

    def _grow(self):
        cap = self._R.shape[1] * 2
        R = np.zeros((cap + 1, cap))
        R[:self._R.shape[0], :self._R.shape[1]] = self._R
        g = np.zeros(cap + 1)
        g[:self._g.shape[0]] = self._g
        self._R, self._g = R, g

    @property
    def residual_norm(self):
        return abs(float(self._g[self.k]))

    @property
    def R(self):
        return self._R[:self.k, :self.k]

    @property
    def g(self):
        return self._g[:self.k + 1]

    def update(self, column, h_sub):
        """Append column ``k+1``: ``column`` holds ``h_{1..k+1, k+1}``."""
        if h_sub < 0:
            raise ValueError("subdiagonal entry must be non-negative, got %r" % h_sub)
        k = self.k
        column = np.asarray(column, dtype=np.float64)
        if column.shape != (k + 1,):
            raise ValueError("expected %d entries above the subdiagonal, got %d"
                             % (k + 1, column.shape[0]))
        if k + 1 > self._R.shape[1]:
            self._grow()
        r = column.copy()
        for i, (c, s) in enumerate(zip(self.cosines, self.sines)):
            r[i], r[i + 1] = c * r[i] + s * r[i + 1], -s * r[i] + c * r[i + 1]
        a, b = r[k], float(h_sub)
        d = np.hypot(a, b)
        if d == 0.0:
            c, s = 1.0, 0.0
        else:
            c, s = a / d, b / d
        r[k] = d
        self.cosines.append(c)
        self.sines.append(s)
        self._R[:k + 1, k] = r
        gk = self._g[k]
        self._g[k] = c * gk
        self._g[k + 1] = -s * gk
        self.k = k + 1
        return self.residual_norm

    def solution(self, j=None):
        """Back substitution for ``y_j`` (default: the current step)."""
        if j is None:
            j = self.k
        if not 0 <= j <= self.k:
            raise IndexError("step %d out of range 0..%d" % (j, self.k))
        R = self._R[:j, :j]
        y = self._g[:j].copy()
        for i in range(j - 1, -1, -1):
            y[i] = (y[i] - R[i, i + 1:j] @ y[i + 1:j]) / R[i, i]
        return y


def hessenberg_lsq_update(state, new_column, h_sub):
    """Push one Hessenberg column into ``state``; return ``(y_k, ||t_k||_2)``."""
    t_norm = state.update(new_column, h_sub)
    return state.solution(), t_norm


def grcar(n, superdiags=3):
    """Grcar matrix: -1 on the subdiagonal, 1 on the diagonal and on
    ``superdiags`` superdiagonals."""
    if n < 1 or superdiags < 0:
        raise ValueError("need n >= 1 and superdiags >= 0")
    offsets = [-1] + list(range(0, superdiags + 1))
    diags = []
    kept = []
    for off in offsets:
        length = n - abs(off)
        if length <= 0:
            continue
        diags.append(np.full(length, -1.0 if off == -1 else 1.0))
        kept.append(off)
    return sp.diags_array(diags, offsets=kept, shape=(n, n), format="csr")


def sine_rhs(A):
    n, m = A.shape
    if n != m:
        raise ValueError("matrix must be square")
    return matvec(A, np.sin(np.arange(1, n + 1, dtype=np.float64)))
