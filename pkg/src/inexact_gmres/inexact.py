"""Controllably inexact inner products and matrix-vector products.

Two kinds of inexactness are supported:

* bounded random perturbations added to exact binary64 results, and
* emulated low-precision arithmetic (binary16/binary32), rounding to the
  target format after every scalar operation.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import ConvergenceError, matrix_norm2


@dataclass(frozen=True)
class PrecisionFormat:
    label: str
    exponent_bits: int
    precision: int  # significand bits, implicit bit included

    @property
    def u(self):
        """Unit roundoff ``2**-precision``."""
        return math.ldexp(1.0, -self.precision)

    @property
    def emax(self):
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def emin(self):
        return 1 - self.emax

    @property
    def max_finite(self):
        return math.ldexp(2.0 - math.ldexp(1.0, 1 - self.precision), self.emax)

    @property
    def smallest_subnormal(self):
        return math.ldexp(1.0, self.emin - self.precision + 1)

    def __str__(self):
        return self.label


BINARY16 = PrecisionFormat("binary16", 5, 11)
BINARY32 = PrecisionFormat("binary32", 8, 24)
BINARY64 = PrecisionFormat("binary64", 11, 53)
FORMATS = (BINARY16, BINARY32, BINARY64)  # lowest precision first

_NATIVE = {"binary16": np.float16, "binary32": np.float32}


def get_format(label):
    for fmt in FORMATS:
        if fmt.label == label:
            return fmt
    raise ValueError("unknown precision format %r" % (label,))


def higher_format(fmt):
    """Next format up, or ``None`` for binary64."""
    i = FORMATS.index(fmt)
    return FORMATS[i + 1] if i + 1 < len(FORMATS) else None


def round_to(x, fmt):
    """Round binary64 value(s) to ``fmt``, nearest with ties to even.

    Subnormals of the target format are produced; values beyond the largest
    finite number overflow to signed infinity.  The result is returned as
    binary64 (a float for scalar input, an ndarray otherwise).
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    if fmt.precision >= 53:
        out = x.copy()
    else:
        out = np.array(x, dtype=np.float64, copy=True)
        finite = np.isfinite(x) & (x != 0.0)
        xf = x[finite]
        _, e = np.frexp(xf)  # xf = m * 2**e with 0.5 <= |m| < 1
        e = np.maximum(e - 1, fmt.emin)  # exponent of the leading bit, clamped
        shift = e - (fmt.precision - 1)  # exponent of one unit in the last place
        # scaling by a power of two is exact, np.rint breaks ties to even
        with np.errstate(over="ignore"):
            r = np.ldexp(np.rint(np.ldexp(xf, -shift)), shift)
        r[np.abs(r) > fmt.max_finite] = np.inf
        out[finite] = np.copysign(r, xf)
    if scalar:
        return float(out)
    return out


def _native(values, fmt):
    return round_to(values, fmt).astype(_NATIVE[fmt.label])


def lowprec_dot(v, w, fmt):
    """Inner product in ``fmt``: inputs, every product and every partial sum
    are rounded to ``fmt``; the sum runs left to right."""
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if v.shape != w.shape:
        raise ValueError("length mismatch: %d vs %d" % (v.size, w.size))
    if fmt is BINARY64 or fmt.precision >= 53:
        return float(np.dot(v, w))
    if v.size == 0:
        return 0.0
    # numpy's float16/float32 arithmetic is correctly rounded per operation
    # and add.accumulate is strictly sequential
    with np.errstate(over="ignore", invalid="ignore"):
        p = _native(v, fmt) * _native(w, fmt)
        return float(np.add.accumulate(p)[-1])


class FormatOverflowError(ArithmeticError):
    pass


class LowPrecisionMatrix:
    """A matrix together with its per-format rounded copies.

    Rounded entries are stored row-wise in a padded (ELLPACK) layout so that
    the sequential row sums can be run for all rows at once.
    """

    def __init__(self, A):
        self.A = A
        self.shape = A.shape
        if sp.issparse(A):
            csr = sp.csr_array(A)
            csr.sort_indices()
            counts = np.diff(csr.indptr)
            width = int(counts.max()) if counts.size else 0
            rows = np.repeat(np.arange(A.shape[0]), counts)
            slot = np.arange(csr.nnz) - np.repeat(csr.indptr[:-1], counts)
            self._cols = np.zeros((A.shape[0], width), dtype=np.intp)
            self._vals = np.zeros((A.shape[0], width))
            self._cols[rows, slot] = csr.indices
            self._vals[rows, slot] = csr.data
            self.row_length = width
        else:
            A = np.asarray(A, dtype=np.float64)
            self._cols = None
            self._vals = A
            self.row_length = A.shape[1]
        self._rounded = {}
        self._rounding_error = {}

    def rounded_values(self, fmt):
        if fmt.label not in self._rounded:
            self._rounded[fmt.label] = round_to(self._vals, fmt)
        return self._rounded[fmt.label]

    def matvec(self, v, fmt):
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.shape[1]:
            raise ValueError("dimension mismatch: A is %dx%d, v has length %d"
                             % (self.shape + (v.shape[0],)))
        if fmt.precision >= 53:
            return np.asarray(self.A @ v, dtype=np.float64)
        dt = _NATIVE[fmt.label]
        vals = self.rounded_values(fmt).astype(dt)
        vr = _native(v, fmt)
        with np.errstate(over="ignore", invalid="ignore"):
            if self._cols is None:
                p = vals * vr[np.newaxis, :]
            else:
                p = vals * vr[self._cols]
            if p.shape[1] == 0:
                return np.zeros(self.shape[0])
            return np.add.accumulate(p, axis=1)[:, -1].astype(np.float64)

    def rounding_error(self, fmt):
        """``||A - round_to(A, fmt)||_2`` (power iteration, rel. tol 1e-6)."""
        if fmt.label in self._rounding_error:
            return self._rounding_error[fmt.label]
        if fmt.precision >= 53:
            err = 0.0
        else:
            R = self.rounded_values(fmt)
            bad = np.argwhere(~np.isfinite(R))
            if bad.size:
                i, slot = bad[0]
                j = slot if self._cols is None else self._cols[i, slot]
                raise FormatOverflowError(
                    "entry (%d, %d) = %r overflows %s"
                    % (i, j, self._vals[i, slot], fmt.label))
            D = self._vals - R
            if not np.any(D):
                err = 0.0
            else:
                if self._cols is not None:
                    n = self.shape[0]
                    rows = np.repeat(np.arange(n), self._cols.shape[1])
                    D = sp.csr_array((D.ravel(), (rows, self._cols.ravel())),
                                     shape=self.shape)
                try:
                    err = matrix_norm2(D, tol=1e-6)
                except ConvergenceError:
                    # Frobenius norm is a safe upper bound for the model
                    err = float(np.linalg.norm(D.data if sp.issparse(D) else D))
        self._rounding_error[fmt.label] = err
        return err


def lowprec_matvec(A, v, fmt):
    """Matrix-vector product with every row computed as a ``lowprec_dot``."""
    if not isinstance(A, LowPrecisionMatrix):
        A = LowPrecisionMatrix(A)
    return A.matvec(v, fmt)


def matrix_rounding_error(A, fmt):
    if not isinstance(A, LowPrecisionMatrix):
        A = LowPrecisionMatrix(A)
    return A.rounding_error(fmt)


def dot_magnitude_estimate(v, w):
    """Magnitude scale ``2**(e_v + e_w + 1)`` of ``v^T w``.

    ``e_v`` is the binary exponent (``floor(log2)``) of the largest entry of
    ``v`` in absolute value; the ``+1`` accounts for the product of the
    significands.
    """
    mv = float(np.max(np.abs(v))) if np.size(v) else 0.0
    mw = float(np.max(np.abs(w))) if np.size(w) else 0.0
    if mv == 0.0 or mw == 0.0:
        return 0.0
    ev = math.frexp(mv)[1] - 1
    ew = math.frexp(mw)[1] - 1
    return math.ldexp(1.0, ev + ew + 1)


def make_rng(seed, stream=0):
    """Deterministic generator for substream ``stream`` of ``seed``.

    Each iteration index gets its own independent stream, so the draws of
    iteration ``j`` do not depend on how many numbers earlier iterations
    consumed.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def perturbed_dot(v, w, eta_bound, rng):
    """Exact binary64 ``v^T w`` plus a uniform perturbation in
    ``[-eta_bound, eta_bound]``.

    Returns ``(value, eta)`` where ``eta`` equals ``value - v @ w`` as
    evaluated in floating point, so the recorded perturbation is exactly
    the one the caller sees.
    """
    exact = float(np.dot(v, w))
    if eta_bound <= 0.0:
        return exact, 0.0
    while True:
        value = exact + rng.uniform(-eta_bound, eta_bound)
        eta = value - exact
        if abs(eta) <= eta_bound:
            return value, eta


def gaussian_perturbation(n, eps_bound, rng, rank_one=False):
    """Random ``n x n`` matrix with 2-norm ``eps_bound``.

    The default draws a dense standard normal matrix and rescales it by its
    2-norm from a dense SVD (power iteration stalls when the top two singular
    values of a random matrix nearly coincide); ``rank_one`` draws
    ``eps * g h^T / (|g| |h|)`` instead, which needs O(n) memory.
    Returns the dense matrix, or the pair ``(g, h)`` of scaled factors.
    """
    if rank_one:
        g = rng.standard_normal(n)
        h = rng.standard_normal(n)
        return (eps_bound / np.linalg.norm(g)) * g, h / np.linalg.norm(h)
    G = rng.standard_normal((n, n))
    return (eps_bound / np.linalg.norm(G, 2)) * G


def perturbed_matvec(A, v, eps_bound, rng, rank_one=False):
    """``w = (A + E) v`` with ``||E||_2 = eps_bound`` drawn at random.

    Returns ``(w, applied_norm, Ev)``; ``Ev`` is the perturbation that was
    added to ``A v``.
    """
    v = np.asarray(v, dtype=np.float64)
    Av = np.asarray(A @ v, dtype=np.float64)
    if eps_bound <= 0.0:
        return Av, 0.0, np.zeros_like(Av)
    E = gaussian_perturbation(A.shape[0], eps_bound, rng, rank_one=rank_one)
    if rank_one:
        g, h = E
        Ev = g * float(h @ v)
    else:
        Ev = E @ v
    return Av + Ev, float(eps_bound), Ev
