"""Matrix Market reader and writer (real matrices only)."""
import numpy as np
import scipy.sparse as sp


class MatrixMarketError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def _parse_header(line):
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
        raise MatrixMarketError("malformed header %r" % line.strip(), 1)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError("unsupported object %r" % obj, 1)
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError("unsupported format %r" % fmt, 1)
    if field not in ("real", "integer"):
        raise MatrixMarketError("unsupported field %r (only real matrices)" % field, 1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError("unsupported symmetry %r" % symmetry, 1)
    return fmt, symmetry


def _data_lines(lines):
    for lineno, line in enumerate(lines, start=2):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        yield lineno, s.split()


def _number(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise MatrixMarketError("not a real number: %r" % token, lineno) from None


def _integer(token, lineno):
    try:
        return int(token)
    except ValueError:
        raise MatrixMarketError("not an integer: %r" % token, lineno) from None


def read_matrix_market(path):
    """Read a real Matrix Market file.

    Coordinate files are returned as CSR, array files as dense arrays.
    Symmetric storage is expanded to the full matrix.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        rest = fh.read().splitlines()
    fmt, symmetry = _parse_header(header)
    data = _data_lines(rest)
    try:
        lineno, size = next(data)
    except StopIteration:
        raise MatrixMarketError("missing size line") from None
    if fmt == "coordinate":
        return _read_coordinate(size, lineno, data, symmetry)
    return _read_array(size, lineno, data, symmetry)


def _read_coordinate(size, lineno, data, symmetry):
    if len(size) != 3:
        raise MatrixMarketError("size line needs 'rows cols nnz'", lineno)
    nrows, ncols, nnz = (_integer(t, lineno) for t in size)
    if nrows <= 0 or ncols <= 0 or nnz < 0:
        raise MatrixMarketError("invalid dimensions", lineno)
    rows, cols, vals = [], [], []
    seen = set()
    count = 0
    for lineno, tokens in data:
        if len(tokens) != 3:
            raise MatrixMarketError("expected 'i j value'", lineno)
        i = _integer(tokens[0], lineno)
        j = _integer(tokens[1], lineno)
        a = _number(tokens[2], lineno)
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError("index (%d, %d) out of range" % (i, j), lineno)
        if symmetry != "general" and j > i:
            raise MatrixMarketError("entry above the diagonal in %s storage"
                                    % symmetry, lineno)
        if (i, j) in seen:
            raise MatrixMarketError("duplicate entry (%d, %d)" % (i, j), lineno)
        seen.add((i, j))
        count += 1
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(a)
        if symmetry != "general" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(a if symmetry == "symmetric" else -a)
    if count != nnz:
        raise MatrixMarketError("header declares %d entries, found %d" % (nnz, count))
    return sp.csr_array((np.array(vals, dtype=np.float64), (rows, cols)),
                        shape=(nrows, ncols))


def _read_array(size, lineno, data, symmetry):
    if len(size) != 2:
        raise MatrixMarketError("size line needs 'rows cols'", lineno)
    nrows, ncols = (_integer(t, lineno) for t in size)
    if nrows <= 0 or ncols <= 0:
        raise MatrixMarketError("invalid dimensions", lineno)
    if symmetry == "general":
        slots = [(i, j) for j in range(ncols) for i in range(nrows)]
    else:
        if nrows != ncols:
            raise MatrixMarketError("%s matrix must be square" % symmetry, lineno)
        # column-major lower triangle; skew-symmetric omits the diagonal
        first = 0 if symmetry == "symmetric" else 1
        slots = [(i, j) for j in range(ncols) for i in range(j + first, nrows)]
    A = np.zeros((nrows, ncols))
    k = 0
    for lineno, tokens in data:
        if len(tokens) != 1:
            raise MatrixMarketError("expected one value per line", lineno)
        if k >= len(slots):
            raise MatrixMarketError("too many values", lineno)
        i, j = slots[k]
        a = _number(tokens[0], lineno)
        A[i, j] = a
        if symmetry == "symmetric":
            A[j, i] = a
        elif symmetry == "skew-symmetric":
            A[j, i] = -a
        k += 1
    if k != len(slots):
        raise MatrixMarketError("expected %d values, found %d" % (len(slots), k))
    return A


def write_matrix_market(A, path, comment=None):
    """Write ``A`` in coordinate general format (explicit zeros dropped)."""
    C = sp.coo_array(A)
    C.sum_duplicates()
    mask = C.data != 0.0
    rows, cols, vals = C.row[mask], C.col[mask], C.data[mask]
    order = np.lexsort((rows, cols))  # column-major, as in most collections
    rows, cols, vals = rows[order], cols[order], vals[order]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write("%% %s\n" % line)
        fh.write("%d %d %d\n" % (C.shape[0], C.shape[1], vals.size))
        for i, j, a in zip(rows, cols, vals):
            fh.write("%d %d %r\n" % (i + 1, j + 1, float(a)))
