import os
import sys

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, os.path.dirname(__file__))

from inexact_gmres import linalg  # noqa: E402

HERE = os.path.dirname(os.path.abspath(__file__))
ACCEPTANCE_LINES = {}


def bus_matrix_path():
    """494_bus.mtx from the environment variable or tests/data, else None."""
    for candidate in (os.environ.get("INEXACT_GMRES_494_BUS"),
                      os.path.join(HERE, "data", "494_bus.mtx")):
        if candidate and os.path.isfile(candidate):
            return candidate
    return None


def power_network_surrogate(n=494, cond=1e6, seed=7):
    """Sparse symmetric positive definite matrix shaped like a power network
    admittance matrix: a weighted Laplacian of a random near-tree graph plus
    a diagonal shift fixing the condition number."""
    rng = np.random.default_rng(seed)
    rows, cols = [], []
    for i in range(1, n):
        rows.append(i)
        cols.append(int(rng.integers(max(0, i - 8), i)))
    for _ in range(n // 6):
        i, j = rng.integers(0, n, 2)
        if i != j:
            rows.append(max(i, j))
            cols.append(min(i, j))
    w = rng.uniform(1, 100, len(rows))
    W = sp.coo_array((w, (rows, cols)), shape=(n, n)).tocsr()
    W = W + W.T
    L = sp.diags_array(np.asarray(W.sum(axis=1)).ravel()) - W
    lmax = np.linalg.eigvalsh(L.toarray())[-1]
    return sp.csr_array(L + sp.eye_array(n) * (lmax / cond))


@pytest.fixture(scope="session")
def grcar_problem():
    A = linalg.grcar(100, 5)
    return A, linalg.sine_rhs(A)


@pytest.fixture(scope="session")
def surrogate_path(tmp_path_factory):
    from inexact_gmres.mmio import write_matrix_market
    path = tmp_path_factory.mktemp("bus") / "surrogate_bus.mtx"
    write_matrix_market(power_network_surrogate(), str(path))
    return str(path)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
