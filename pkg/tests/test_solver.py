import math

import numpy as np
import pytest
import scipy.sparse as sp

from inexact_gmres import linalg, solver
from inexact_gmres.config import ExperimentConfig
from inexact_gmres.solver import gmres_solve, reference_exact_solve
from oracles import dense_gmres


def test_exact_mode_matches_dense_oracle(grcar_problem):
    A, b = grcar_problem
    out = reference_exact_solve(A, b, 60)
    ref = dense_gmres(A, b, 60)
    got = out.report.column("rel_resid_recurred")
    assert np.max(np.abs(np.array(got) - np.array(ref[:len(got)]))) <= 1e-12


def test_identity_converges_in_one_step():
    out = gmres_solve(np.eye(5), np.arange(1.0, 6.0), mode="exact")
    assert out.status == solver.CONVERGED and out.k == 1
    assert np.allclose(out.x, np.arange(1.0, 6.0))


def test_breakdown_on_invariant_subspace():
    A = np.diag([2.0, 3.0, 4.0])
    b = np.array([1.0, 0.0, 0.0])
    out = gmres_solve(A, b, mode="exact", stop_tolerance=0.0)
    assert out.status == solver.BREAKDOWN and out.k == 1
    assert np.array_equal(out.x, [0.5, 0.0, 0.0])
    # with a positive stop tolerance the same run counts as converged
    assert gmres_solve(A, b, mode="exact").status == solver.CONVERGED


def test_singular_hessenberg_is_numerical_failure():
    # b is not in the range of the nilpotent shift, so R_k is singular
    A = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    out = gmres_solve(A, np.array([1.0, 0.0, 0.0]), mode="exact", stop_tolerance=0.0)
    assert out.status == solver.NUMERICAL_FAILURE


def test_max_iterations_status(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, mode="exact", kmax=5)
    assert out.status == solver.MAX_ITERATIONS and out.k == 5


def test_input_validation():
    with pytest.raises(ValueError, match="square"):
        gmres_solve(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError, match="length"):
        gmres_solve(np.eye(3), np.ones(2))
    with pytest.raises(ValueError, match="nonzero"):
        gmres_solve(np.eye(3), np.zeros(3))


def test_recorded_perturbations_respect_tolerances(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, threshold="aggressive", epsilon=1e-8, kmax=40)
    rows = out.report.rows
    for j, row in enumerate(rows, 1):
        etas = out.state.record.etas[j - 1]
        assert np.all(np.abs(etas) <= row.eta_j)
        assert out.state.record.matvec_norms[j - 1] <= row.eps_j
    assert out.state.record.N(3).shape == (3, 3)
    assert np.allclose(np.tril(out.state.record.N(5), -1), 0.0)


def test_perturbations_reproduce_recorded_arnoldi_relation(grcar_problem):
    from inexact_gmres.diagnostics import arnoldi_defect
    A, b = grcar_problem
    out = gmres_solve(A, b, threshold="aggressive", epsilon=1e-6, kmax=30)
    assert arnoldi_defect(A, out) <= 1e-13


def test_true_and_recurred_agree_in_exact_mode(grcar_problem):
    A, b = grcar_problem
    out = reference_exact_solve(A, b, 100, stop_tolerance=1e-14 * np.linalg.norm(b))
    t = np.array(out.report.column("rel_resid_true"))
    r = np.array(out.report.column("rel_resid_recurred"))
    assert np.all(np.abs(t - r) <= 1e-13)
    assert out.status == solver.CONVERGED


def test_loss_of_orthogonality_column_matches_dense_svd(grcar_problem):
    from inexact_gmres.diagnostics import loss_of_orthogonality
    A, b = grcar_problem
    out = gmres_solve(A, b, threshold="fixed-table", epsilon=1e-6, kmax=25)
    F = out.report.rows[-1].F_norm
    assert F == pytest.approx(loss_of_orthogonality(out.state.basis()), rel=1e-8, abs=1e-15)


def test_relative_epsilon_scales_by_norm(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, epsilon=1e-10, relative_epsilon=True, kmax=2)
    assert out.info["epsilon"] == pytest.approx(1e-10 * np.linalg.norm(A.toarray(), 2), rel=1e-7)
    assert out.info["stop_tolerance"] == pytest.approx(out.info["epsilon"] * np.linalg.norm(b))


def test_theorem_mode_fills_sigma_from_reference(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, threshold="theorem", epsilon=1e-6, kmax=100)
    ref = reference_exact_solve(A, b, 100, stop_tolerance=1e-6 * np.linalg.norm(b))
    assert out.info["sigma_min_hk"] == pytest.approx(solver.reference_sigma_min_hk(ref))


def test_seed_determinism_and_sensitivity(grcar_problem):
    A, b = grcar_problem
    a = gmres_solve(A, b, epsilon=1e-6, kmax=20, seed=4)
    c = gmres_solve(A, b, epsilon=1e-6, kmax=20, seed=4)
    d = gmres_solve(A, b, epsilon=1e-6, kmax=20, seed=5)
    assert a.report.rows == c.report.rows
    assert a.report.rows != d.report.rows


def test_disabled_channels(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, epsilon=1e-6, kmax=10, inexact_dots=False)
    assert all(r.eta_j == 0.0 for r in out.report.rows)
    assert all(np.all(e == 0.0) for e in out.state.record.etas)
    out = gmres_solve(A, b, epsilon=1e-6, kmax=10, inexact_matvecs=False)
    assert all(n == 0.0 for n in out.state.record.matvec_norms)


def test_rank_one_perturbation_runs(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, epsilon=1e-8, kmax=20, rank_one_perturbation=True)
    assert out.k == 20
    for Ev, n in zip(out.state.record.matvec_columns, out.state.record.matvec_norms):
        assert np.linalg.norm(Ev) <= n * (1 + 1e-12)


def test_multiprecision_records_formats_and_falls_back():
    A = sp.csr_array(np.diag(np.linspace(1.0, 2.0, 30)) + np.diag(np.full(29, 0.3), 1))
    b = linalg.sine_rhs(A)
    out = gmres_solve(A, b, mode="multiprecision", epsilon=1e-3, relative_epsilon=True)
    fmts = set(out.report.column("mv_fmt")) | set(out.report.column("dot_fmt"))
    assert fmts <= {"binary16", "binary32", "binary64"}
    assert "binary16" in fmts
    for actual, modeled in out.state.record.matvec_errors:
        assert math.isfinite(actual)
    # entries too large for binary16 force a higher format
    big = sp.csr_array(np.diag(np.linspace(1e5, 2e5, 30)))
    out = gmres_solve(big, linalg.sine_rhs(big), mode="multiprecision", epsilon=1e-2,
                      relative_epsilon=True, kmax=5)
    assert "binary16" not in out.report.column("mv_fmt")


def test_reconstruct_iterate_range(grcar_problem):
    A, b = grcar_problem
    out = gmres_solve(A, b, mode="exact", kmax=3)
    with pytest.raises(IndexError):
        solver.reconstruct_iterate(out.state, 4)
