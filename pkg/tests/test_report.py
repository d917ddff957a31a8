import math

from inexact_gmres.report import (COLUMNS, IterationRow, SolveReport, read_report_csv,
                                  write_diagnostics_csv, write_report_csv)


def _report():
    rows = [IterationRow(1, 0.5, 0.5, 1e-16, 1e-10, 1e-10, "binary64", "binary32"),
            IterationRow(2, 0.1 + 0.2, 1 / 3, float("nan"), 0.0, 2.0 ** -52, "binary16", "binary64")]
    return SolveReport(rows=rows, status="converged")


def test_columns_and_provenance(tmp_path):
    p = tmp_path / "r.csv"
    write_report_csv(_report(), str(p), ["run: test", "seed: 0"])
    lines = p.read_bytes().split(b"\n")
    assert lines[0] == b"# run: test" and lines[1] == b"# seed: 0"
    assert lines[2].decode() == ",".join(COLUMNS)
    assert b"\r" not in p.read_bytes()


def test_round_trip_is_exact(tmp_path):
    p = tmp_path / "r.csv"
    rep = _report()
    write_report_csv(rep, str(p))
    back = read_report_csv(str(p))
    assert back.rows[0] == rep.rows[0]
    assert back.rows[1].rel_resid_true == 0.1 + 0.2
    assert back.rows[1].rel_resid_recurred == 1 / 3
    assert math.isnan(back.rows[1].F_norm)


def test_column_accessor():
    assert _report().column("dot_fmt") == ["binary64", "binary16"]
    assert len(_report()) == 2


def test_diagnostics_csv(tmp_path):
    p = tmp_path / "d.csv"
    write_diagnostics_csv([("status", "converged"), ("gap", 1e-12)], str(p))
    assert p.read_text() == "quantity,value\nstatus,converged\ngap,1e-12\n"
