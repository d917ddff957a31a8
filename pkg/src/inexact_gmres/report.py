"""Per-iteration telemetry and its CSV form."""
import csv
from dataclasses import dataclass, field

COLUMNS = ("j", "rel_resid_true", "rel_resid_recurred", "F_norm",
           "eta_j", "eps_j", "dot_fmt", "mv_fmt")


@dataclass
class IterationRow:
    j: int
    rel_resid_true: float
    rel_resid_recurred: float
    F_norm: float
    eta_j: float
    eps_j: float
    dot_fmt: str
    mv_fmt: str


@dataclass
class SolveReport:
    rows: list = field(default_factory=list)
    status: str = None

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def __len__(self):
        return len(self.rows)


def _fmt(value):
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip representation
    return str(value)


def write_report_csv(report, path, provenance=()):
    """Header plus one row per iteration; ``provenance`` lines are written
    first as ``#`` comments."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in provenance:
            fh.write("# %s\n" % line)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])


def read_report_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError("unexpected columns %r" % (header,))
    rows = []
    for rec in reader:
        rows.append(IterationRow(int(rec[0]), float(rec[1]), float(rec[2]),
                                 float(rec[3]), float(rec[4]), float(rec[5]),
                                 rec[6], rec[7]))
    return SolveReport(rows=rows)


def write_diagnostics_csv(items, path):
    """Write ``(key, value)`` pairs as a two-column CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("quantity", "value"))
        for key, value in items:
            writer.writerow((key, _fmt(value)))
