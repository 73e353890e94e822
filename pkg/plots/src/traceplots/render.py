"""Render semilog convergence plots from solver trace CSVs.

Consumes the trace CSV schema emitted by the benchmark CLI
(``iter,f_val,k_gap,grad_norm,L_inv,grad_evals,wall_ms``) and plots a
chosen metric against cumulative gradient evaluations, one curve per
input file.
"""

import argparse
import csv
import dataclasses
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# Columns every trace CSV must carry.
REQUIRED_COLUMNS = ("iter", "f_val", "k_gap", "grad_norm", "L_inv",
                    "grad_evals", "wall_ms")

# Selectable metrics.  "f_gap" is f_val minus a caller-supplied reference
# minimum; the other two are plotted as stored.
Y_COLUMNS = ("f_gap", "k_gap", "grad_norm")

# Floor applied to non-positive values on a log axis; exact convergence
# produces zeros that a log scale cannot display.
LOG_FLOOR = 1e-16


class SchemaError(ValueError):
    """A trace CSV is missing a required column."""


@dataclasses.dataclass(frozen=True)
class PlotSpec:
    """Description of one convergence plot.

    Attributes
    ----------
    csv_paths : trace CSV files, one curve each.
    labels : legend labels, same length as ``csv_paths``.
    y_column : one of ``Y_COLUMNS``.
    output_path : where the raster image is written.
    f_min : reference minimum, required when ``y_column == "f_gap"``.
    log_y : use a logarithmic y axis (default True).
    """

    csv_paths: tuple
    labels: tuple
    y_column: str = "k_gap"
    output_path: str = "trace.png"
    f_min: float = None
    log_y: bool = True

    def __post_init__(self):
        if len(self.csv_paths) == 0:
            raise ValueError("at least one input CSV is required")
        if len(self.labels) != len(self.csv_paths):
            raise ValueError("need exactly one label per input CSV")
        if self.y_column not in Y_COLUMNS:
            raise ValueError("y_column must be one of %s, got %r"
                             % (", ".join(Y_COLUMNS), self.y_column))
        if self.y_column == "f_gap" and self.f_min is None:
            raise ValueError("y_column 'f_gap' requires f_min")


@dataclasses.dataclass(frozen=True)
class Series:
    """One plotted curve: raw CSV-derived values plus display values."""

    label: str
    x: tuple          # cumulative gradient evaluations
    y: tuple          # metric values exactly as derived from the CSV
    y_plotted: tuple  # y with the log floor applied
    clamped: tuple    # indices where the floor replaced a value


def load_trace(path):
    """Read a trace CSV into a dict of float columns.

    Raises SchemaError naming the first missing required column.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError("%s: missing column %r" % (path, col))
        columns = {col: [] for col in REQUIRED_COLUMNS}
        for row in reader:
            for col in REQUIRED_COLUMNS:
                columns[col].append(float(row[col]))
    return columns


def _series_from_trace(columns, label, spec):
    x = tuple(columns["grad_evals"])
    if spec.y_column == "f_gap":
        y = tuple(v - spec.f_min for v in columns["f_val"])
    else:
        y = tuple(columns[spec.y_column])
    if spec.log_y:
        clamped = tuple(i for i, v in enumerate(y) if v <= 0.0)
        y_plotted = tuple(LOG_FLOOR if v <= 0.0 else v for v in y)
    else:
        clamped = ()
        y_plotted = y
    return Series(label=label, x=x, y=y, y_plotted=y_plotted,
                  clamped=clamped)


_Y_AXIS_LABEL = {
    "f_gap": "function suboptimality",
    "k_gap": "monitored dual gap",
    "grad_norm": "gradient norm",
}


def render(spec):
    """Render the plot described by ``spec`` and write the image file.

    Returns the list of plotted Series so callers can verify that the
    displayed values match the CSV contents.
    """
    series = [
        _series_from_trace(load_trace(path), label, spec)
        for path, label in zip(spec.csv_paths, spec.labels)
    ]

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for s in series:
        line, = ax.plot(s.x, s.y_plotted, label=s.label)
        if s.clamped:
            # Mark floored points so exact zeros remain visible.
            ax.plot([s.x[i] for i in s.clamped],
                    [s.y_plotted[i] for i in s.clamped],
                    linestyle="none", marker="v", markersize=7,
                    color=line.get_color())
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("gradient evaluations")
    ax.set_ylabel(_Y_AXIS_LABEL[spec.y_column])
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return series


def build_parser():
    parser = argparse.ArgumentParser(
        prog="traceplot",
        description="Plot a convergence metric from solver trace CSVs.")
    parser.add_argument("--csv", action="append", default=[],
                        metavar="PATH",
                        help="trace CSV to plot (repeatable)")
    parser.add_argument("--label", action="append", default=[],
                        metavar="TEXT",
                        help="legend label for the matching --csv "
                             "(defaults to the file path)")
    parser.add_argument("--y-column", choices=Y_COLUMNS, default="k_gap",
                        help="metric to plot (default: k_gap)")
    parser.add_argument("--f-min", type=float, default=None,
                        help="reference minimum, required for f_gap")
    parser.add_argument("--linear-y", action="store_true",
                        help="use a linear y axis instead of log")
    parser.add_argument("--output", default="trace.png", metavar="PATH",
                        help="output image path (default: trace.png)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.csv:
        parser.error("at least one --csv input is required")
    labels = list(args.label)
    if len(labels) < len(args.csv):
        labels.extend(args.csv[len(labels):])
    elif len(labels) > len(args.csv):
        parser.error("more --label values than --csv inputs")
    try:
        spec = PlotSpec(csv_paths=tuple(args.csv), labels=tuple(labels),
                        y_column=args.y_column, output_path=args.output,
                        f_min=args.f_min, log_y=not args.linear_y)
        render(spec)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
