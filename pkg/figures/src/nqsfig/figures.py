"""Figure construction from nqslab CSV files.

Three kinds:
  convergence      -- relative energy error vs iteration, one curve per
                      training run, labeled by the run's number of weight
                      columns (log-scale y axis);
  size-scan        -- the same axes, one curve per run, labeled by file
                      stem (intended for runs that differ in chain length);
  fluctuation-scan -- energy-fluctuation density vs interaction exponent,
                      one curve per chain length plus a distinguished
                      limiting curve from the rows with L = inf.

Rendering is deterministic: fixed canvas, fixed ordering, no randomness.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

FIGURE_KINDS = ("convergence", "size-scan", "fluctuation-scan")

_CANVAS = {"figsize": (6.4, 4.4), "dpi": 150}

# columns each kind needs from its input CSVs
_REQUIRED = {
    "convergence": ("iteration", "eps_rel"),
    "size-scan": ("iteration", "eps_rel"),
    "fluctuation-scan": ("alpha", "L", "sigma2"),
}


class SchemaError(Exception):
    """An input CSV does not carry the columns the figure kind needs."""


class DataError(Exception):
    """No plottable rows remain after filtering."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    title: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {FIGURE_KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


@dataclass
class RenderReport:
    """What a render did: rows dropped per file (log-scale filtering)."""

    dropped: dict = field(default_factory=dict)

    @property
    def n_dropped(self) -> int:
        return sum(self.dropped.values())


def _read_table(path: str, required: tuple) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in required:
                if column not in header:
                    raise SchemaError(
                        f"{path}: missing required column {column!r} "
                        f"(found {header})")
            return [row for row in reader
                    if row.get(required[0]) and
                    not row[required[0]].startswith("#")]
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def _weight_column_count(path: str) -> int:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    return sum(1 for name in header
               if name.startswith("w") and name[1:].isdigit())


def _eps_series(path: str, report: RenderReport):
    """(iterations, eps_rel) with nonpositive values dropped for the log axis."""
    rows = _read_table(path, _REQUIRED["convergence"])
    iters, eps = [], []
    dropped = 0
    for row in rows:
        if not row["eps_rel"]:
            dropped += 1
            continue
        value = float(row["eps_rel"])
        if value <= 0:
            dropped += 1
            continue
        iters.append(int(row["iteration"]))
        eps.append(value)
    if dropped:
        report.dropped[path] = dropped
    return iters, eps


def _stem(path: str) -> str:
    name = path.rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0]


def _build_eps_axes(spec: FigureSpec, report: RenderReport, label_fn):
    fig, ax = plt.subplots(**_CANVAS)
    plotted = 0
    for path in spec.inputs:
        iters, eps = _eps_series(path, report)
        if not iters:
            continue
        ax.semilogy(iters, eps, label=label_fn(path))
        plotted += 1
    if plotted == 0:
        plt.close(fig)
        raise DataError("no rows with positive relative error to plot")
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative energy error")
    ax.legend()
    return fig


def _build_fluctuation_axes(spec: FigureSpec, report: RenderReport):
    fig, ax = plt.subplots(**_CANVAS)
    by_length: dict = {}
    for path in spec.inputs:
        for row in _read_table(path, _REQUIRED["fluctuation-scan"]):
            by_length.setdefault(row["L"], []).append(
                (float(row["alpha"]), float(row["sigma2"])))
    finite = sorted((int(k) for k in by_length if k != "inf"))
    if not finite and "inf" not in by_length:
        plt.close(fig)
        raise DataError("no fluctuation rows to plot")
    for L in finite:
        pts = sorted(by_length[str(L)])
        ax.plot([a for a, _ in pts], [s for _, s in pts], label=f"L = {L}")
    if "inf" in by_length:
        pts = sorted(by_length["inf"])
        ax.plot([a for a, _ in pts], [s for _, s in pts], color="red",
                linewidth=2.0, label="limit")
    ax.set_xlabel("interaction exponent")
    ax.set_ylabel("energy-fluctuation density")
    ax.legend()
    return fig


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure for a spec; returns (figure, report)."""
    report = RenderReport()
    if spec.kind == "convergence":
        fig = _build_eps_axes(
            spec, report,
            lambda path: f"K = {_weight_column_count(path)}")
    elif spec.kind == "size-scan":
        fig = _build_eps_axes(spec, report, _stem)
    else:
        fig = _build_fluctuation_axes(spec, report)
    if spec.title:
        fig.axes[0].set_title(spec.title)
    return fig, report


def render(spec: FigureSpec) -> RenderReport:
    """Render a spec to its output image; deterministic for fixed inputs."""
    fig, report = build_figure(spec)
    try:
        fig.savefig(spec.output, metadata={"Software": "nqsfig"})
    finally:
        plt.close(fig)
    return report
