"""Post-hoc figure generation from sphereflow CSV outputs.

Five figure kinds, all batch artifacts (PNG, no UI):

    energy                energy column of a ledger CSV over time
    drift                 pre-renormalization sphere drift (log y)
    convergence           asymptotics CSV; log-y error curves with the
                          fitted exponential decay rate annotated
    profile               a field snapshot rendered on a dense grid
    dissipation-residual  |E(0) - E(t) - int ||grad_M E||^2| / |E(0)|

The input formats are the ones the sphereflow CLI documents: ledger
CSVs with columns t,energy,S,gradM_sq,dissipation_integral,
sphere_drift,min_value; convergence CSVs with tau,l2_error,h1_error,
s_gap; field snapshots with a `# basis=sine d=.. L=.. m=..` header and
k[,k2],lambda,coefficient rows.  This package only reads those files;
it never imports the solver.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "PlotSpec",
    "RenderResult",
    "MissingColumnError",
    "EmptyInputError",
    "render",
    "main",
]

KINDS = ("energy", "drift", "convergence", "profile", "dissipation-residual")

#: floor for log-scale plotting of exactly-zero diagnostics
LOG_FLOOR = 1e-18


class MissingColumnError(KeyError):
    def __init__(self, column, path):
        super().__init__(column)
        self.column = column
        self.path = path

    def __str__(self):
        return f"column {self.column!r} missing from {self.path}"


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    log_x: bool = False
    log_y: bool | None = None  # None: per-kind default

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise EmptyInputError("no input files given")


@dataclass
class RenderResult:
    path: str
    annotations: dict = field(default_factory=dict)


def read_csv_columns(path, required):
    """Read a comment-headed CSV into named float columns."""
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    if header is None or not rows:
        raise EmptyInputError(f"{path}: no data rows")
    for col in required:
        if col not in header:
            raise MissingColumnError(col, path)
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(header)}


def read_snapshot(path):
    """Parse a field snapshot: header tokens plus (indices, coeffs)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise EmptyInputError(f"{path}: missing snapshot header")
    header = {}
    for tok in lines[0].lstrip("# ").split():
        key, _, val = tok.partition("=")
        header[key] = val
    if header.get("basis") != "sine":
        raise EmptyInputError(f"{path}: unsupported basis {header.get('basis')!r}")
    if len(lines) < 2:
        raise EmptyInputError(f"{path}: no coefficient rows")
    dim = int(header["d"])
    lengths = [float(x) for x in header["L"].split(",")]
    indices, coeffs = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        indices.append(tuple(int(x) for x in parts[:dim]))
        coeffs.append(float(parts[dim + 1]))
    return header, dim, lengths, indices, np.asarray(coeffs)


def sine_series(dim, lengths, indices, coeffs, axes):
    """Evaluate the snapshot's sine expansion on a tensor grid."""
    if dim == 1:
        x = axes[0]
        out = np.zeros_like(x)
        for (k,), c in zip(indices, coeffs):
            out += c * math.sqrt(2.0 / lengths[0]) * np.sin(
                k * math.pi * x / lengths[0])
        return out
    X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
    out = np.zeros_like(X)
    for (k1, k2), c in zip(indices, coeffs):
        out += (c * math.sqrt(2.0 / lengths[0]) * math.sqrt(2.0 / lengths[1])
                * np.sin(k1 * math.pi * X / lengths[0])
                * np.sin(k2 * math.pi * Y / lengths[1]))
    return out


def _save(fig, spec):
    # suppress the version text chunk so re-rendering is byte-stable
    fig.savefig(spec.output, dpi=110, metadata={"Software": None})
    plt.close(fig)


def _axes(spec, ylabel, default_log_y=False):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    log_y = default_log_y if spec.log_y is None else spec.log_y
    if log_y:
        ax.set_yscale("log")
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _render_energy(spec):
    fig, ax = _axes(spec, "energy")
    for path in spec.inputs:
        cols = read_csv_columns(path, ("t", "energy"))
        ax.plot(cols["t"], cols["energy"], label=path)
    if len(spec.inputs) > 1:
        ax.legend(fontsize=7)
    ax.set_title("energy decay")
    _save(fig, spec)
    return RenderResult(spec.output)


def _render_drift(spec):
    fig, ax = _axes(spec, "|‖u‖ - 1| before renormalization", default_log_y=True)
    for path in spec.inputs:
        cols = read_csv_columns(path, ("t", "sphere_drift"))
        ax.plot(cols["t"], np.maximum(cols["sphere_drift"], LOG_FLOOR),
                label=path)
    if len(spec.inputs) > 1:
        ax.legend(fontsize=7)
    ax.set_title("sphere drift")
    _save(fig, spec)
    return RenderResult(spec.output)


def _fit_rate(x, y):
    """Least-squares slope of log(y) against x over the resolvable rows."""
    keep = y > 1e-13
    if keep.sum() < 2:
        return None
    return float(np.polyfit(x[keep], np.log(y[keep]), 1)[0])


def _render_convergence(spec):
    fig, ax = _axes(spec, "error", default_log_y=True)
    ax.set_xlabel("tau")
    annotations = {}
    for path in spec.inputs:
        cols = read_csv_columns(path, ("tau", "l2_error", "h1_error"))
        tau = cols["tau"]
        for name in ("l2_error", "h1_error"):
            err = np.maximum(cols[name], LOG_FLOOR)
            rate = _fit_rate(tau, cols[name])
            label = name if rate is None else f"{name} (rate {rate:.2f})"
            ax.plot(tau, err, marker="o", label=label)
            if rate is not None:
                annotations[f"rate_{name}"] = rate
    ax.legend(fontsize=8)
    ax.set_title("convergence to the ground state")
    _save(fig, spec)
    return RenderResult(spec.output, annotations)


def _render_profile(spec):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for path in spec.inputs:
        header, dim, lengths, indices, coeffs = read_snapshot(path)
        if dim == 1:
            x = np.linspace(0.0, lengths[0], 512)
            ax.plot(x, sine_series(dim, lengths, indices, coeffs, (x,)),
                    label=header.get("t", path))
            ax.set_xlabel("x")
            ax.set_ylabel("u(x)")
        else:
            x = np.linspace(0.0, lengths[0], 128)
            y = np.linspace(0.0, lengths[1], 128)
            vals = sine_series(dim, lengths, indices, coeffs, (x, y))
            im = ax.imshow(vals.T, origin="lower", aspect="auto",
                           extent=(0, lengths[0], 0, lengths[1]))
            fig.colorbar(im, ax=ax)
    if dim == 1 and len(spec.inputs) > 1:
        ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    ax.set_title("stationary / snapshot profile")
    _save(fig, spec)
    return RenderResult(spec.output)


def _render_dissipation(spec):
    fig, ax = _axes(spec, "relative energy-identity residual",
                    default_log_y=True)
    annotations = {}
    for path in spec.inputs:
        cols = read_csv_columns(
            path, ("t", "energy", "dissipation_integral"))
        e = cols["energy"]
        scale = abs(e[0]) if e[0] != 0.0 else 1.0
        res = np.abs(e[0] - e - cols["dissipation_integral"]) / scale
        ax.plot(cols["t"], np.maximum(res, LOG_FLOOR), label=path)
        annotations[f"max_residual:{path}"] = float(res.max())
    if len(spec.inputs) > 1:
        ax.legend(fontsize=7)
    ax.set_title("dissipation identity residual")
    _save(fig, spec)
    return RenderResult(spec.output, annotations)


_RENDERERS = {
    "energy": _render_energy,
    "drift": _render_drift,
    "convergence": _render_convergence,
    "profile": _render_profile,
    "dissipation-residual": _render_dissipation,
}


def render(spec: PlotSpec) -> RenderResult:
    """Write one raster image for the spec; read-only over its inputs.

    Raises MissingColumnError / EmptyInputError before any file is
    written when the inputs do not carry what the figure needs.
    """
    return _RENDERERS[spec.kind](spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sphereflow-viz",
        description="Render figures from sphereflow run outputs")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--input", action="append", required=True,
                        help="input CSV (repeatable)")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--log-x", action="store_true")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--log-y", dest="log_y", action="store_true",
                       default=None)
    group.add_argument("--linear-y", dest="log_y", action="store_false")
    args = parser.parse_args(argv)
    try:
        result = render(PlotSpec(kind=args.kind, inputs=tuple(args.input),
                                 output=args.out, log_x=args.log_x,
                                 log_y=args.log_y))
    except (MissingColumnError, EmptyInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key, val in result.annotations.items():
        print(f"{key} = {val:.6g}")
    print(result.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
