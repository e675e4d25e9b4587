"""Closed-form Dirichlet eigenbasis on intervals and rectangles.

The negative Laplacian with zero boundary values on a box
[0, L_1] x ... x [0, L_d] has eigenfunctions

    w_k(x) = prod_i sqrt(2 / L_i) * sin(k_i pi x_i / L_i),

with eigenvalues lambda_k = sum_i (k_i pi / L_i)^2.  A dyadic
resolution level m admits every mode with lambda_k < 2**(m + 1).

Quadrature is composite midpoint with N_i nodes per axis, fixed
bit-exactly per release.  On midpoint nodes the discrete sine family is
exactly orthogonal for mode numbers up to N - 1, so analyze/synthesize
is an exact inverse pair on the admitted span.  N_i defaults to three
times the largest admitted mode number (never below 16), which also
integrates the quartic products generated by a cubic damping term
without aliasing.

Transforms are dense matrix applications; at dyadic level m the number
of admitted modes grows like 2**(m/2) per axis, so dense is adequate
well past the desk scales used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainSpec",
    "Mode",
    "SpectralBasis",
    "Field",
    "NormRecord",
    "build_basis",
    "synthesize",
    "analyze",
    "norms",
    "save_field",
    "load_field",
]

#: hard floor on quadrature nodes per axis
MIN_POINTS = 16

#: oversampling factor relating admitted mode numbers to grid nodes
OVERSAMPLING = 3


@dataclass(frozen=True)
class Mode:
    """One eigenpair: multi-index ``k`` and eigenvalue ``sum (k_i pi / L_i)^2``."""

    index: tuple[int, ...]
    eigenvalue: float


def _eigenvalue(index: tuple[int, ...], lengths: tuple[float, ...]) -> float:
    return sum((k * math.pi / L) ** 2 for k, L in zip(index, lengths))


def _admitted_modes(dimension: int, lengths: tuple[float, ...], level: int) -> list[Mode]:
    """Enumerate all modes with eigenvalue below 2**(level+1), sorted by
    eigenvalue with lexicographic tie-break on the multi-index."""
    if dimension not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {dimension}")
    cap = 2.0 ** (level + 1)
    # per-axis bound: (k pi / L)^2 < cap already for the lone axis
    kmax = [int(math.floor(math.sqrt(cap) * L / math.pi)) + 1 for L in lengths]
    modes = []
    if dimension == 1:
        candidates = ((k,) for k in range(1, kmax[0] + 1))
    else:
        candidates = (
            (k1, k2)
            for k1 in range(1, kmax[0] + 1)
            for k2 in range(1, kmax[1] + 1)
        )
    for idx in candidates:
        lam = _eigenvalue(idx, lengths)
        if lam < cap:
            modes.append(Mode(idx, lam))
    modes.sort(key=lambda m: (m.eigenvalue, m.index))
    return modes


@dataclass(frozen=True)
class DomainSpec:
    """Geometry plus quadrature resolution and dyadic level.

    Invariants (checked at construction): dimension in {1, 2}, positive
    edge lengths, at least MIN_POINTS quadrature nodes per axis, at
    least one admitted mode, and every admitted mode number k_i at most
    points_i / OVERSAMPLING.
    """

    dimension: int
    lengths: tuple[float, ...]
    points: tuple[int, ...]
    level: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        object.__setattr__(self, "points", tuple(int(N) for N in self.points))
        if len(self.lengths) != self.dimension or len(self.points) != self.dimension:
            raise ValueError("lengths/points must have one entry per dimension")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("edge lengths must be positive")
        if any(N < MIN_POINTS for N in self.points):
            raise ValueError(f"need at least {MIN_POINTS} quadrature points per axis")
        if self.level < 0:
            raise ValueError("dyadic level must be non-negative")
        modes = _admitted_modes(self.dimension, self.lengths, self.level)
        if not modes:
            raise ValueError(
                f"empty basis: 2^{self.level + 1} = {2.0 ** (self.level + 1):g} "
                f"does not exceed the smallest eigenvalue"
            )
        for axis in range(self.dimension):
            kmax = max(m.index[axis] for m in modes)
            if kmax > self.points[axis] / OVERSAMPLING:
                raise ValueError(
                    f"under-resolved axis {axis}: mode number {kmax} exceeds "
                    f"points/{OVERSAMPLING} = {self.points[axis] / OVERSAMPLING:g}"
                )

    @classmethod
    def for_level(cls, dimension: int, lengths, level: int) -> "DomainSpec":
        """Domain with the default quadrature rule for the given level:
        OVERSAMPLING x (largest admitted mode number), at least MIN_POINTS."""
        lengths = tuple(float(L) for L in np.atleast_1d(lengths))
        modes = _admitted_modes(dimension, lengths, level)
        if not modes:
            raise ValueError(
                f"empty basis: no eigenvalue below 2^{level + 1} on this domain"
            )
        points = tuple(
            max(MIN_POINTS, OVERSAMPLING * max(m.index[axis] for m in modes))
            for axis in range(dimension)
        )
        return cls(dimension, lengths, points, level)

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)


class SpectralBasis:
    """Ordered admitted eigenpairs with dense transforms on the midpoint grid.

    Immutable after construction; the synthesis matrix is precomputed.
    """

    def __init__(self, domain: DomainSpec):
        self.domain = domain
        self.modes = tuple(_admitted_modes(domain.dimension, domain.lengths, domain.level))
        self.eigenvalues = np.array([m.eigenvalue for m in self.modes])
        self.axis_nodes = tuple(
            (np.arange(N) + 0.5) * (L / N)
            for N, L in zip(domain.points, domain.lengths)
        )
        # uniform midpoint weight, product over axes
        self.weight = math.prod(L / N for N, L in zip(domain.points, domain.lengths))
        self.grid_shape = domain.points
        self._matrix = self._synthesis_matrix()
        self._grad_matrices = None
        self.eigenvalues.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def grid_size(self) -> int:
        return int(np.prod(self.grid_shape))

    def grid_points(self) -> np.ndarray:
        """Flattened quadrature nodes, shape (grid_size, dimension)."""
        if self.domain.dimension == 1:
            return self.axis_nodes[0][:, None]
        X1, X2 = np.meshgrid(*self.axis_nodes, indexing="ij")
        return np.stack([X1.ravel(), X2.ravel()], axis=1)

    def _axis_factor(self, axis: int, k: int, x: np.ndarray) -> np.ndarray:
        L = self.domain.lengths[axis]
        return math.sqrt(2.0 / L) * np.sin(k * math.pi * x / L)

    def _synthesis_matrix(self) -> np.ndarray:
        pts = self.grid_points()
        mat = np.empty((self.size, self.grid_size))
        for n, mode in enumerate(self.modes):
            w = np.ones(self.grid_size)
            for axis, k in enumerate(mode.index):
                w *= self._axis_factor(axis, k, pts[:, axis])
            mat[n] = w
        mat.setflags(write=False)
        return mat

    def _gradient_matrices(self) -> tuple[np.ndarray, ...]:
        if self._grad_matrices is None:
            pts = self.grid_points()
            mats = []
            for axis in range(self.domain.dimension):
                L = self.domain.lengths[axis]
                mat = np.empty((self.size, self.grid_size))
                for n, mode in enumerate(self.modes):
                    w = np.ones(self.grid_size)
                    for ax, k in enumerate(mode.index):
                        x = pts[:, ax]
                        if ax == axis:
                            w *= math.sqrt(2.0 / L) * (k * math.pi / L) * np.cos(
                                k * math.pi * x / L
                            )
                        else:
                            w *= self._axis_factor(ax, k, x)
                    mat[n] = w
                mat.setflags(write=False)
                mats.append(mat)
            self._grad_matrices = tuple(mats)
        return self._grad_matrices

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.size,):
            raise ValueError(f"expected {self.size} coefficients, got {coeffs.shape}")
        return coeffs @ self._matrix

    def synthesize_gradient(self, coeffs: np.ndarray) -> np.ndarray:
        """Grid samples of the gradient, shape (grid_size, dimension)."""
        coeffs = np.asarray(coeffs, dtype=float)
        mats = self._gradient_matrices()
        return np.stack([coeffs @ mat for mat in mats], axis=1)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.grid_size,):
            raise ValueError(
                f"expected {self.grid_size} grid samples, got {values.shape}"
            )
        return self._matrix @ (values * self.weight)

    def integrate(self, values: np.ndarray) -> float:
        """Midpoint quadrature of grid samples."""
        return float(np.sum(values) * self.weight)

    def evaluate(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate the expansion at arbitrary points (off-grid synthesis)."""
        coeffs = np.asarray(coeffs, dtype=float)
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        out = np.zeros(points.shape[0])
        for c, mode in zip(coeffs, self.modes):
            if c == 0.0:
                continue
            w = np.ones(points.shape[0])
            for axis, k in enumerate(mode.index):
                w *= self._axis_factor(axis, k, points[:, axis])
            out += c * w
        return out

    def mode_position(self, index: tuple[int, ...]) -> int:
        for n, mode in enumerate(self.modes):
            if mode.index == tuple(index):
                return n
        raise KeyError(f"mode {index} not admitted at level {self.domain.level}")

    def unit_mode(self, index: tuple[int, ...]) -> "Field":
        """The basis function with the given multi-index, as a Field."""
        coeffs = np.zeros(self.size)
        coeffs[self.mode_position(index)] = 1.0
        return Field(self, coeffs)

    def field(self, coeffs) -> "Field":
        return Field(self, np.asarray(coeffs, dtype=float))


def build_basis(domain: DomainSpec) -> SpectralBasis:
    """All modes with eigenvalue below 2**(level+1), sorted by eigenvalue."""
    return SpectralBasis(domain)


class Field:
    """A function represented by eigen-coefficients, with lazily cached
    grid samples.  Immutable; arithmetic returns new Fields."""

    __slots__ = ("basis", "coeffs", "_samples")

    def __init__(self, basis: SpectralBasis, coeffs: np.ndarray):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (basis.size,):
            raise ValueError(f"expected {basis.size} coefficients, got {coeffs.shape}")
        coeffs.setflags(write=False)
        self.basis = basis
        self.coeffs = coeffs
        self._samples = None

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            s = self.basis.synthesize(self.coeffs)
            s.setflags(write=False)
            self._samples = s
        return self._samples

    @property
    def l2(self) -> float:
        """L2 norm via Parseval."""
        return float(np.sqrt(np.dot(self.coeffs, self.coeffs)))

    @property
    def h1(self) -> float:
        """H1 seminorm (gradient L2 norm) via Parseval."""
        return float(np.sqrt(np.dot(self.basis.eigenvalues * self.coeffs, self.coeffs)))

    def lp(self, p: float) -> float:
        """L^p norm by grid quadrature."""
        return float(self.basis.integrate(np.abs(self.samples) ** p) ** (1.0 / p))

    def inner(self, other: "Field") -> float:
        self._check_same_basis(other)
        return float(np.dot(self.coeffs, other.coeffs))

    def with_coeffs(self, coeffs) -> "Field":
        return Field(self.basis, coeffs)

    def _check_same_basis(self, other: "Field"):
        if other.basis is not self.basis and other.basis.domain != self.basis.domain:
            raise ValueError("fields live on different bases")

    def __add__(self, other: "Field") -> "Field":
        self._check_same_basis(other)
        return Field(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "Field") -> "Field":
        self._check_same_basis(other)
        return Field(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.basis, -self.coeffs)

    def __repr__(self):
        d = self.basis.domain
        return f"Field(d={d.dimension}, level={d.level}, modes={self.basis.size})"


def synthesize(fld: Field) -> np.ndarray:
    """Grid samples of a field (midpoint nodes, flattened C-order)."""
    return fld.samples


def analyze(samples: np.ndarray, basis: SpectralBasis) -> Field:
    """Project grid samples onto the admitted span.

    analyze(synthesize(u)) is the identity on the span to rounding, as
    the midpoint rule integrates products of admitted sines exactly.
    """
    return Field(basis, basis.analyze(samples))


@dataclass(frozen=True)
class NormRecord:
    l2: float
    h1_seminorm: float
    lp: float
    l2p_minus_2: float


def norms(fld: Field, p: float) -> NormRecord:
    """L2 and H1 via Parseval; L^p and L^{2p-2} by grid quadrature."""
    if p < 2:
        raise ValueError(f"exponent p must be >= 2, got {p}")
    return NormRecord(
        l2=fld.l2,
        h1_seminorm=fld.h1,
        lp=fld.lp(p),
        l2p_minus_2=fld.lp(2 * p - 2),
    )


# ---------------------------------------------------------------------------
# Snapshot file format
#
#   # basis=sine d=<d> L=<L1[,L2]> m=<level> [t=<time>] [config=<hash>]
#   k_1[,k_2],lambda,coefficient
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_field(fld: Field, path, extra: dict | None = None) -> None:
    d = fld.basis.domain
    tokens = [
        "basis=sine",
        f"d={d.dimension}",
        "L=" + ",".join(_fmt(L) for L in d.lengths),
        f"m={d.level}",
    ]
    for key, val in (extra or {}).items():
        tokens.append(f"{key}={val if isinstance(val, str) else _fmt(val)}")
    lines = ["# " + " ".join(tokens)]
    for mode, c in zip(fld.basis.modes, fld.coeffs):
        ks = ",".join(str(k) for k in mode.index)
        lines.append(f"{ks},{_fmt(mode.eigenvalue)},{_fmt(c)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> tuple[Field, dict]:
    """Read a snapshot back; returns the field and the header tokens."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing snapshot header")
    header: dict[str, str] = {}
    for tok in lines[0].lstrip("# ").split():
        key, _, val = tok.partition("=")
        header[key] = val
    if header.get("basis") != "sine":
        raise ValueError(f"{path}: unsupported basis {header.get('basis')!r}")
    dim = int(header["d"])
    lengths = tuple(float(x) for x in header["L"].split(","))
    level = int(header["m"])
    basis = build_basis(DomainSpec.for_level(dim, lengths, level))
    coeffs = np.zeros(basis.size)
    for ln in lines[1:]:
        parts = ln.split(",")
        index = tuple(int(x) for x in parts[:dim])
        coeffs[basis.mode_position(index)] = float(parts[dim + 1])
    return Field(basis, coeffs), header
