"""Operators of the sphere-constrained damped heat flow.

The flow dissipates the energy

    E(u) = 1/2 ||grad u||^2 + 1/p ||u||_p^p

on the unit L2 sphere.  This module provides the pointwise damping
nonlinearity |u|^{p-2} u, the tangent projection at a base point, the
energy and the multiplier functional S(u) = ||grad u||^2 + ||u||_p^p,
the full right-hand side

    G(u) = Lap u - |u|^{p-2} u + S(u) u,

and the two dyadic truncations used by the Galerkin scheme: the sharp
projection onto eigenvalues below 2^{level+1} and its smoothed
self-adjoint counterpart whose symbol ramps from 1 to 0 across
[2^level, 2^{level+1}] with a quintic smoothstep (C^2 transition).

All operations are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Field

__all__ = [
    "CutoffSpec",
    "OperatorParams",
    "quintic_smoothstep",
    "cutoff_symbol",
    "dyadic_project",
    "smooth_project",
    "power_law",
    "nonlinearity",
    "tangent_project",
    "energy",
    "multiplier_functional",
    "grad_energy",
    "tangent_gradient",
    "constrained_rhs",
]


def quintic_smoothstep(s):
    """6 s^5 - 15 s^4 + 10 s^3: ramps 0 -> 1 on [0, 1] with vanishing
    first and second derivatives at both ends."""
    s = np.asarray(s, dtype=float)
    return ((6.0 * s - 15.0) * s + 10.0) * s ** 3


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth transition chi: identically 1 on (0, 1], quintic ramp down
    on (1, 2), identically 0 on [2, inf).

    The difference rho(g) = chi(g) - chi(2g) is supported in [1/2, 2]
    and its dyadic shifts telescope to a partition of unity on (0, inf):
    sum_n rho(2^-n g) = lim chi(2^-N g) - lim chi(2^N g) = 1.
    """

    def chi(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        out = np.where(gamma <= 1.0, 1.0, 0.0)
        band = (gamma > 1.0) & (gamma < 2.0)
        if np.any(band):
            out = np.where(band, 1.0 - quintic_smoothstep(gamma - 1.0), out)
        return out if out.ndim else float(out)

    def rho(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        out = self.chi(gamma) - self.chi(2.0 * gamma)
        return out if np.ndim(out) else float(out)

    def partition_sum(self, gamma, n_lo: int = -20, n_hi: int = 20):
        """sum_{n=n_lo}^{n_hi} rho(2^-n gamma); equals 1 on the covered range."""
        gamma = np.asarray(gamma, dtype=float)
        total = np.zeros_like(gamma, dtype=float)
        for n in range(n_lo, n_hi + 1):
            total = total + self.rho(gamma * 2.0 ** (-n))
        return total if total.ndim else float(total)


DEFAULT_CUTOFF = CutoffSpec()


@dataclass(frozen=True)
class OperatorParams:
    """Damping exponent and constraint radius (unit sphere unless the
    general-radius option is explicitly enabled)."""

    p: float
    constraint_radius: float = 1.0
    general_radius: bool = False

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"exponent p must be >= 2, got {self.p}")
        if not self.general_radius and self.constraint_radius != 1.0:
            raise ValueError("constraint_radius != 1 requires general_radius=True")
        if self.constraint_radius <= 0:
            raise ValueError("constraint radius must be positive")


def cutoff_symbol(gamma: float, level: int, cutoff: CutoffSpec = DEFAULT_CUTOFF):
    """Smoothed dyadic symbol chi(gamma / 2^level): 1 for gamma <= 2^level,
    0 for gamma >= 2^{level+1}, strictly between on the band."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0.0):
        raise ValueError("cutoff symbol requires gamma > 0")
    return cutoff.chi(gamma / 2.0 ** level)


def dyadic_project(fld: Field, level: int) -> Field:
    """Sharp spectral cutoff: zero every coefficient with eigenvalue at or
    above 2^{level+1}.  Idempotent and self-adjoint."""
    keep = fld.basis.eigenvalues < 2.0 ** (level + 1)
    return fld.with_coeffs(np.where(keep, fld.coeffs, 0.0))


def smooth_project(fld: Field, level: int, cutoff: CutoffSpec = DEFAULT_CUTOFF) -> Field:
    """Smoothed counterpart of the sharp cutoff: multiply each coefficient
    by the dyadic symbol at its eigenvalue.  Self-adjoint, contraction on
    L2, range inside the sharp cutoff's range."""
    sym = cutoff_symbol(fld.basis.eigenvalues, level, cutoff)
    return fld.with_coeffs(sym * fld.coeffs)


def power_law(values: np.ndarray, p: float) -> np.ndarray:
    """Pointwise |v|^{p-2} v, evaluated as sign(v) |v|^{p-1} so the
    exponent stays >= 1 and 0 maps to 0 for every admissible p."""
    if p < 2:
        raise ValueError(f"exponent p must be >= 2, got {p}")
    values = np.asarray(values, dtype=float)
    if p == 2:
        return values
    return np.sign(values) * np.abs(values) ** (p - 1.0)


def nonlinearity(fld: Field, p: float) -> Field:
    """|u|^{p-2} u computed pointwise on the quadrature grid and
    re-analyzed into coefficients.  For p = 2 this is exactly u."""
    if p < 2:
        raise ValueError(f"exponent p must be >= 2, got {p}")
    if p == 2:
        return fld
    return fld.with_coeffs(fld.basis.analyze(power_law(fld.samples, p)))


def tangent_project(base: Field, z: Field, general_radius: bool = False) -> Field:
    """Orthogonal projection of z onto the tangent space of the sphere at
    base: z - (base, z) base.  With general_radius the inner product is
    divided by ||base||^2, which projects at any radius."""
    base._check_same_basis(z)
    nsq = float(np.dot(base.coeffs, base.coeffs))
    if nsq < 1e-16:
        raise ValueError("degenerate base point: ||base|| < 1e-8")
    inner = float(np.dot(base.coeffs, z.coeffs))
    if general_radius:
        return z.with_coeffs(z.coeffs - (inner / nsq) * base.coeffs)
    if abs(math.sqrt(nsq) - 1.0) > 1e-6:
        raise ValueError(
            f"base point is off the unit sphere (||base|| = {math.sqrt(nsq):.8f}); "
            "pass general_radius=True to project at other radii"
        )
    return z.with_coeffs(z.coeffs - inner * base.coeffs)


def _lp_p(fld: Field, p: float) -> float:
    """||u||_p^p with the p = 2 case taken from coefficients (exact)."""
    if p == 2:
        return float(np.dot(fld.coeffs, fld.coeffs))
    return fld.basis.integrate(np.abs(fld.samples) ** p)


def energy(fld: Field, p: float) -> float:
    """E(u) = 1/2 ||grad u||^2 + 1/p ||u||_p^p."""
    if p < 2:
        raise ValueError(f"exponent p must be >= 2, got {p}")
    h1sq = float(np.dot(fld.basis.eigenvalues * fld.coeffs, fld.coeffs))
    return 0.5 * h1sq + _lp_p(fld, p) / p


def multiplier_functional(fld: Field, p: float) -> float:
    """S(u) = ||grad u||^2 + ||u||_p^p; equals the Lagrange multiplier of
    the constrained minimization at a stationary point, and (grad E(u), u)
    on the sphere."""
    if p < 2:
        raise ValueError(f"exponent p must be >= 2, got {p}")
    h1sq = float(np.dot(fld.basis.eigenvalues * fld.coeffs, fld.coeffs))
    return h1sq + _lp_p(fld, p)


def grad_energy(fld: Field, p: float) -> Field:
    """Unconstrained energy gradient -Lap u + |u|^{p-2} u, with the
    Laplacian applied diagonally (a_n -> lambda_n a_n)."""
    nl = nonlinearity(fld, p)
    return fld.with_coeffs(fld.basis.eigenvalues * fld.coeffs + nl.coeffs)


def tangent_gradient(fld: Field, p: float) -> Field:
    """Tangent (sphere) gradient: the energy gradient projected onto the
    tangent space at u.  Requires u on the unit sphere to 1e-6."""
    return tangent_project(fld, grad_energy(fld, p))


def constrained_rhs(fld: Field, p: float, stabilized: bool = False) -> Field:
    """Full right-hand side G(u) = Lap u - |u|^{p-2} u + S(u) u.

    Equal to minus the tangent gradient on the unit sphere, and
    L2-orthogonal to u there.  With stabilized=True the multiplier is
    divided by ||u||^2, which makes the field tangent to the sphere of
    radius ||u|| for every u != 0; both forms coincide on the unit
    sphere.
    """
    if p < 2:
        raise ValueError(f"exponent p must be >= 2, got {p}")
    lam = fld.basis.eigenvalues
    nl = nonlinearity(fld, p)
    mult = multiplier_functional(fld, p)
    if stabilized:
        nsq = float(np.dot(fld.coeffs, fld.coeffs))
        if nsq < 1e-16:
            raise ValueError("degenerate base point: ||u|| < 1e-8")
        mult /= nsq
    return fld.with_coeffs(-lam * fld.coeffs - nl.coeffs + mult * fld.coeffs)
