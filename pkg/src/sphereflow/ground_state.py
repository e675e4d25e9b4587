"""Stationary solvers and cross-validation of the positive ground state.

Two independent routes to the unit-mass minimizer of the energy:

* solve_by_flow integrates the constrained flow until the tangent
  gradient is below tolerance (normalized gradient descent);
* lambda_search fixes the multiplier, solves the unconstrained elliptic
  problem u'' + lam u = u^{p-1} by the monotone sub/super-solution
  iteration, and shoots on lam until the profile has unit mass.

For p = 2 the problem is linear, the nonlinear term collapses, and the
ground state is the first eigenfunction; the monotone iteration is
vacuous there, so that case dispatches to the closed form.

The monotone iteration starts from the smallest constant super-solution
of f(u) = lam u - u^{p-1} (the constant must satisfy f(c) <= 0, i.e.
c >= lam^{1/(p-2)}) and each step solves (-Lap + k) u_next = f(u) + k u
spectrally with k = sup f' over [0, c].  Iterates decrease pointwise
and stay above the small sub-solution eps*w1 with
eps^{p-2} max(w1)^{p-2} <= lam - lambda_1 (halved for margin).

A constant is not representable in the Dirichlet sine span, so the
first two truncated iterates absorb its boundary layer with Gibbs
ripples of order 1/K^2; from the third transition on the iteration is
pointwise non-increasing to rounding, and the ordering guard is
enforced there.

Solvers are sequential; bisection evaluations at distinct multipliers
are independent and may run concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .domain import Field, SpectralBasis, save_field
from .flow import FlowConfig, run_flow
from .operators import constrained_rhs, energy, multiplier_functional

__all__ = [
    "GroundStateError",
    "GroundStateResult",
    "CrossValidationReport",
    "stationary_residual",
    "linear_ground_state",
    "solve_by_flow",
    "sub_super_solve",
    "lambda_search",
    "cross_validate",
    "save_result",
]


class GroundStateError(RuntimeError):
    pass


@dataclass
class GroundStateResult:
    profile: Field
    multiplier: float
    residual: float
    energy: float
    iterations: int
    method: str
    p: float

    def __post_init__(self):
        assert abs(self.profile.l2 - 1.0) <= 1e-8, "profile must have unit mass"


def stationary_residual(profile: Field, p: float) -> float:
    """L2 norm of Lap u - |u|^{p-2}u + S(u) u; zero at any stationary
    point of the constrained flow (ground or excited)."""
    r = constrained_rhs(profile, p)
    return r.l2


def linear_ground_state(basis: SpectralBasis) -> GroundStateResult:
    """Closed form for p = 2: the first eigenfunction, multiplier
    lambda_1 + 1."""
    u = basis.unit_mode(basis.modes[0].index)
    return GroundStateResult(
        profile=u,
        multiplier=multiplier_functional(u, 2.0),
        residual=stationary_residual(u, 2.0),
        energy=energy(u, 2.0),
        iterations=0,
        method="flow",
        p=2.0,
    )


def solve_by_flow(u0: Field, config: FlowConfig) -> GroundStateResult:
    """Run the constrained flow from a positive datum until the tangent
    gradient norm is below the stationarity tolerance."""
    if config.stationarity_tol <= 0:
        raise ValueError("solve_by_flow needs a positive stationarity tolerance")
    if float(u0.samples.min()) < -1e-10:
        raise ValueError("positive-branch solver requires a non-negative datum")
    result = run_flow(u0, config)
    if not result.stopped_early:
        last = math.sqrt(result.ledger.gradM_sq[-1])
        raise GroundStateError(
            f"flow did not reach stationarity within {config.steps} steps; "
            f"last ||grad_M E|| = {last:.3e}"
        )
    profile = result.final.field
    p = config.params.p
    return GroundStateResult(
        profile=profile,
        multiplier=multiplier_functional(profile, p),
        residual=stationary_residual(profile, p),
        energy=energy(profile, p),
        iterations=result.final.step_index,
        method="flow",
        p=p,
    )


def _monotone_iteration(lam: float, p: float, basis: SpectralBasis,
                        tol: float, max_iter: int, record: bool):
    lam1 = float(basis.eigenvalues[0])
    # smallest constant with f(c) = lam c - c^{p-1} <= 0; the lam^{1/(p-1)}
    # variant covers lam < 1 where the two orderings swap
    ubar = max(lam ** (1.0 / (p - 2.0)), lam ** (1.0 / (p - 1.0)))
    k = lam  # sup of f'(u) = lam - (p-1) u^{p-2} over [0, ubar]
    grid_tol = 1e-9 * max(1.0, ubar)

    w1 = basis.unit_mode(basis.modes[0].index)
    w1max = float(w1.samples.max())
    eps = 0.5 * (lam - lam1) ** (1.0 / (p - 2.0)) / w1max
    sub = eps * w1.samples

    u = np.full(basis.grid_size, ubar)
    history = [u.copy()] if record else None
    denom = basis.eigenvalues + k
    iterations = 0
    # the first two transitions absorb the constant datum's boundary
    # layer (Gibbs); the ordering guard starts once iterates are smooth
    guard_from = 3
    for iterations in range(1, max_iter + 1):
        g = lam * u - np.abs(u) ** (p - 2.0) * u + k * u
        coeffs = basis.analyze(g) / denom
        u_new = basis.synthesize(coeffs)
        if iterations >= guard_from and np.any(u_new > u + grid_tol):
            raise GroundStateError(
                "monotone iteration produced an increasing step; "
                "super-solution ordering violated"
            )
        if record:
            history.append(u_new.copy())
        delta = float(np.max(np.abs(u_new - u)))
        u = u_new
        if delta < tol:
            break
    else:
        raise GroundStateError(
            f"monotone iteration did not converge in {max_iter} steps"
        )
    if np.any(u < sub - grid_tol):
        raise GroundStateError("iterate fell below the sub-solution barrier")
    fld = Field(basis, coeffs)
    return (fld, iterations, history) if record else (fld, iterations)


def sub_super_solve(lam: float, p: float, basis: SpectralBasis,
                    tol: float = 1e-10, max_iter: int = 200_000,
                    record: bool = False):
    """Positive solution of u'' + lam u = u^{p-1} (zero boundary values)
    by monotone iteration from the constant super-solution.

    Requires p >= 3 and lam > lambda_1; below lambda_1 only the zero
    solution exists for this sign of the nonlinearity.
    """
    if p < 3:
        raise ValueError("sub/super iteration requires p >= 3 "
                         "(p = 2 dispatches to the eigenfunction)")
    lam1 = float(basis.eigenvalues[0])
    if lam <= lam1:
        raise ValueError(
            f"no positive solution in this regime (lam = {lam:g} <= "
            f"lambda_1 = {lam1:g})"
        )
    return _monotone_iteration(lam, p, basis, tol, max_iter, record)


def lambda_search(p: float, basis: SpectralBasis, mass_tol: float = 1e-8,
                  max_expansions: int = 20) -> GroundStateResult:
    """Bisection on the multiplier so the sub/super profile has unit mass.

    Returns the normalized profile with the multiplier recomputed as
    S(U), the Euler-Lagrange value of the normalized profile.
    """
    if p == 2:
        raise ValueError("linear case: the ground state is the first "
                         "eigenfunction, no shooting needed")
    if p < 3:
        raise ValueError("lambda shooting requires p >= 3")
    lam1 = float(basis.eigenvalues[0])

    def mass(lam: float) -> tuple[float, Field, int]:
        fld, iters = sub_super_solve(lam, p, basis)
        return fld.l2 ** 2, fld, iters

    lo = lam1 * (1.0 + 1e-9)
    hi = lam1 + 1.0
    total_iters = 0
    for _ in range(max_expansions):
        m_hi, fld, iters = mass(hi)
        total_iters += iters
        if m_hi >= 1.0:
            break
        hi = lam1 + 2.0 * (hi - lam1)
    else:
        raise GroundStateError(
            f"mass bracket not found after {max_expansions} expansions"
        )

    lam_mid, m_mid = hi, m_hi
    for _ in range(200):
        if abs(m_mid - 1.0) <= mass_tol:
            break
        lam_mid = 0.5 * (lo + hi)
        m_mid, fld, iters = mass(lam_mid)
        total_iters += iters
        if m_mid < 1.0:
            lo = lam_mid
        else:
            hi = lam_mid
    else:
        raise GroundStateError("mass bisection did not converge")

    profile = (1.0 / fld.l2) * fld
    return GroundStateResult(
        profile=profile,
        multiplier=multiplier_functional(profile, p),
        residual=stationary_residual(profile, p),
        energy=energy(profile, p),
        iterations=total_iters,
        method="sub_super",
        p=p,
    )


@dataclass
class CrossValidationReport:
    l2_diff: float
    multiplier_diff: float
    energy_diff: float
    tolerance: float
    passed: bool


def cross_validate(a: GroundStateResult, b: GroundStateResult,
                   tolerance: float = 1e-5) -> CrossValidationReport:
    """Compare two ground-state results; the uniqueness of the positive
    solution predicts agreement whatever the method."""
    if a.p != b.p:
        raise ValueError(f"exponent mismatch: {a.p} vs {b.p}")
    if a.profile.basis.domain != b.profile.basis.domain:
        raise ValueError("domain mismatch between results")
    l2 = (a.profile - b.profile).l2
    dlam = abs(a.multiplier - b.multiplier)
    de = abs(a.energy - b.energy)
    return CrossValidationReport(
        l2_diff=l2,
        multiplier_diff=dlam,
        energy_diff=de,
        tolerance=tolerance,
        passed=bool(l2 < tolerance and dlam < tolerance and de < tolerance),
    )


def save_result(result: GroundStateResult, field_path, json_path,
                extra: dict | None = None) -> None:
    """Field snapshot plus the JSON sidecar."""
    save_field(result.profile, field_path, extra=extra)
    sidecar = {
        "lambda": result.multiplier,
        "energy": result.energy,
        "residual": result.residual,
        "method": result.method,
        "iterations": result.iterations,
    }
    if extra:
        sidecar.update(extra)
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
