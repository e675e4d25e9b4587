"""Randomized verification of the operator inequalities and identities.

Each check evaluates one inequality with the explicit constants from
the analysis and an additive tolerance (default 1e-9) absorbing
rounding; margins are reported so failures can be replayed by seed.
Pointwise inequalities (nonlinearity monotonicity) are computed on the
quadrature grid where positive weights preserve them exactly; the
integration-by-parts identities are exact for even integer p on the
oversampled grid and quadrature-limited otherwise.

Checks are pure functions of seeded inputs, safe to parallelize across
cases; the bundled runner is sequential (the full suite takes well
under a minute).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .domain import Field, SpectralBasis, norms
from .operators import (
    constrained_rhs,
    dyadic_project,
    energy,
    grad_energy,
    multiplier_functional,
    power_law,
    smooth_project,
)

__all__ = [
    "FieldSampler",
    "CheckResult",
    "SuiteReport",
    "check_monotone_nonlinearity",
    "check_local_monotone_G",
    "check_lipschitz_chain",
    "hemicontinuity_probe",
    "check_projection_algebra",
    "positivity_check",
    "gradient_consistency",
    "run_property_suite",
]

DEFAULT_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    margins: dict
    skipped: bool = False

    def worst(self) -> float:
        return min(self.margins.values()) if self.margins else float("inf")


class FieldSampler:
    """Seeded random fields with coefficients sigma * g_n / n^2
    (g_n standard normal, n the 1-based mode ordinal), optionally
    rescaled into the ball of radius R in the max(H1, L^{2p-2}) proxy
    norm used for the Lipschitz and monotonicity hypotheses."""

    def __init__(self, basis: SpectralBasis, seed: int, sigma: float = 0.4):
        self.basis = basis
        self.sigma = sigma
        self.rng = np.random.default_rng(seed)
        self._ordinals = np.arange(1, basis.size + 1, dtype=float)

    def sample(self) -> Field:
        g = self.rng.standard_normal(self.basis.size)
        return Field(self.basis, self.sigma * g / self._ordinals ** 2)

    @staticmethod
    def proxy_norm(fld: Field, p: float) -> float:
        n = norms(fld, p)
        return max(n.h1_seminorm, n.l2p_minus_2)

    def sample_capped(self, radius: float, p: float) -> Field:
        fld = self.sample()
        proxy = self.proxy_norm(fld, p)
        if proxy > radius:
            fld = (radius / proxy) * fld
        return fld

    def sample_unit(self) -> Field:
        fld = self.sample()
        return (1.0 / fld.l2) * fld


def _quad(basis: SpectralBasis, values: np.ndarray) -> float:
    return basis.integrate(values)


def check_monotone_nonlinearity(u: Field, v: Field, p: float,
                                tol: float = DEFAULT_TOL) -> CheckResult:
    """<N(u) - N(v), u - v> against the half-sum lower bound and the
    2^{-(p-2)} ||u-v||_p^p lower bound."""
    basis = u.basis
    us, vs = u.samples, v.samples
    du = us - vs
    lhs = _quad(basis, (power_law(us, p) - power_law(vs, p)) * du)
    half_sum = 0.5 * _quad(basis, (np.abs(us) ** (p - 2.0)
                                   + np.abs(vs) ** (p - 2.0)) * du ** 2)
    lp_bound = 2.0 ** (2.0 - p) * _quad(basis, np.abs(du) ** p)
    margins = {
        "half_sum": lhs - half_sum,
        "lp_power": lhs - lp_bound,
        "nonnegative": lhs,
    }
    return CheckResult("monotone_nonlinearity",
                       all(m >= -tol for m in margins.values()), margins)


def local_monotone_constant(p: float, volume: float) -> float:
    """C(p, |O|) = p^2 2^{2p-4} |O|^{1/p} from the multiplier-term estimate."""
    return p ** 2 * 2.0 ** (2.0 * p - 4.0) * volume ** (1.0 / p)


def check_local_monotone_G(u: Field, v: Field, p: float,
                           tol: float = DEFAULT_TOL) -> CheckResult:
    """Full local monotonicity of G with the explicit bracket, plus plain
    monotonicity of G without the multiplier terms."""
    basis = u.basis
    du = u - v
    du_l2sq = float(np.dot(du.coeffs, du.coeffs))
    grad_dusq = float(np.dot(basis.eigenvalues * du.coeffs, du.coeffs))
    mono = _quad(basis, (power_law(u.samples, p) - power_law(v.samples, p))
                 * (u.samples - v.samples))
    su, sv = multiplier_functional(u, p), multiplier_functional(v, p)
    proj = su * du.inner(u) - sv * du.inner(v)
    lhs = -grad_dusq - mono + proj

    nu, nv = norms(u, p), norms(v, p)
    bracket = (nu.h1_seminorm ** 2
               + 0.5 * (nu.h1_seminorm + nv.h1_seminorm) ** 2 * nv.l2 ** 2
               + nu.lp ** p
               + local_monotone_constant(p, basis.domain.volume)
               * (nu.lp ** (p - 1.0) + nv.lp ** (p - 1.0)) * nv.l2 ** 2)
    margins = {
        "bracket": bracket * du_l2sq - lhs,
        "plain_monotone": -(-grad_dusq - mono),
    }
    return CheckResult("local_monotone_G",
                       all(m >= -tol for m in margins.values()), margins)


def check_lipschitz_chain(u: Field, v: Field, p: float,
                          tol: float = DEFAULT_TOL) -> CheckResult:
    """The three Lipschitz-on-balls chains for the non-Laplacian part,
    with the constants recomputed from the actual norms (so rescaling
    the ball radius never invalidates the bound)."""
    basis = u.basis
    nu, nv = norms(u, p), norms(v, p)
    ndiff = norms(u - v, p)
    lam1 = float(basis.eigenvalues[0])

    # damping term, L^{2p-2} route
    f1 = np.sqrt(_quad(basis, (power_law(u.samples, p)
                               - power_law(v.samples, p)) ** 2))
    f1_bound = ((p - 1.0) * ndiff.l2p_minus_2
                * (nu.l2p_minus_2 + nv.l2p_minus_2) ** (p - 2.0))

    # gradient-multiplier term, H1 route with the Poincare constant
    f2 = (nu.h1_seminorm ** 2 * u - nv.h1_seminorm ** 2 * v).l2
    f2_bound = ((nu.h1_seminorm ** 2 / np.sqrt(lam1)
                 + (nu.h1_seminorm + nv.h1_seminorm) * nv.l2)
                * ndiff.h1_seminorm)

    # L^p-multiplier term
    f3 = (nu.lp ** p * u - nv.lp ** p * v).l2
    f3_bound = (nu.lp ** p * ndiff.l2
                + p * ndiff.lp * (nu.lp + nv.lp) ** (p - 1.0) * nv.l2)

    margins = {
        "F1": f1_bound - f1,
        "F2": f2_bound - f2,
        "F3": f3_bound - f3,
    }
    return CheckResult("lipschitz_chain",
                       all(m >= -tol for m in margins.values()), margins)


def hemicontinuity_probe(psi: Field, zeta: Field, eta: Field, p: float,
                         j_max: int = 12) -> list[tuple[float, float]]:
    """|<G(psi + lam zeta) - G(psi), eta>| at lam = 2^-j, j = 0..j_max.

    Along a differentiable direction the table decays to zero with
    consecutive ratio tending to 1/2 (first-order in lam)."""
    base = constrained_rhs(psi, p)
    table = []
    for j in range(j_max + 1):
        lam = 2.0 ** (-j)
        shifted = constrained_rhs(psi + lam * zeta, p)
        table.append((lam, abs((shifted - base).inner(eta))))
    return table


def probe_terminal_ratio(table: list[tuple[float, float]]) -> float:
    return table[-1][1] / table[-2][1]


def probe_decays(table: list[tuple[float, float]], from_index: int = 1) -> bool:
    vals = [v for _, v in table[from_index:]]
    return all(b < a for a, b in zip(vals, vals[1:]))


def check_projection_algebra(basis: SpectralBasis, level: int, seed: int,
                             cases: int = 100,
                             tol: float = DEFAULT_TOL) -> CheckResult:
    """Projection/smoothing algebra on random fields.

    Verified: idempotence of the sharp cutoff; self-adjointness of both
    operators with L2 norm at most (and exactly) one; commutation;
    finite ranges; the range inclusions R(S_{m-1}) in R(P_m) in R(S_m)
    through the identities P_m S_{m-1} = S_{m-1}, S_m P_{m-1} = P_{m-1},
    S_m P_m = P_m S_m = S_m and symbol-division reconstruction; and
    decay of ||P_m v - v||, ||S_m v - v|| in m for a fixed smooth v.
    """
    if level < 4:
        raise ValueError("projection algebra checks need level >= 4")
    sampler = FieldSampler(basis, seed)
    worst = float("inf")
    sup_ratio = 0.0

    def upd(x):
        nonlocal worst
        worst = min(worst, -x)

    for _ in range(cases):
        u = sampler.sample()
        v = sampler.sample()
        pu = dyadic_project(u, level)
        su = smooth_project(u, level)
        # idempotence and self-adjointness
        upd((dyadic_project(pu, level) - pu).l2)
        upd(abs(pu.inner(v) - u.inner(dyadic_project(v, level))))
        upd(abs(su.inner(v) - u.inner(smooth_project(v, level))))
        # contraction in L2
        upd(pu.l2 - u.l2)
        upd(su.l2 - u.l2)
        if u.l2 > 0:
            sup_ratio = max(sup_ratio, su.l2 / u.l2)
        # commutation at mixed levels
        for n in (level - 1, level, level + 1):
            upd((smooth_project(dyadic_project(u, level), n)
                 - dyadic_project(smooth_project(u, n), level)).l2)
        # finite range: nothing survives past the cutoff
        high = basis.eigenvalues >= 2.0 ** (level + 1)
        upd(float(np.max(np.abs(pu.coeffs[high]), initial=0.0)))
        upd(float(np.max(np.abs(su.coeffs[high]), initial=0.0)))
        # range inclusions via the level-consistent identities
        sm1 = smooth_project(u, level - 1)
        upd((dyadic_project(sm1, level) - sm1).l2)
        pm1 = dyadic_project(u, level - 1)
        upd((smooth_project(pm1, level) - pm1).l2)
        upd((smooth_project(pu, level) - su).l2)
        upd((dyadic_project(su, level) - su).l2)
        # R(P_m) inside R(S_m): reconstruct the preimage by symbol division
        # (the symbol is strictly positive on every admitted mode)
        admitted = basis.eigenvalues < 2.0 ** (level + 1)
        sym = _symbols(basis, level)
        pre = u.with_coeffs(np.where(admitted, pu.coeffs / np.where(admitted, sym, 1.0), 0.0))
        upd((smooth_project(pre, level) - pu).l2)

    # the L2 operator norm is exactly one: attained on the first mode,
    # whose symbol sits on the plateau for every level >= 4
    w1 = Field(basis, np.eye(basis.size)[0])
    attained = abs(smooth_project(w1, level).l2 - 1.0)
    upd(attained)

    # pointwise convergence on a fixed smooth field
    smooth = Field(basis, 1.0 / np.arange(1, basis.size + 1, dtype=float) ** 3)
    p_errs = [(smooth - dyadic_project(smooth, n)).l2 for n in range(4, level + 1)]
    s_errs = [(smooth - smooth_project(smooth, n)).l2 for n in range(4, level + 1)]
    decreasing = all(b <= a + tol for a, b in zip(p_errs, p_errs[1:]))
    decreasing &= all(b <= a + tol for a, b in zip(s_errs, s_errs[1:]))

    margins = {"identities": worst, "convergence": 1.0 if decreasing else -1.0}
    passed = worst >= -tol and decreasing and sup_ratio <= 1.0 + tol
    return CheckResult("projection_algebra", passed, margins)


def _symbols(basis: SpectralBasis, level: int) -> np.ndarray:
    from .operators import cutoff_symbol
    return np.asarray(cutoff_symbol(basis.eigenvalues, level))


def positivity_check(trajectory: list, tol: float = 1e-10) -> CheckResult:
    """Min grid sample over all logged fields; skipped when the initial
    datum is sign-changing (the hypothesis of the maximum principle)."""
    t0, u0 = trajectory[0]
    if float(u0.samples.min()) < -tol:
        return CheckResult("positivity", True, {}, skipped=True)
    worst = min(float(u.samples.min()) for _, u in trajectory)
    return CheckResult("positivity", worst >= -tol, {"min_value": worst + tol})


def empirical_smoothing_lp_bound(basis: SpectralBasis, level: int, p: float,
                                 seed: int = 0, cases: int = 200) -> float:
    """Largest sampled ratio ||S_level u||_p / ||u||_p over random fields.

    The uniform L^p bound for the smoothed cutoff is qualitative; this
    reports the observed constant without asserting one.
    """
    sampler = FieldSampler(basis, seed)
    worst = 0.0
    for _ in range(cases):
        u = sampler.sample()
        denom = u.lp(p)
        if denom > 0:
            worst = max(worst, smooth_project(u, level).lp(p) / denom)
    return worst


def gradient_consistency(u: Field, w: Field, p: float, h: float) -> float:
    """Relative gap between the centered energy difference and the
    spectral gradient pairing; decays like h^2."""
    e_plus = energy(u + h * w, p)
    e_minus = energy(u - h * w, p)
    fd = (e_plus - e_minus) / (2.0 * h)
    pairing = grad_energy(u, p).inner(w)
    scale = max(abs(pairing), 1.0)
    return abs(fd - pairing) / scale


# ---------------------------------------------------------------------------
# Suite runner
# ---------------------------------------------------------------------------


@dataclass
class SuiteReport:
    cases: list = dataclass_field(default_factory=list)
    runtime: float = 0.0
    lp_bound: float | None = None

    def record(self, case_id: str, seed: int, result: CheckResult):
        self.cases.append({
            "id": case_id,
            "seed": seed,
            "margins": result.margins,
            "passed": bool(result.passed),
            "skipped": bool(result.skipped),
        })

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.cases)

    @property
    def failures(self) -> int:
        return sum(not c["passed"] for c in self.cases)

    def to_json(self, path=None) -> str:
        payload = {
            "passed": self.passed,
            "failures": self.failures,
            "n_cases": len(self.cases),
            "runtime_s": self.runtime,
            "observed_smoothing_lp_bound": self.lp_bound,
            "cases": self.cases,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def run_property_suite(basis: SpectralBasis, seed: int = 0,
                       cases_per_check: int = 500,
                       tol: float = DEFAULT_TOL,
                       p_values=(2.0, 2.5, 3.0, 4.0, 6.0),
                       quadrature_exact_p: float = 4.0) -> SuiteReport:
    """Run every inequality with fresh seeded fields.

    The pointwise monotonicity checks sweep all exponents; the
    integration-by-parts identities run at an even integer exponent
    where the oversampled midpoint rule is exact, so the additive
    tolerance genuinely only absorbs rounding.
    """
    t0 = time.perf_counter()
    report = SuiteReport()
    level = basis.domain.level

    # monotonicity of the damping across exponents
    for i in range(cases_per_check):
        p = p_values[i % len(p_values)]
        case_seed = seed * 1_000_003 + i
        sampler = FieldSampler(basis, case_seed)
        u, v = sampler.sample(), sampler.sample()
        res = check_monotone_nonlinearity(u, v, p, tol)
        report.record(f"mono/p={p}/i={i}", case_seed, res)

    # full local monotonicity on the unit proxy ball
    for i in range(cases_per_check):
        p = quadrature_exact_p
        case_seed = seed * 2_000_003 + i
        sampler = FieldSampler(basis, case_seed)
        u = sampler.sample_capped(1.0, p)
        v = sampler.sample_capped(1.0, p)
        res = check_local_monotone_G(u, v, p, tol)
        report.record(f"loc-mono/p={p}/i={i}", case_seed, res)

    # Lipschitz chains across exponents
    for i in range(cases_per_check):
        p = p_values[i % len(p_values)]
        case_seed = seed * 3_000_017 + i
        sampler = FieldSampler(basis, case_seed)
        u = sampler.sample_capped(2.0, p)
        v = sampler.sample_capped(2.0, p)
        res = check_lipschitz_chain(u, v, p, tol)
        report.record(f"lipschitz/p={p}/i={i}", case_seed, res)

    # integration-by-parts identity and the gradient-norm expansion
    p = quadrature_exact_p
    for i in range(cases_per_check):
        case_seed = seed * 4_000_037 + i
        sampler = FieldSampler(basis, case_seed)
        u = sampler.sample()
        res = _check_parts_identities(u, p, tol)
        report.record(f"parts/p={p}/i={i}", case_seed, res)

    # tangency and the tangent/full gradient relation on the sphere
    for i in range(cases_per_check):
        case_seed = seed * 5_000_011 + i
        sampler = FieldSampler(basis, case_seed)
        u = sampler.sample_unit()
        res = _check_sphere_identities(u, p, tol)
        report.record(f"sphere/p={p}/i={i}", case_seed, res)

    # projection algebra (batched: each case covers many identities)
    res = check_projection_algebra(basis, max(4, level - 1), seed,
                                   cases=cases_per_check, tol=tol)
    report.record(f"projection/level={max(4, level - 1)}", seed, res)

    # reported, not asserted: the observed L^p bound of the smoothing
    report.lp_bound = empirical_smoothing_lp_bound(
        basis, max(4, level - 1), quadrature_exact_p, seed)

    report.runtime = time.perf_counter() - t0
    return report


def _check_parts_identities(u: Field, p: float, tol: float) -> CheckResult:
    """(N(u), -Lap u) = (p-1) || |u|^{(p-2)/2} grad u ||^2 and the
    expansion of ||grad E(u)||^2, all on the quadrature grid."""
    basis = u.basis
    us = u.samples
    lap = basis.synthesize(basis.eigenvalues * u.coeffs)  # -Lap u on the grid
    grad = basis.synthesize_gradient(u.coeffs)
    gradsq = np.sum(grad ** 2, axis=1)
    nl = power_law(us, p)

    lhs = _quad(basis, nl * lap)
    weighted = _quad(basis, np.abs(us) ** (p - 2.0) * gradsq)
    rhs = (p - 1.0) * weighted
    parts_gap = abs(lhs - rhs)

    grad_e_sq = _quad(basis, (lap + nl) ** 2)
    expansion = (float(np.dot((basis.eigenvalues * u.coeffs),
                              (basis.eigenvalues * u.coeffs)))
                 + _quad(basis, np.abs(us) ** (2.0 * p - 2.0))
                 + 2.0 * (p - 1.0) * weighted)
    expansion_gap = abs(grad_e_sq - expansion)

    margins = {"parts": tol - parts_gap, "grad_norm_expansion": tol - expansion_gap}
    return CheckResult("parts_identities",
                       parts_gap <= tol and expansion_gap <= tol, margins)


def _check_sphere_identities(u: Field, p: float, tol: float) -> CheckResult:
    """(G(u), u) = 0 and ||grad_M E||^2 = ||grad E||^2 - S(u)^2 at unit
    mass, in the coefficient space of the admitted span."""
    rhs = constrained_rhs(u, p)
    tangency = abs(rhs.inner(u))
    ge = grad_energy(u, p)
    s = multiplier_functional(u, p)
    gap = abs(float(np.dot(rhs.coeffs, rhs.coeffs))
              - (float(np.dot(ge.coeffs, ge.coeffs)) - s * s))
    margins = {"tangency": tol - tangency, "grad_relation": tol - gap}
    return CheckResult("sphere_identities",
                       tangency <= tol and gap <= tol, margins)
