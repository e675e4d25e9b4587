"""Time integration of the Galerkin system u' = P_level G(u).

The state evolves inside the span of eigenmodes below 2^{level+1}; the
nonlinearity is evaluated on the quadrature grid and re-analyzed, which
is exactly the sharp dyadic truncation of G on that span.  The initial
datum is smoothed one level down and normalized to the sphere.

The integrator uses the radius-normalized multiplier S(u)/||u||^2 (see
operators.constrained_rhs(stabilized=True)): on the sphere it agrees
with the plain right-hand side, while off the sphere it keeps the
radial direction neutral instead of exponentially unstable, so with
renormalization disabled the recorded drift grows like C * dt^q * t
(q = integrator order) rather than like exp(2 int S).

Each step appends a ledger row with the energy, the multiplier, the
squared tangent-gradient norm, the running dissipation integral
(trapezoid), the pre-renormalization sphere drift, and the minimum grid
sample.

A single run is strictly sequential; independent runs (sweeps) can
execute concurrently since nothing here mutates shared state and each
run owns its ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .domain import DomainSpec, Field, SpectralBasis, build_basis
from .operators import OperatorParams, cutoff_symbol, power_law

__all__ = [
    "FlowBlowUp",
    "FlowConfig",
    "FlowState",
    "EnergyLedger",
    "FlowResult",
    "init_state",
    "galerkin_rhs",
    "step",
    "run_flow",
    "dissipation_residual",
]

LEDGER_COLUMNS = ("t", "energy", "S", "gradM_sq", "dissipation_integral",
                  "sphere_drift", "min_value")


class FlowBlowUp(RuntimeError):
    """Raised when a step produces a non-finite coefficient."""


@dataclass(frozen=True)
class FlowConfig:
    """Time-integration parameters for one Galerkin run."""

    params: OperatorParams
    level: int
    dt: float
    horizon: float
    integrator: str = "rk4"
    renormalize: bool = True
    stationarity_tol: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        # horizon 0 is allowed and yields a single-row ledger
        if self.horizon != 0.0 and self.horizon < self.dt:
            raise ValueError("horizon must be 0 or at least dt")
        if self.integrator not in ("rk4", "heun"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.stationarity_tol < 0:
            raise ValueError("stationarity tolerance must be non-negative")

    def validate_against(self, basis: SpectralBasis) -> None:
        """Linear stability margin for the explicit integrators."""
        lam_max = float(basis.eigenvalues[-1])
        if self.dt > 0.5 / lam_max:
            raise ValueError(
                f"dt = {self.dt:g} exceeds the stability bound "
                f"0.5/lambda_max = {0.5 / lam_max:g} at level {self.level}"
            )

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class FlowState:
    field: Field
    t: float = 0.0
    step_index: int = 0


@dataclass
class EnergyLedger:
    """Per-step diagnostics; columns match the CSV schema."""

    t: list = dataclass_field(default_factory=list)
    energy: list = dataclass_field(default_factory=list)
    S: list = dataclass_field(default_factory=list)
    gradM_sq: list = dataclass_field(default_factory=list)
    dissipation_integral: list = dataclass_field(default_factory=list)
    sphere_drift: list = dataclass_field(default_factory=list)
    min_value: list = dataclass_field(default_factory=list)

    def append(self, t, energy, S, gradM_sq, drift, min_value):
        if self.t:
            dt = t - self.t[-1]
            inc = 0.5 * dt * (self.gradM_sq[-1] + gradM_sq)
            diss = self.dissipation_integral[-1] + inc
        else:
            diss = 0.0
        self.t.append(t)
        self.energy.append(energy)
        self.S.append(S)
        self.gradM_sq.append(gradM_sq)
        self.dissipation_integral.append(diss)
        self.sphere_drift.append(drift)
        self.min_value.append(min_value)

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def drift_coefficient(self, dt: float) -> float:
        """Estimated C in the drift bound drift <= C * dt^2 (reported,
        not asserted; the observed exponent is higher for rk4)."""
        if not self.sphere_drift:
            return 0.0
        return float(max(self.sphere_drift) / dt ** 2)

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        rows = ["# " + ln for ln in (header_lines or [])]
        rows.append(",".join(LEDGER_COLUMNS))
        for i in range(len(self.t)):
            rows.append(",".join(
                f"{getattr(self, col)[i]:.17g}" for col in LEDGER_COLUMNS
            ))
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")

    @classmethod
    def from_csv(cls, path) -> "EnergyLedger":
        ledger = cls()
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        lines = [ln for ln in lines if not ln.startswith("#")]
        if not lines or lines[0].split(",") != list(LEDGER_COLUMNS):
            raise ValueError(f"{path}: not a ledger CSV")
        for ln in lines[1:]:
            vals = [float(x) for x in ln.split(",")]
            for col, val in zip(LEDGER_COLUMNS, vals):
                getattr(ledger, col).append(val)
        return ledger


@dataclass
class FlowResult:
    trajectory: list  # (t, Field) pairs at the snapshot stride
    ledger: EnergyLedger
    final: FlowState
    stopped_early: bool


def init_state(u0: Field, level: int) -> FlowState:
    """Smooth the datum one level down, then normalize it onto the sphere.

    The state lives on the basis of the given level; coefficients of u0
    on shared modes carry over (the smoothing annihilates everything at
    or above 2^level, so nothing admitted is lost).
    """
    src = u0.basis
    target_domain = DomainSpec.for_level(
        src.domain.dimension, src.domain.lengths, level
    )
    if target_domain == src.domain:
        target = src
    else:
        target = build_basis(target_domain)
    coeffs = np.zeros(target.size)
    for n, mode in enumerate(src.modes):
        sym = cutoff_symbol(mode.eigenvalue, level - 1)
        if sym == 0.0:
            continue
        try:
            coeffs[target.mode_position(mode.index)] = sym * u0.coeffs[n]
        except KeyError:
            # annihilated by the smoothing anyway
            continue
    norm = float(np.sqrt(np.dot(coeffs, coeffs)))
    if norm <= 1e-8:
        raise ValueError("initial datum annihilated by the level-(m-1) smoothing")
    return FlowState(Field(target, coeffs / norm), t=0.0, step_index=0)


class _Engine:
    """Array-level right-hand side evaluation shared by step and run_flow."""

    def __init__(self, basis: SpectralBasis, p: float):
        self.basis = basis
        self.p = float(p)
        self.lam = basis.eigenvalues

    def eval(self, a: np.ndarray):
        """Return (rhs, diagnostics) at coefficients a.

        rhs is the level-truncated right-hand side with the
        radius-normalized multiplier; diagnostics carry the energy,
        multiplier, squared rhs norm, and min grid sample.
        """
        basis, p = self.basis, self.p
        u = basis.synthesize(a)
        l2sq = float(np.dot(a, a))
        h1sq = float(np.dot(self.lam * a, a))
        if p == 2:
            lp_p = l2sq
            nl = a
        else:
            w = power_law(u, p)
            lp_p = float(np.dot(w, u)) * basis.weight
            nl = basis.analyze(w)
        mult = (h1sq + lp_p) / l2sq
        rhs = -self.lam * a - nl + mult * a
        diag = {
            "energy": 0.5 * h1sq + lp_p / p,
            "S": h1sq + lp_p,
            "gradM_sq": float(np.dot(rhs, rhs)),
            "min_value": float(u.min()),
            "l2sq": l2sq,
        }
        return rhs, diag

    def advance(self, a: np.ndarray, dt: float, integrator: str, k1=None):
        if k1 is None:
            k1, _ = self.eval(a)
        if integrator == "heun":
            k2, _ = self.eval(a + dt * k1)
            return a + (0.5 * dt) * (k1 + k2)
        k2, _ = self.eval(a + (0.5 * dt) * k1)
        k3, _ = self.eval(a + (0.5 * dt) * k2)
        k4, _ = self.eval(a + dt * k3)
        return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def galerkin_rhs(state: FlowState | Field, config: FlowConfig) -> Field:
    """Right-hand side of the Galerkin ODE at the current state; lies in
    the level span and is L2-orthogonal to the state on the sphere."""
    fld = state.field if isinstance(state, FlowState) else state
    engine = _Engine(fld.basis, config.params.p)
    rhs, _ = engine.eval(np.asarray(fld.coeffs))
    return fld.with_coeffs(rhs)


def _check_finite(a: np.ndarray, t: float, step_index: int):
    if not np.all(np.isfinite(a)):
        raise FlowBlowUp(
            f"non-finite coefficient after step {step_index} (t = {t:g}); "
            "the run violates the stability assumptions"
        )


def step(state: FlowState, config: FlowConfig, ledger: EnergyLedger | None = None) -> FlowState:
    """Advance one time step; records the pre-renormalization drift and,
    if the flag is on, rescales back to the sphere."""
    engine = _Engine(state.field.basis, config.params.p)
    a = np.asarray(state.field.coeffs)
    a_new = engine.advance(a, config.dt, config.integrator)
    t_new = state.t + config.dt
    _check_finite(a_new, t_new, state.step_index + 1)
    norm = float(np.sqrt(np.dot(a_new, a_new)))
    drift = abs(norm - 1.0)
    if config.renormalize:
        a_new = a_new / norm
    new_state = FlowState(state.field.with_coeffs(a_new), t_new, state.step_index + 1)
    if ledger is not None:
        _, diag = engine.eval(a_new)
        ledger.append(t_new, diag["energy"], diag["S"], diag["gradM_sq"],
                      drift, diag["min_value"])
    return new_state


def run_flow(u0: Field, config: FlowConfig, stride: int = 1000) -> FlowResult:
    """Integrate to the horizon or until the tangent-gradient norm drops
    below the stationarity tolerance; the ledger gets one row per step
    and the trajectory is sampled every `stride` steps."""
    state0 = init_state(u0, config.level)
    basis = state0.field.basis
    config.validate_against(basis)
    engine = _Engine(basis, config.params.p)

    ledger = EnergyLedger()
    trajectory: list[tuple[float, Field]] = []
    a = np.asarray(state0.field.coeffs)
    t = 0.0
    n = 0
    drift = 0.0
    tol_sq = config.stationarity_tol ** 2
    n_steps = config.steps
    stopped_early = False

    while True:
        k1, diag = engine.eval(a)
        ledger.append(t, diag["energy"], diag["S"], diag["gradM_sq"],
                      drift, diag["min_value"])
        if n % stride == 0 or n == n_steps:
            trajectory.append((t, Field(basis, a.copy())))
        if config.stationarity_tol > 0.0 and diag["gradM_sq"] < tol_sq:
            stopped_early = True
            break
        if n >= n_steps:
            break
        a_new = engine.advance(a, config.dt, config.integrator, k1=k1)
        t_new = t + config.dt
        _check_finite(a_new, t_new, n + 1)
        norm = float(np.sqrt(np.dot(a_new, a_new)))
        drift = abs(norm - 1.0)
        if config.renormalize:
            a_new = a_new / norm
        a, t, n = a_new, t_new, n + 1

    final_field = Field(basis, a)
    if not trajectory or trajectory[-1][0] != t:
        trajectory.append((t, final_field))
    return FlowResult(trajectory, ledger, FlowState(final_field, t, n), stopped_early)


def dissipation_residual(ledger: EnergyLedger) -> float:
    """Max over logged times of |E(u0) - E(u(t)) - int_0^t ||grad_M E||^2|,
    relative to E(u0); zero for a single-row ledger."""
    if len(ledger) == 0:
        raise ValueError("empty ledger")
    if len(ledger) == 1:
        return 0.0
    e = ledger.column("energy")
    diss = ledger.column("dissipation_integral")
    res = np.abs(e[0] - e - diss)
    scale = abs(e[0]) if e[0] != 0.0 else 1.0
    return float(res.max() / scale)
