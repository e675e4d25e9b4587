"""Experiment runner: flow, ground-state, asymptotics, and property suites.

Configs are flat TOML documents (config_version = 1) with sections
mirroring the type fields:

    config_version = 1

    [domain]
    dimension = 1
    lengths = [1.0]
    level = 9

    [operator]
    p = 2.0

    [flow]
    dt = 1e-4
    horizon = 2.0
    integrator = "rk4"        # rk4 | heun
    renormalize = true
    stationarity_tol = 1e-8

    [initial]
    preset = "mixed"          # first_mode | mixed | bump | positive_random
    seed = 0

    [output]
    snapshot_stride = 1000

Optional sections: [asymptotics] (tau0, checkpoints, tol_l2, tol_s) and
[properties] (cases, tolerance).  Every output file carries a header
with the config hash; identical config + seed gives byte-identical
CSVs.  Exit codes: 0 ok, 1 runtime or check failure, 2 usage/config.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from .domain import DomainSpec, Field, SpectralBasis, build_basis, save_field
from .flow import FlowConfig, dissipation_residual, run_flow
from .ground_state import (
    GroundStateError,
    cross_validate,
    lambda_search,
    linear_ground_state,
    save_result,
    solve_by_flow,
)
from .operators import OperatorParams, multiplier_functional
from .property_lab import run_property_suite

__all__ = ["ExperimentConfig", "build_initial", "main"]

CONFIG_VERSION = 1
PRESETS = ("first_mode", "mixed", "bump", "positive_random")


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    domain: DomainSpec
    params: OperatorParams
    flow: FlowConfig
    preset: str
    seed: int
    snapshot_stride: int
    asymptotics: dict
    properties: dict
    config_hash: str
    quiet: bool = False


def build_initial(preset: str, basis: SpectralBasis, seed: int = 0) -> Field:
    """Named initial data.

    first_mode and mixed are the first eigenfunction and the normalized
    sum of the first two.  bump is a fixed positive asymmetric profile.
    positive_random perturbs the first mode by seeded higher modes with
    amplitudes small enough (sum of |eps_n| * prod(k_i) below 1/2) that
    the sample stays strictly positive inside the domain; this survives
    the level-(m-1) smoothing because the symbol only shrinks the
    perturbation.
    """
    size = basis.size
    coeffs = np.zeros(size)
    if preset == "first_mode":
        coeffs[0] = 1.0
    elif preset == "mixed":
        if size < 2:
            raise ConfigError("mixed preset needs at least two admitted modes")
        coeffs[0] = coeffs[1] = 1.0 / math.sqrt(2.0)
    elif preset == "bump":
        if size < 3:
            raise ConfigError("bump preset needs at least three admitted modes")
        coeffs[0], coeffs[1], coeffs[2] = 1.0, 0.3, 0.1
        coeffs /= np.linalg.norm(coeffs)
    elif preset == "positive_random":
        rng = np.random.default_rng(seed)
        slope = np.array([math.prod(m.index) for m in basis.modes], dtype=float)
        raw = rng.standard_normal(size) / np.arange(1, size + 1, dtype=float) ** 3
        raw[0] = 0.0
        scale = float(np.sum(np.abs(raw) * slope))
        coeffs = 0.5 * raw / scale if scale > 0 else raw
        coeffs[0] = 1.0
        coeffs /= np.linalg.norm(coeffs)
    else:
        raise ConfigError(f"unknown preset {preset!r} (expected one of {PRESETS})")
    return Field(basis, coeffs)


def _hash_config(raw: dict, seed: int) -> str:
    canon = json.dumps({"config": raw, "seed": seed}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def load_config(path: Path, seed_override: int | None = None) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")

    version = raw.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version}")

    try:
        dom = raw.get("domain", {})
        dimension = int(dom.get("dimension", 1))
        lengths = tuple(float(x) for x in dom.get("lengths", [1.0]))
        level = int(dom.get("level", 9))
        if "points" in dom:
            domain = DomainSpec(dimension, lengths,
                                tuple(int(x) for x in dom["points"]), level)
        else:
            domain = DomainSpec.for_level(dimension, lengths, level)

        op = raw.get("operator", {})
        params = OperatorParams(p=float(op.get("p", 2.0)))

        fl = raw.get("flow", {})
        flow_cfg = FlowConfig(
            params=params,
            level=level,
            dt=float(fl.get("dt", 1e-4)),
            horizon=float(fl.get("horizon", 1.0)),
            integrator=str(fl.get("integrator", "rk4")),
            renormalize=bool(fl.get("renormalize", True)),
            stationarity_tol=float(fl.get("stationarity_tol", 1e-8)),
        )

        init = raw.get("initial", {})
        preset = str(init.get("preset", "first_mode"))
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (expected one of {PRESETS})")
        seed = int(init.get("seed", 0)) if seed_override is None else seed_override

        out = raw.get("output", {})
        stride = int(out.get("snapshot_stride", 1000))
        if stride < 1:
            raise ConfigError("snapshot_stride must be at least 1")

        asym = dict(raw.get("asymptotics", {}))
        asym.setdefault("tau0", 0.05)
        asym.setdefault("checkpoints", 5)
        asym.setdefault("tol_l2", 1e-4)
        asym.setdefault("tol_s", 1e-5)

        props = dict(raw.get("properties", {}))
        props.setdefault("cases", 500)
        props.setdefault("tolerance", 1e-9)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))

    return ExperimentConfig(
        domain=domain,
        params=params,
        flow=flow_cfg,
        preset=preset,
        seed=seed,
        snapshot_stride=stride,
        asymptotics=asym,
        properties=props,
        config_hash=_hash_config(raw, seed),
    )


def _say(cfg: ExperimentConfig, msg: str):
    if not cfg.quiet:
        print(msg)


def _header(cfg: ExperimentConfig) -> list[str]:
    return [f"config={cfg.config_hash} version={CONFIG_VERSION} seed={cfg.seed}"]


def cmd_flow(cfg: ExperimentConfig, out_dir: Path) -> int:
    basis = build_basis(cfg.domain)
    u0 = build_initial(cfg.preset, basis, cfg.seed)
    initial_positive = float(u0.samples.min()) >= -1e-10
    result = run_flow(u0, cfg.flow, stride=cfg.snapshot_stride)

    result.ledger.to_csv(out_dir / "ledger.csv", _header(cfg))
    for i, (t, fld) in enumerate(result.trajectory):
        save_field(fld, out_dir / f"snapshot_{i:04d}.csv",
                   extra={"t": t, "config": cfg.config_hash})

    checks = {}
    e = result.ledger.column("energy")
    checks["energy_monotone"] = bool(np.all(np.diff(e) <= 1e-10))
    if cfg.flow.renormalize and len(result.ledger) > 1:
        post = np.array([abs(fld.l2 - 1.0) for _, fld in result.trajectory])
        checks["sphere_invariant"] = bool(np.max(post) <= 1e-12)
    if initial_positive:
        checks["positivity"] = bool(result.ledger.column("min_value").min() >= -1e-10)

    summary = {
        "config": cfg.config_hash,
        "steps": result.final.step_index,
        "stopped_early": result.stopped_early,
        "final_energy": e[-1],
        "dissipation_residual": dissipation_residual(result.ledger),
        "drift_coefficient": result.ledger.drift_coefficient(cfg.flow.dt),
        "checks": checks,
    }
    with open(out_dir / "run.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    ok = all(checks.values())
    _say(cfg, f"flow: {result.final.step_index} steps, "
              f"E = {e[-1]:.6f}, checks {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def _ground_state_reference(cfg: ExperimentConfig, basis: SpectralBasis):
    p = cfg.params.p
    if p == 2.0:
        return linear_ground_state(basis)
    if p >= 3.0:
        return lambda_search(p, basis)
    gs_cfg = FlowConfig(params=cfg.params, level=cfg.domain.level,
                        dt=cfg.flow.dt, horizon=max(cfg.flow.horizon, 5.0),
                        stationarity_tol=max(cfg.flow.stationarity_tol, 1e-8))
    return solve_by_flow(build_initial("first_mode", basis, cfg.seed), gs_cfg)


def cmd_asymptotics(cfg: ExperimentConfig, out_dir: Path) -> int:
    basis = build_basis(cfg.domain)
    u0 = build_initial(cfg.preset, basis, cfg.seed)
    if float(u0.samples.min()) < -1e-10:
        raise ConfigError(
            f"asymptotics requires a positive initial preset; {cfg.preset!r} "
            "is sign-changing on this domain"
        )

    tau0 = float(cfg.asymptotics["tau0"])
    n_checkpoints = int(cfg.asymptotics["checkpoints"])
    taus = [tau0 * 2.0 ** n for n in range(n_checkpoints)]
    horizon = taus[-1]
    dt = cfg.flow.dt
    if abs(tau0 / dt - round(tau0 / dt)) > 1e-9:
        raise ConfigError("tau0 must be an integer multiple of dt")

    reference = _ground_state_reference(cfg, basis)
    flow_cfg = FlowConfig(params=cfg.params, level=cfg.domain.level, dt=dt,
                          horizon=horizon, integrator=cfg.flow.integrator,
                          renormalize=cfg.flow.renormalize, stationarity_tol=0.0)
    stride = int(round(tau0 / dt))
    result = run_flow(u0, flow_cfg, stride=stride)
    by_time = {round(t / dt): fld for t, fld in result.trajectory}

    rows = []
    for tau in taus:
        fld = by_time[round(tau / dt)]
        diff = fld - reference.profile
        s_gap = abs(multiplier_functional(fld, cfg.params.p) - reference.multiplier)
        rows.append((tau, diff.l2, diff.h1, s_gap))

    lines = ["# " + _header(cfg)[0], "tau,l2_error,h1_error,s_gap"]
    for row in rows:
        lines.append(",".join(f"{x:.17g}" for x in row))
    with open(out_dir / "convergence.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")

    proxies = [max(l2, h1) for _, l2, h1, _ in rows]
    monotone = all(b < a for a, b in zip(proxies, proxies[1:]))
    final_ok = (proxies[-1] < float(cfg.asymptotics["tol_l2"])
                and rows[-1][3] < float(cfg.asymptotics["tol_s"]))
    summary = {
        "config": cfg.config_hash,
        "reference_multiplier": reference.multiplier,
        "reference_method": reference.method,
        "monotone": monotone,
        "final_proxy_error": proxies[-1],
        "final_s_gap": rows[-1][3],
        "passed": bool(monotone and final_ok),
    }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _say(cfg, f"asymptotics: final proxy error {proxies[-1]:.3e}, "
              f"{'pass' if summary['passed'] else 'FAIL'}")
    return 0 if summary["passed"] else 1


def cmd_ground_state(cfg: ExperimentConfig, out_dir: Path) -> int:
    basis = build_basis(cfg.domain)
    p = cfg.params.p
    gs_cfg = FlowConfig(params=cfg.params, level=cfg.domain.level,
                        dt=cfg.flow.dt, horizon=max(cfg.flow.horizon, 5.0),
                        stationarity_tol=max(cfg.flow.stationarity_tol, 1e-10))
    by_flow = solve_by_flow(build_initial(cfg.preset, basis, cfg.seed), gs_cfg)
    save_result(by_flow, out_dir / "ground_state_flow.csv",
                out_dir / "ground_state_flow.json",
                extra={"config": cfg.config_hash})
    report = {
        "config": cfg.config_hash,
        "flow": {"lambda": by_flow.multiplier, "energy": by_flow.energy,
                 "residual": by_flow.residual},
    }
    passed = by_flow.residual < 10 * gs_cfg.stationarity_tol
    if p >= 3.0:
        by_shoot = lambda_search(p, basis)
        save_result(by_shoot, out_dir / "ground_state_sub_super.csv",
                    out_dir / "ground_state_sub_super.json",
                    extra={"config": cfg.config_hash})
        xval = cross_validate(by_flow, by_shoot)
        report["sub_super"] = {"lambda": by_shoot.multiplier,
                               "energy": by_shoot.energy,
                               "residual": by_shoot.residual}
        report["cross_validation"] = {
            "l2_diff": xval.l2_diff,
            "multiplier_diff": xval.multiplier_diff,
            "energy_diff": xval.energy_diff,
            "passed": xval.passed,
        }
        passed = passed and xval.passed
    report["passed"] = bool(passed)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _say(cfg, f"ground-state: lambda = {by_flow.multiplier:.8f}, "
              f"{'pass' if passed else 'FAIL'}")
    return 0 if passed else 1


def cmd_properties(cfg: ExperimentConfig, out_dir: Path) -> int:
    basis = build_basis(cfg.domain)
    report = run_property_suite(
        basis,
        seed=cfg.seed,
        cases_per_check=int(cfg.properties["cases"]),
        tol=float(cfg.properties["tolerance"]),
    )
    payload = json.loads(report.to_json())
    payload["config"] = cfg.config_hash
    with open(out_dir / "properties.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _say(cfg, f"properties: {len(report.cases)} cases, "
              f"{report.failures} failures ({report.runtime:.1f} s)")
    return 0 if report.passed else 1


COMMANDS = {
    "flow": cmd_flow,
    "ground-state": cmd_ground_state,
    "asymptotics": cmd_asymptotics,
    "properties": cmd_properties,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sphereflow",
        description="Sphere-constrained damped heat flow experiments",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML config path")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override [initial].seed")
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        cfg = load_config(Path(args.config), seed_override=args.seed)
        cfg.quiet = args.quiet
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GroundStateError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
