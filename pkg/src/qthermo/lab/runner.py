"""Experiment orchestration: evaluate sweep points, audit identities, write outputs."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..correlations import SearchSettings, maximize_classical_correlations
from ..feedback import (
    ALGEBRAIC_TOL,
    FeedbackScenario,
    Residual,
    decorrelation_target,
    discord_stroke_work,
    discord_work_deficit,
    feedback_extractable_work,
    joint_extractable_work,
    net_measurement_gain,
    total_feedback_budget,
)
from ..isothermal import GibbsMapSpec, KernelRegularization, run_isothermal_extraction, run_joint_stroke
from ..thermo import ThermalContext, ergotropy_vs_isothermal, free_energy_forms
from .config import ExperimentConfig
from .emit import emit_csv, emit_svg

log = logging.getLogger(__name__)

GAP_TOL = 1e-8


@dataclass
class IdentityCheck:
    name: str
    residual: float | None
    tolerance: float
    passed: bool

    @classmethod
    def of(cls, label: str, r: Residual) -> "IdentityCheck":
        return cls(f"{label} {r.name}", r.value, r.tol, r.passed)


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_time_s: float = 0.0
    identities: list[IdentityCheck] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(c.passed for c in self.identities)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "all_passed": self.passed,
            "identities": [
                {"name": c.name, "residual": c.residual, "tolerance": c.tolerance, "passed": c.passed}
                for c in self.identities
            ],
            "errors": self.errors,
            "files": self.files,
        }


def worker_count() -> int:
    env = os.environ.get("QTHERMO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer QTHERMO_THREADS=%r", env)
    return min(8, os.cpu_count() or 1)


def _map_points(fn, points):
    """Evaluate points concurrently; results come back in input order."""
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [pool.submit(fn, i, p) for i, p in enumerate(points)]
        results = []
        for f in futures:
            try:
                results.append(f.result())
            except (ValueError, ArithmeticError) as exc:
                results.append(exc)
        return results


def _point_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _identities(cfg, rho, h_s, h_a):
    seeds = _point_seeds(cfg.seed, len(cfg.beta))

    def point(i, beta):
        ctx = ThermalContext(beta, cfg.k_B)
        label = f"[beta={beta:g}]"
        report = maximize_classical_correlations(rho, SearchSettings(restarts=cfg.restarts, seed=seeds[i]))
        m = report.optimal_measurement
        s = FeedbackScenario(rho, h_s, h_a, ctx, m)
        checks = []
        df, kd = free_energy_forms(rho.rho_s, h_s, ctx)
        checks.append(IdentityCheck.of(label, Residual("isothermal bound: F difference = kT*D", df - kd, ALGEBRAIC_TOL)))
        for group, led in (
            ("feedback:", feedback_extractable_work(s)),
            ("joint:", joint_extractable_work(rho, h_s, h_a, ctx)),
            ("deficit:", discord_work_deficit(s, report.discord)),
            ("net gain:", net_measurement_gain(s, report.discord)),
            ("stroke:", discord_stroke_work(rho, h_s, h_a, ctx, m, report.discord)),
        ):
            checks += [IdentityCheck.of(f"{label} {group}", r) for r in led.residuals]
        budget = total_feedback_budget(rho, h_s, h_a, ctx, report=report)
        checks.append(IdentityCheck.of(f"{label} budget:", budget.residual("budget = W_S + W_A + kT*I + kT*S(rho_A)")))
        try:
            cmp = ergotropy_vs_isothermal(rho.rho_s, h_s, ctx)
            checks.append(IdentityCheck.of(
                label, Residual("ergotropy: gap = kT*D(rho_beta*||rho_beta)", cmp.gap - cmp.gap_relative_entropy, GAP_TOL)
            ))
        except ValueError as exc:
            log.info("ergotropy comparison skipped at beta=%g: %s", beta, exc)
        rows = [[beta, c.name.split("] ", 1)[1], c.residual, c.tolerance, c.passed] for c in checks]
        return rows, checks

    return ["beta", "identity", "residual", "tolerance", "passed"], point, cfg.beta, None


def _feedback_budget(cfg, rho, h_s, h_a):
    seeds = _point_seeds(cfg.seed, len(cfg.beta))

    def point(i, beta):
        ctx = ThermalContext(beta, cfg.k_B)
        report = maximize_classical_correlations(rho, SearchSettings(restarts=cfg.restarts, seed=seeds[i]))
        led = total_feedback_budget(rho, h_s, h_a, ctx, report=report)
        r = led.residual("budget = W_S + W_A + kT*I + kT*S(rho_A)")
        row = [
            beta, led["W_S"], led["W_A"], led["kT*I"], led["kT*S(rho_A)"], ctx.kT * report.classical_J,
            led["kT*D"], led["C"], led["budget"], led["closed form"], r.value,
        ]
        return [row], [IdentityCheck.of(f"[beta={beta:g}] budget:", r)]

    header = ["beta", "W_S", "W_A", "kT_I", "kT_S_A", "kT_J", "kT_D", "cost", "budget", "closed_form", "residual"]
    return header, point, cfg.beta, ("beta", "budget")


def _discord_stroke(cfg, rho, h_s, h_a):
    ctx = ThermalContext(cfg.beta[0], cfg.k_B)
    report = maximize_classical_correlations(rho, SearchSettings(restarts=cfg.restarts, seed=cfg.seed))
    m = report.optimal_measurement
    target = decorrelation_target(rho, m)
    stroke = discord_stroke_work(rho, h_s, h_a, ctx, m, report.discord)
    reg = KernelRegularization(cfg.alpha)

    def point(i, n):
        rep = run_joint_stroke(rho, target, h_s, h_a, n, ctx, reg)
        row = [n, rep.total_work_extracted, rep.ideal_work, stroke["kT*D"], rep.dissipation, rep.final_distance]
        check = IdentityCheck.of(f"[N={n}] stroke:", Residual("dissipation >= 0", min(rep.dissipation, 0.0), ALGEBRAIC_TOL))
        return [row], [check]

    header = ["N", "extracted", "ideal", "kT_D", "dissipation", "final_distance"]
    extra = [IdentityCheck.of("stroke:", stroke.residual("stroke work = kT*D"))]
    return header, point, cfg.N, ("N", "extracted"), extra


def _isothermal_sweep(cfg, rho, h_s, h_a):
    ctx = ThermalContext(cfg.beta[0], cfg.k_B)
    rho_s = rho.rho_s
    spec = GibbsMapSpec(cfg.map["kind"], float(cfg.map.get("lambda", 1.0)))
    reg = KernelRegularization(cfg.alpha)

    def point(i, n):
        rep = run_isothermal_extraction(rho_s, h_s, n, spec, ctx, reg)
        max_res = float(np.max(np.abs(rep.reversibility_residual)))
        row = [n, rep.total_work_extracted, rep.ideal_work, rep.dissipation, rep.dissipation * n, max_res]
        check = IdentityCheck.of(f"[N={n}] isothermal:", Residual("dissipation >= 0", min(rep.dissipation, 0.0), ALGEBRAIC_TOL))
        return [row], [check]

    df, kd = free_energy_forms(rho_s, h_s, ctx)
    extra = [IdentityCheck.of("", Residual("isothermal bound: F difference = kT*D", df - kd, ALGEBRAIC_TOL))]
    header = ["N", "extracted", "ideal", "dissipation", "dissipation_x_N", "max_residual"]
    return header, point, cfg.N, ("N", "dissipation"), extra


def _ergotropy_compare(cfg, rho, h_s, h_a):
    rho_s = rho.rho_s

    def point(i, beta):
        ctx = ThermalContext(beta, cfg.k_B)
        c = ergotropy_vs_isothermal(rho_s, h_s, ctx)
        label = f"[beta={beta:g}] ergotropy:"
        checks = [
            IdentityCheck.of(label, Residual("gap = kT*D(rho_beta*||rho_beta)", c.gap - c.gap_relative_entropy, GAP_TOL)),
            IdentityCheck.of(label, Residual("gap >= 0", min(c.gap, 0.0), ALGEBRAIC_TOL)),
        ]
        return [[beta, c.w_beta, c.w_max, c.gap, c.gap_relative_entropy, c.beta_star]], checks

    extra = []
    try:
        from ..thermo import beta_star

        bs = beta_star(rho_s, h_s)
        if bs > 0:
            c = ergotropy_vs_isothermal(rho_s, h_s, ThermalContext(bs, cfg.k_B))
            extra.append(IdentityCheck.of("[beta=beta*] ergotropy:", Residual("gap vanishes", c.gap, GAP_TOL)))
    except ValueError as exc:
        log.info("beta* unavailable: %s", exc)
    header = ["beta", "W_beta", "W_max", "gap", "kT_D_star", "beta_star"]
    return header, point, cfg.beta, ("beta", "gap"), extra


EXPERIMENTS = {
    "identities": _identities,
    "feedback_budget": _feedback_budget,
    "discord_stroke": _discord_stroke,
    "isothermal_sweep": _isothermal_sweep,
    "ergotropy_compare": _ergotropy_compare,
}


def run_experiment(cfg: ExperimentConfig, output_dir: str | os.PathLike | None = None) -> RunManifest:
    """Run ``cfg`` and write results.csv, manifest.json and (for sweeps) plot.svg."""
    start = time.perf_counter()
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.to_dict(), __version__)

    rho = cfg.build_state()
    h_s, h_a = cfg.hamiltonians(rho)
    header, point, sweep, plot, *rest = EXPERIMENTS[cfg.experiment](cfg, rho, h_s, h_a)
    manifest.identities.extend(rest[0] if rest else [])

    rows = []
    for value, res in zip(sweep, _map_points(point, sweep)):
        if isinstance(res, Exception):
            manifest.errors.append(f"{header[0]}={value}: {type(res).__name__}: {res}")
            continue
        point_rows, checks = res
        rows += point_rows
        manifest.identities.extend(checks)

    if rows:
        manifest.files.append(str(emit_csv(out / "results.csv", header, rows)))
        if plot is not None:
            xi, yi = header.index(plot[0]), header.index(plot[1])
            manifest.files.append(str(emit_svg(
                out / "plot.svg", [r[xi] for r in rows], [r[yi] for r in rows], plot[0], plot[1], cfg.experiment
            )))
    manifest.wall_time_s = time.perf_counter() - start
    manifest_path = out / "manifest.json"
    manifest.files.append(str(manifest_path))
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2, default=_jsonable) + "\n")
    return manifest


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")
