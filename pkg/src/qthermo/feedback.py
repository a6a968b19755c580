"""Work budgets of feedback-assisted extraction from a correlated pair S, A.

Every function returns a :class:`WorkLedger`: labelled work values plus the
residuals of the identities that tie them together. Identities that go
through the measurement optimizer carry ``SEARCH_TOL``; purely algebraic ones
carry ``ALGEBRAIC_TOL``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlations import (
    CorrelationReport,
    ProjectiveMeasurement,
    SearchSettings,
    conditional_entropy_average,
    extracted_information,
    maximize_classical_correlations,
    measure_ancilla,
    mutual_information,
)
from .operators import Bipartite, tensor_product
from .thermo import (
    ThermalContext,
    gibbs_state,
    isothermal_extractable_work,
    noneq_free_energy,
    relative_entropy_to_gibbs,
    shannon_entropy,
    von_neumann_entropy,
)

ALGEBRAIC_TOL = 1e-9
SEARCH_TOL = 1e-6


@dataclass(frozen=True)
class Residual:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and abs(self.value) <= self.tol)


@dataclass
class WorkLedger:
    entries: list[tuple[str, float]] = field(default_factory=list)
    residuals: list[Residual] = field(default_factory=list)

    def add(self, label: str, value: float) -> float:
        self.entries.append((label, float(value)))
        return float(value)

    def check(self, name: str, lhs: float, rhs: float, tol: float) -> Residual:
        r = Residual(name, float(lhs - rhs), tol)
        self.residuals.append(r)
        return r

    def check_nonneg(self, name: str, value: float, tol: float) -> Residual:
        r = Residual(name, min(float(value), 0.0), tol)
        self.residuals.append(r)
        return r

    def extend(self, other: "WorkLedger", prefix: str = "") -> None:
        self.entries.extend((prefix + k, v) for k, v in other.entries)
        self.residuals.extend(Residual(prefix + r.name, r.value, r.tol) for r in other.residuals)

    def __getitem__(self, label: str) -> float:
        for k, v in reversed(self.entries):
            if k == label:
                return v
        raise KeyError(label)

    def residual(self, name: str) -> Residual:
        for r in self.residuals:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals)


@dataclass(frozen=True)
class FeedbackScenario:
    rho: Bipartite
    h_s: np.ndarray
    h_a: np.ndarray
    ctx: ThermalContext
    measurement: ProjectiveMeasurement | None = None

    def __post_init__(self):
        if np.shape(self.h_s) != (self.rho.d_s,) * 2:
            raise ValueError("h_s does not act on S")
        if np.shape(self.h_a) != (self.rho.d_a,) * 2:
            raise ValueError("h_a does not act on A")
        if self.measurement is not None and self.measurement.dim != self.rho.d_a:
            raise ValueError("measurement does not act on A")

    def with_measurement(self, m: ProjectiveMeasurement) -> "FeedbackScenario":
        return FeedbackScenario(self.rho, self.h_s, self.h_a, self.ctx, m)

    def _m(self) -> ProjectiveMeasurement:
        if self.measurement is None:
            raise ValueError("scenario has no measurement")
        return self.measurement


def joint_hamiltonian(h_s, h_a) -> np.ndarray:
    h_s, h_a = np.asarray(h_s, dtype=complex), np.asarray(h_a, dtype=complex)
    return tensor_product(h_s, np.eye(len(h_a))) + tensor_product(np.eye(len(h_s)), h_a)


def _thermal_pair(h_s, h_a, ctx) -> np.ndarray:
    return tensor_product(gibbs_state(h_s, ctx), gibbs_state(h_a, ctx))


def joint_work(rho: np.ndarray, h_s, h_a, ctx: ThermalContext) -> float:
    """F(rho_SA) - F(rho_S^beta (x) rho_A^beta) under H_S + H_A."""
    h = joint_hamiltonian(h_s, h_a)
    return noneq_free_energy(rho, h, ctx) - noneq_free_energy(_thermal_pair(h_s, h_a, ctx), h, ctx)


def conditional_free_energy_change(s: FeedbackScenario) -> list[float]:
    """F(rho_S|k) - F(rho_S) per outcome; NaN for null outcomes."""
    f0 = noneq_free_energy(s.rho.rho_s, s.h_s, s.ctx)
    return [
        math.nan if o.is_null else noneq_free_energy(o.conditional_state, s.h_s, s.ctx) - f0
        for o in measure_ancilla(s.rho, s._m())
    ]


def feedback_extractable_work(s: FeedbackScenario) -> WorkLedger:
    ctx = s.ctx
    outcomes = measure_ancilla(s.rho, s._m())
    f_eq = noneq_free_energy(gibbs_state(s.h_s, ctx), s.h_s, ctx)
    led = WorkLedger()
    w_s = led.add("W_S", isothermal_extractable_work(s.rho.rho_s, s.h_s, ctx))
    w_fb = led.add(
        "W_S|pi",
        sum(o.p * (noneq_free_energy(o.conditional_state, s.h_s, ctx) - f_eq) for o in outcomes if not o.is_null),
    )
    d_f = conditional_free_energy_change(s)
    avg_df = led.add("<dF_k>", sum(o.p * df for o, df in zip(outcomes, d_f) if not o.is_null))
    gain = led.add("gain", w_fb - w_s)
    kt_j = led.add("kT*J_pi", ctx.kT * extracted_information(s.rho, s._m()))
    led.check("average free-energy change = kT*J_pi", avg_df, kt_j, ALGEBRAIC_TOL)
    led.check("gain = kT*J_pi", gain, kt_j, ALGEBRAIC_TOL)
    led.check_nonneg("gain >= 0", gain, ALGEBRAIC_TOL)
    return led


def optimal_feedback_gain(
    rho: Bipartite, h_s, h_a, ctx: ThermalContext, settings: SearchSettings | None = None,
    report: CorrelationReport | None = None,
) -> tuple[WorkLedger, ProjectiveMeasurement]:
    report = report or maximize_classical_correlations(rho, settings)
    m = report.optimal_measurement
    led = feedback_extractable_work(FeedbackScenario(rho, h_s, h_a, ctx, m))
    led.add("kT*J", ctx.kT * report.classical_J)
    led.check("optimal gain = kT*J", led["gain"], led["kT*J"], SEARCH_TOL)
    return led, m


def joint_extractable_work(rho: Bipartite, h_s, h_a, ctx: ThermalContext) -> WorkLedger:
    led = WorkLedger()
    w_sa = led.add("W_SA", joint_work(rho.rho, h_s, h_a, ctx))
    w_s = led.add("W_S", isothermal_extractable_work(rho.rho_s, h_s, ctx))
    w_a = led.add("W_A", isothermal_extractable_work(rho.rho_a, h_a, ctx))
    kt_i = led.add("kT*I", ctx.kT * mutual_information(rho))
    led.add("kT*D(rho_SA||thermal)", ctx.kT * relative_entropy_to_gibbs(rho.rho, joint_hamiltonian(h_s, h_a), ctx))
    led.check("W_SA = W_S + W_A + kT*I", w_sa, w_s + w_a + kt_i, ALGEBRAIC_TOL)
    led.check("W_SA = kT*D(rho_SA||thermal)", w_sa, led["kT*D(rho_SA||thermal)"], ALGEBRAIC_TOL)
    return led


def _discord_at(rho: Bipartite, m: ProjectiveMeasurement) -> float:
    return mutual_information(rho) - extracted_information(rho, m)


def discord_work_deficit(s: FeedbackScenario, discord: float | None = None) -> WorkLedger:
    """W_S|A + W_A against W_SA - kT*D.

    ``discord`` defaults to I - J_pi evaluated at the scenario's measurement,
    which is the discord when that measurement is optimal.
    """
    ctx = s.ctx
    d = _discord_at(s.rho, s._m()) if discord is None else discord
    fb = feedback_extractable_work(s)
    joint = joint_extractable_work(s.rho, s.h_s, s.h_a, ctx)
    led = WorkLedger()
    w_sa_fb = led.add("W_S|A", fb["W_S|pi"])
    w_a = led.add("W_A", joint["W_A"])
    w_sa = led.add("W_SA", joint["W_SA"])
    kt_d = led.add("kT*D", ctx.kT * d)
    led.add("deficit", w_sa - (w_sa_fb + w_a))
    led.check("W_S|A + W_A = W_SA - kT*D", w_sa_fb + w_a, w_sa - kt_d, SEARCH_TOL)
    return led


def measurement_cost(rho: Bipartite, h_a, m: ProjectiveMeasurement) -> float:
    """Tr[H_A (rho_A|pi - rho_A)] for the unselective post-measurement ancilla state."""
    rho_a = rho.rho_a
    post = sum(np.real(np.trace(p @ rho_a)) * p for p in m.projectors)
    return float(np.real(np.trace(np.asarray(h_a) @ (post - rho_a))))


def post_measurement_states(rho: Bipartite, m: ProjectiveMeasurement) -> list[tuple[float, np.ndarray]]:
    """(p_k, rho_S|k (x) Pi_k) for each non-null outcome."""
    return [
        (o.p, tensor_product(o.conditional_state, m.projectors[o.k]))
        for o in measure_ancilla(rho, m)
        if not o.is_null
    ]


def net_measurement_gain(s: FeedbackScenario, discord: float | None = None) -> WorkLedger:
    ctx = s.ctx
    m = s._m()
    h = joint_hamiltonian(s.h_s, s.h_a)
    outcomes = measure_ancilla(s.rho, m)
    d = _discord_at(s.rho, m) if discord is None else discord
    led = WorkLedger()
    dw = led.add(
        "dW_SA|pi",
        sum(p * noneq_free_energy(state, h, ctx) for p, state in post_measurement_states(s.rho, m))
        - noneq_free_energy(s.rho.rho, h, ctx),
    )
    cost = led.add("C", measurement_cost(s.rho, s.h_a, m))
    net = led.add("net gain", dw - cost)
    ent = led.add(
        "kT*[S(rho_SA) - <S(rho_S|k)>]",
        ctx.kT * (von_neumann_entropy(s.rho.rho) - conditional_entropy_average(outcomes)),
    )
    disc = led.add("kT*[S(rho_A) - D]", ctx.kT * (von_neumann_entropy(s.rho.rho_a) - d))
    led.check("net gain = kT*[S(rho_SA) - <S(rho_S|k)>]", net, ent, SEARCH_TOL)
    led.check("net gain = kT*[S(rho_A) - D]", net, disc, SEARCH_TOL)
    led.check_nonneg("net gain >= 0", net, SEARCH_TOL)
    return led


def tradeoff_witness(ctx: ThermalContext | None = None) -> FeedbackScenario:
    """A deliberately poor measurement: the x basis on (|00><00| + |11><11|)/2.

    The measurement learns nothing about S and fully dephases the ancilla's
    computational-basis record, with H_S = H_A = diag(0, 1).
    """
    from .correlations import basis_measurement

    rho = Bipartite(np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex), 2, 2)
    h = np.diag([0.0, 1.0]).astype(complex)
    x_basis = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    return FeedbackScenario(rho, h, h, ctx or ThermalContext(1.0), basis_measurement(x_basis))


def decorrelation_target(rho: Bipartite, m: ProjectiveMeasurement) -> Bipartite:
    """sum_k p_k rho_S|k (x) Pi_k: classical on A, same classical correlations."""
    out = sum(p * state for p, state in post_measurement_states(rho, m))
    out = 0.5 * (out + out.conj().T)
    return Bipartite(out, rho.d_s, rho.d_a)


def discord_stroke_work(
    rho: Bipartite, h_s, h_a, ctx: ThermalContext, m: ProjectiveMeasurement, discord: float | None = None
) -> WorkLedger:
    """Reversible stroke rho_SA -> rho'_SA preceding the measurement.

    Besides the headline comparison with kT*D, the ledger carries the exact
    free-energy balance of the stroke, whose extra terms vanish when the
    projectors diagonalize rho_A and commute with H_A.
    """
    d = _discord_at(rho, m) if discord is None else discord
    target = decorrelation_target(rho, m)
    led = WorkLedger()
    w_sa = led.add("W_SA(rho)", joint_work(rho.rho, h_s, h_a, ctx))
    w_sa_t = led.add("W_SA(rho')", joint_work(target.rho, h_s, h_a, ctx))
    stroke = led.add("stroke work", w_sa - w_sa_t)
    kt_d = led.add("kT*D", ctx.kT * d)
    probs = [o.p for o in measure_ancilla(rho, m)]
    mismatch = led.add(
        "kT*[H(p) - S(rho_A)] - C",
        ctx.kT * (shannon_entropy(probs) - von_neumann_entropy(rho.rho_a)) - measurement_cost(rho, h_a, m),
    )
    w_in = led.add("W_in", w_sa_t)
    j = extracted_information(rho, m)
    w_in_sum = led.add(
        "W_S + W_A(rho'_A) + kT*J",
        isothermal_extractable_work(target.rho_s, h_s, ctx)
        + isothermal_extractable_work(target.rho_a, h_a, ctx)
        + ctx.kT * j,
    )
    led.check("stroke work = kT*D", stroke, kt_d, SEARCH_TOL)
    led.check("stroke work = kT*D + kT*[H(p) - S(rho_A)] - C", stroke, kt_d + mismatch, ALGEBRAIC_TOL)
    led.check("W_in = W_S + W_A(rho'_A) + kT*J", w_in, w_in_sum, ALGEBRAIC_TOL)
    return led


def total_feedback_budget(
    rho: Bipartite, h_s, h_a, ctx: ThermalContext, settings: SearchSettings | None = None,
    report: CorrelationReport | None = None,
) -> WorkLedger:
    """Discord stroke, then extraction from rho' plus its measurement gain, minus the cost."""
    report = report or maximize_classical_correlations(rho, settings)
    m = report.optimal_measurement
    d = report.discord
    target = decorrelation_target(rho, m)

    stroke = discord_stroke_work(rho, h_s, h_a, ctx, m, d)
    w_target = joint_work(target.rho, h_s, h_a, ctx)
    net_target = net_measurement_gain(FeedbackScenario(target, h_s, h_a, ctx, m))

    led = WorkLedger()
    led.extend(stroke, "stroke: ")
    led.extend(net_target, "rho': ")
    kt_d = led.add("kT*D", ctx.kT * d)
    led.add("W_SA(rho')", w_target)
    led.add("rho' measurement gain", net_target["net gain"])
    w_total = led.add("W_SA|pi_opt", kt_d + w_target + net_target["net gain"])
    cost = led.add("C", measurement_cost(rho, h_a, m))
    budget = led.add("budget", w_total - cost)

    w_s = led.add("W_S", isothermal_extractable_work(rho.rho_s, h_s, ctx))
    w_a = led.add("W_A", isothermal_extractable_work(rho.rho_a, h_a, ctx))
    kt_i = led.add("kT*I", ctx.kT * report.mutual_information)
    kt_sa = led.add("kT*S(rho_A)", ctx.kT * von_neumann_entropy(rho.rho_a))
    closed = led.add("closed form", w_s + w_a + kt_i + kt_sa)
    led.check("budget = W_S + W_A + kT*I + kT*S(rho_A)", budget, closed, SEARCH_TOL)
    return led
