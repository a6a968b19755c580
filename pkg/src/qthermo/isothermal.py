"""Quasi-static isothermal extraction as a finite sequence of CPTP maps.

Each step is a sudden Hamiltonian change at fixed state (work done by the
agent) followed by a Gibbs-preserving map at fixed Hamiltonian (heat from the
bath). Extracted work is positive when energy leaves the system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import Bipartite, as_matrix, dagger, hermitian_eigensystem, symmetrize, trace_distance
from .thermo import (
    ThermalContext,
    gibbs_state,
    isothermal_extractable_work,
    noneq_free_energy,
    von_neumann_entropy,
)

KERNEL_EIG_TOL = 1e-14


@dataclass(frozen=True)
class KernelRegularization:
    alpha: float = 1e-10

    def __post_init__(self):
        if not (0 < self.alpha <= 1e-3):
            raise ValueError(f"alpha must lie in (0, 1e-3], got {self.alpha}")

    @classmethod
    def coupled(cls, epsilon_scale: float, alpha: float = 1e-10) -> "KernelRegularization":
        """Keep alpha no larger than the schedule step size."""
        return cls(min(alpha, epsilon_scale))


@dataclass(frozen=True)
class GibbsMapSpec:
    kind: str = "full_thermalization"
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("full_thermalization", "partial_thermalization"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if not (0 < self.lam <= 1):
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")

    def apply(self, rho: np.ndarray, h: np.ndarray, ctx: ThermalContext) -> np.ndarray:
        g = gibbs_state(h, ctx)
        if self.kind == "full_thermalization":
            return g
        return (1.0 - self.lam) * rho + self.lam * g


FULL = GibbsMapSpec()


def partial(lam: float) -> GibbsMapSpec:
    return GibbsMapSpec("partial_thermalization", lam)


@dataclass(frozen=True)
class HamiltonianSchedule:
    steps: tuple[np.ndarray, ...]
    epsilon_scale: float

    @property
    def N(self) -> int:
        return len(self.steps) - 1


@dataclass(frozen=True)
class StepRecord:
    n: int
    quench_work: float
    heat: float
    entropy_change: float
    reversibility_residual: float


@dataclass
class TrajectoryReport:
    """Per-step columns plus totals; index 0 is the initial quench."""

    n: np.ndarray
    quench_work: np.ndarray
    heat: np.ndarray
    entropy_change: np.ndarray
    reversibility_residual: np.ndarray
    ideal_work: float
    final_state: np.ndarray = field(repr=False)
    final_distance: float = 0.0

    @property
    def total_work_extracted(self) -> float:
        return -float(np.sum(self.quench_work))

    @property
    def dissipation(self) -> float:
        return self.ideal_work - self.total_work_extracted

    @property
    def total_heat(self) -> float:
        return float(np.sum(self.heat))

    @property
    def records(self) -> list[StepRecord]:
        return [
            StepRecord(int(i), float(w), float(q), float(ds), float(r))
            for i, w, q, ds, r in zip(
                self.n, self.quench_work, self.heat, self.entropy_change, self.reversibility_residual
            )
        ]

    @classmethod
    def from_records(cls, records, ideal_work, final_state, final_distance=0.0) -> "TrajectoryReport":
        cols = np.array(
            [(r.n, r.quench_work, r.heat, r.entropy_change, r.reversibility_residual) for r in records],
            dtype=float,
        ).reshape(-1, 5)
        return cls(
            cols[:, 0].astype(int), cols[:, 1], cols[:, 2], cols[:, 3], cols[:, 4],
            ideal_work, final_state, final_distance,
        )


def quench_hamiltonian(rho, ctx: ThermalContext, reg: KernelRegularization | None = None) -> np.ndarray:
    """-k_B T ln(rho + alpha * 1_ker), the Hamiltonian that makes ``rho`` thermal."""
    reg = reg or KernelRegularization()
    w, v = hermitian_eigensystem(rho)
    lifted = np.where(w < KERNEL_EIG_TOL, reg.alpha, w)
    return symmetrize((v * (-ctx.kT * np.log(lifted))) @ dagger(v))


def kernel_dimension(rho) -> int:
    w, _ = hermitian_eigensystem(rho)
    return int(np.sum(w < KERNEL_EIG_TOL))


def linear_schedule(h_start, h_end, N: int) -> HamiltonianSchedule:
    if N < 1:
        raise ValueError("N must be at least 1")
    h_start, h_end = as_matrix(h_start), as_matrix(h_end)
    if h_start.shape != h_end.shape:
        raise ValueError("dimension mismatch")
    steps = [h_start] + [(1 - n / N) * h_start + (n / N) * h_end for n in range(1, N)] + [h_end]
    eps = float(np.max(np.abs(h_end - h_start))) / N
    return HamiltonianSchedule(tuple(steps), eps)


def _energy(h, rho) -> float:
    return float(np.real(np.trace(h @ rho)))


def apply_step(
    rho_prev, h_prev, h_n, spec: GibbsMapSpec, ctx: ThermalContext, n: int = 0,
    s_prev: float | None = None,
) -> tuple[np.ndarray, StepRecord]:
    """One map: quench H_{n-1} -> H_n at fixed state, then thermalize under H_n.

    The reversibility residual is ``dS - beta * q`` with ``q`` the heat
    absorbed from the bath; it is second order in the step size.
    """
    rho_prev = np.asarray(rho_prev, dtype=complex)
    w = _energy(h_n - h_prev, rho_prev)
    rho_n = spec.apply(rho_prev, h_n, ctx)
    q = _energy(h_n, rho_n - rho_prev)
    if s_prev is None:
        s_prev = von_neumann_entropy(rho_prev)
    ds = von_neumann_entropy(rho_n) - s_prev
    return rho_n, StepRecord(n, w, q, ds, ds - ctx.beta * q)


def _drive(rho, schedule: HamiltonianSchedule, spec: GibbsMapSpec, ctx: ThermalContext, first: int = 1):
    """Fold ``apply_step`` over a schedule."""
    records = []
    s = von_neumann_entropy(rho)
    for n in range(1, schedule.N + 1):
        rho, rec = apply_step(rho, schedule.steps[n - 1], schedule.steps[n], spec, ctx, first + n - 1, s)
        s += rec.entropy_change
        records.append(rec)
    return rho, records


def _drive_thermalizing(rho, h_start, h_end, N: int, ctx: ThermalContext, chunk: int = 200_000):
    """Vectorized fold for full thermalization along a linear schedule.

    After the first map every state is the Gibbs state of the previous
    Hamiltonian, so each step needs only the spectrum of H_n. Returns the
    final state and the step columns (work, heat, dS, residual).
    """
    h_start, h_end = as_matrix(h_start), as_matrix(h_end)
    delta = h_end - h_start
    dh = delta / N
    energies = np.empty(N)
    entropies = np.empty(N)
    tilt = np.empty(N)  # Tr[G_n dH]
    for lo in range(1, N + 1, chunk):
        n = np.arange(lo, min(lo + chunk, N + 1))
        s = (n / N)[:, None, None]
        h = (1 - s) * h_start + s * h_end
        h[-1] = h_end if n[-1] == N else h[-1]
        e, v = np.linalg.eigh(h)
        x = -ctx.beta * (e - e[:, :1])
        w = np.exp(x)
        w /= w.sum(axis=1, keepdims=True)
        idx = n - 1
        energies[idx] = np.sum(w * e, axis=1)
        entropies[idx] = -np.sum(np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0), axis=1)
        diag = np.real(np.einsum("nik,ij,njk->nk", v.conj(), dh, v))
        tilt[idx] = np.sum(w * diag, axis=1)
        if n[-1] == N:
            final = (v[-1] * w[-1]) @ dagger(v[-1])

    work = np.empty(N)
    heat = np.empty(N)
    ds = np.empty(N)
    h1 = h_start + dh if N > 1 else h_end
    work[0] = _energy(dh, rho)
    heat[0] = energies[0] - _energy(h1, rho)
    ds[0] = entropies[0] - von_neumann_entropy(rho)
    work[1:] = tilt[:-1]
    heat[1:] = energies[1:] - energies[:-1] - tilt[:-1]
    ds[1:] = np.diff(entropies)
    return final, work, heat, ds, ds - ctx.beta * heat


def _run(rho, h_initial, h_from, h_to, N, spec, ctx, h_final=None) -> tuple[np.ndarray, TrajectoryReport]:
    """Quench h_initial -> h_from, drive to h_to, optionally quench to h_final."""
    q0 = _energy(h_from - h_initial, rho)
    if spec.kind == "full_thermalization":
        final, work, heat, ds, res = _drive_thermalizing(rho, h_from, h_to, N, ctx)
    else:
        final, recs = _drive(rho, linear_schedule(h_from, h_to, N), spec, ctx)
        work, heat, ds, res = (
            np.array([getattr(r, f) for r in recs])
            for f in ("quench_work", "heat", "entropy_change", "reversibility_residual")
        )
    cols = [np.concatenate([[q0], work]), np.concatenate([[0.0], heat]),
            np.concatenate([[0.0], ds]), np.concatenate([[0.0], res])]
    if h_final is not None:
        extra = [_energy(h_final - h_to, final), 0.0, 0.0, 0.0]
        cols = [np.append(c, x) for c, x in zip(cols, extra)]
    n = np.arange(len(cols[0]))
    return final, TrajectoryReport(n, *cols, ideal_work=0.0, final_state=final)


def _quench_record(n: int, rho, h_from, h_to) -> StepRecord:
    return StepRecord(n, _energy(h_to - h_from, rho), 0.0, 0.0, 0.0)


def run_isothermal_extraction(
    rho, h_target, N: int, spec: GibbsMapSpec = FULL, ctx: ThermalContext | None = None,
    reg: KernelRegularization | None = None,
) -> TrajectoryReport:
    """Quench to -k_B T ln(rho), then drive linearly back to ``h_target`` in N maps."""
    ctx = ctx or ThermalContext(1.0)
    if N < 1:
        raise ValueError("N must be at least 1")
    rho = symmetrize(rho)
    h_target = as_matrix(h_target)
    h0 = quench_hamiltonian(rho, ctx, reg)
    final, rep = _run(rho, h_target, h0, h_target, N, spec, ctx)
    rep.ideal_work = isothermal_extractable_work(rho, h_target, ctx)
    rep.final_distance = trace_distance(final, gibbs_state(h_target, ctx))
    return rep


def run_joint_stroke(
    rho: Bipartite, target: Bipartite, h_s, h_a, N: int, ctx: ThermalContext | None = None,
    reg: KernelRegularization | None = None, spec: GibbsMapSpec = FULL,
) -> TrajectoryReport:
    """Drive ``rho`` into ``target`` through their thermal Hamiltonians and quench back.

    ``ideal_work`` is F(rho) - F(target) under H_S + H_A, the reversible limit.
    """
    from .feedback import joint_hamiltonian

    ctx = ctx or ThermalContext(1.0)
    if N < 1:
        raise ValueError("N must be at least 1")
    if (rho.d_s, rho.d_a) != (target.d_s, target.d_a):
        raise ValueError("source and target dimensions differ")
    h = joint_hamiltonian(h_s, h_a)
    h0 = quench_hamiltonian(rho.rho, ctx, reg)
    h1 = quench_hamiltonian(target.rho, ctx, reg)
    final, rep = _run(rho.rho, h, h0, h1, N, spec, ctx, h_final=h)
    rep.ideal_work = noneq_free_energy(rho.rho, h, ctx) - noneq_free_energy(target.rho, h, ctx)
    rep.final_distance = trace_distance(final, target.rho)
    return rep


def reversibility_profile(report: TrajectoryReport) -> tuple[float, float]:
    """(max |residual|, sum of residuals) over the thermalizing steps."""
    res = np.asarray(report.reversibility_residual)
    if res.size == 0:
        return 0.0, 0.0
    return float(np.max(np.abs(res))), float(np.sum(res))
