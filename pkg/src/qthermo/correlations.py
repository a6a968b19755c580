"""Measurement backaction, classical correlations and discord.

Measurements are complete sets of rank-1 orthogonal projectors on the
ancilla, parametrized by products of complex Givens rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .operators import Bipartite, dagger, partial_trace, tensor_product
from .thermo import relative_entropy, von_neumann_entropy

NULL_PROB = 1e-12


@dataclass(frozen=True)
class ProjectiveMeasurement:
    projectors: tuple[np.ndarray, ...]
    params: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def defects(self) -> dict[str, float]:
        """Largest deviations from idempotence, orthogonality and completeness."""
        ps = self.projectors
        idem = max(np.abs(p @ p - p).max() for p in ps)
        orth = max(
            (np.abs(ps[j] @ ps[k]).max() for j in range(len(ps)) for k in range(len(ps)) if j != k),
            default=0.0,
        )
        comp = np.abs(sum(ps) - np.eye(self.dim)).max()
        return {"idempotence": float(idem), "orthogonality": float(orth), "completeness": float(comp)}


@dataclass(frozen=True)
class MeasurementOutcome:
    k: int
    p: float
    conditional_state: np.ndarray | None  # None for null outcomes

    @property
    def is_null(self) -> bool:
        return self.conditional_state is None


@dataclass
class CorrelationReport:
    mutual_information: float
    classical_J: float
    discord: float
    optimal_measurement: ProjectiveMeasurement
    grid_J: float | None = None
    probes: int = 0
    history: list[float] = field(default_factory=list, repr=False)


def basis_measurement(basis) -> ProjectiveMeasurement:
    """Projectors onto the columns of a unitary ``basis``."""
    basis = np.asarray(basis, dtype=complex)
    return ProjectiveMeasurement(tuple(np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1])))


def computational_measurement(d: int) -> ProjectiveMeasurement:
    return basis_measurement(np.eye(d))


def n_basis_params(d_a: int) -> int:
    return d_a * (d_a - 1)


def basis_unitary(params, d_a: int) -> np.ndarray:
    """Unitary whose columns span the measurement basis.

    Parameters come in (angle, phase) pairs, one pair per index pair i < j.
    For a qubit the single pair is the Bloch-sphere (theta, phi).
    """
    params = np.asarray(params, dtype=float).ravel()
    if params.size != n_basis_params(d_a):
        raise ValueError(f"expected {n_basis_params(d_a)} parameters for d_A={d_a}, got {params.size}")
    u = np.eye(d_a, dtype=complex)
    pairs = [(i, j) for i in range(d_a) for j in range(i + 1, d_a)]
    for n, (i, j) in enumerate(pairs):
        theta, phi = params[2 * n], params[2 * n + 1]
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        g = np.eye(d_a, dtype=complex)
        g[i, i] = c
        g[j, j] = c
        g[j, i] = np.exp(1j * phi) * s
        g[i, j] = -np.exp(-1j * phi) * s
        u = u @ g
    return u


def parametrize_basis(params, d_a: int) -> ProjectiveMeasurement:
    u = basis_unitary(params, d_a)
    m = basis_measurement(u)
    return ProjectiveMeasurement(m.projectors, np.asarray(params, dtype=float).copy())


def mutual_information(rho: Bipartite) -> float:
    return (
        von_neumann_entropy(rho.rho_s) + von_neumann_entropy(rho.rho_a) - von_neumann_entropy(rho.rho)
    )


def mutual_information_relative(rho: Bipartite) -> float:
    """Mutual information as D(rho_SA || rho_S (x) rho_A)."""
    return relative_entropy(rho.rho, tensor_product(rho.rho_s, rho.rho_a))


def _conditional_blocks(rho: Bipartite, vectors: np.ndarray) -> np.ndarray:
    """Unnormalized S states <v_k|_A rho |v_k>_A for each column v_k."""
    t = rho.rho.reshape(rho.d_s, rho.d_a, rho.d_s, rho.d_a)
    return np.einsum("ak,iajb,bk->kij", vectors.conj(), t, vectors)


def measure_ancilla(rho: Bipartite, m: ProjectiveMeasurement) -> list[MeasurementOutcome]:
    if m.dim != rho.d_a:
        raise ValueError(f"measurement acts on dimension {m.dim}, ancilla has {rho.d_a}")
    t = rho.rho.reshape(rho.d_s, rho.d_a, rho.d_s, rho.d_a)
    outcomes = []
    for k, proj in enumerate(m.projectors):
        # Tr_A[(1 x P) rho (1 x P)] = Tr_A[(1 x P) rho] for a projector
        block = np.einsum("ba,iajb->ij", proj, t)
        p = float(np.real(np.trace(block)))
        if p <= NULL_PROB:
            outcomes.append(MeasurementOutcome(k, max(p, 0.0), None))
        else:
            cond = block / p
            outcomes.append(MeasurementOutcome(k, p, 0.5 * (cond + dagger(cond))))
    return outcomes


def conditional_entropy_average(outcomes: list[MeasurementOutcome]) -> float:
    return sum(o.p * von_neumann_entropy(o.conditional_state) for o in outcomes if not o.is_null)


def extracted_information(rho: Bipartite, m: ProjectiveMeasurement) -> float:
    """J_pi = S(rho_S) - sum_k p_k S(rho_S|k)."""
    return von_neumann_entropy(rho.rho_s) - conditional_entropy_average(measure_ancilla(rho, m))


def _entropies_batch(blocks: np.ndarray) -> np.ndarray:
    """sum_k p_k S(block_k / p_k) for a stack of unnormalized blocks.

    Equals -sum over all eigenvalues of x ln x plus sum_k p_k ln p_k.
    """
    w = np.linalg.eigvalsh(blocks)
    w = np.clip(w, 0.0, None)
    p = w.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlx = np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0).sum(axis=-1)
        plp = np.where(p > NULL_PROB, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        # drop null outcomes entirely
        xlx = np.where(p > NULL_PROB, xlx, 0.0)
    return (-xlx + plp).sum(axis=-1)


def _qubit_vectors(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Stack of 2x2 bases, columns (v0, v1), for arrays of angles."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    v = np.empty(theta.shape + (2, 2), dtype=complex)
    v[..., 0, 0] = c
    v[..., 1, 0] = e * s
    v[..., 0, 1] = -np.conj(e) * s
    v[..., 1, 1] = c
    return v


def brute_force_J(rho: Bipartite, grid_steps: int = 180) -> float:
    """Exhaustive (theta, phi) grid maximum of J_pi for a qubit ancilla.

    theta takes ``grid_steps + 1`` values in [0, pi], phi ``2 * grid_steps``
    values in [0, 2 pi); 180 steps is a 1 degree grid.
    """
    return _grid_search(rho, grid_steps)[0]


def _grid_search(rho: Bipartite, grid_steps: int) -> tuple[float, np.ndarray]:
    if rho.d_a != 2:
        raise ValueError("grid search requires a qubit ancilla (d_A = 2)")
    theta = np.linspace(0.0, np.pi, grid_steps + 1)
    phi = np.arange(2 * grid_steps) * (np.pi / grid_steps)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    vecs = _qubit_vectors(tt, pp)
    t = rho.rho.reshape(rho.d_s, 2, rho.d_s, 2)
    blocks = np.einsum("nak,iajb,nbk->nkij", vecs.conj(), t, vecs)
    cond = _entropies_batch(blocks)
    j = von_neumann_entropy(rho.rho_s) - cond
    best = int(np.argmax(j))
    return float(j[best]), np.array([tt[best], pp[best]])


def _canonical(params: np.ndarray) -> np.ndarray:
    """Fold angle/phase pairs into theta in [0, 2pi), phi in [0, 2pi)."""
    return np.mod(params, 2 * np.pi)


@dataclass(frozen=True)
class SearchSettings:
    restarts: int = 32
    seed: int = 0
    grid_seed: tuple[int, int] = (24, 48)
    xatol: float = 1e-10
    fatol: float = 1e-15
    maxiter: int = 4000


def maximize_classical_correlations(rho: Bipartite, settings: SearchSettings | None = None) -> CorrelationReport:
    """Best J_pi over rank-1 projective ancilla measurements.

    Multi-start Nelder-Mead over the basis parameters; for a qubit ancilla one
    extra start comes from a coarse grid. The result is a certified lower
    bound on the true maximum.
    """
    settings = settings or SearchSettings()
    d_a = rho.d_a
    mi = mutual_information(rho)
    s_s = von_neumann_entropy(rho.rho_s)

    if d_a == 1:
        m = ProjectiveMeasurement((np.eye(1, dtype=complex),), np.zeros(0))
        j = extracted_information(rho, m)
        return CorrelationReport(mi, j, mi - j, m)

    n = n_basis_params(d_a)
    t = rho.rho.reshape(rho.d_s, d_a, rho.d_s, d_a)
    history: list[float] = []

    def j_of(params):
        u = basis_unitary(params, d_a)
        blocks = np.einsum("ak,iajb,bk->kij", u.conj(), t, u)
        val = s_s - float(_entropies_batch(blocks[None])[0])
        history.append(val)
        return val

    rng = np.random.default_rng(settings.seed)
    starts = [rng.uniform(0.0, 2 * np.pi, size=n) for _ in range(settings.restarts)]
    grid_j = None
    if d_a == 2:
        gt, gp = settings.grid_seed
        grid_j, gx = _grid_search(rho, gt)
        starts.insert(0, gx)

    candidates = []
    for x0 in starts:
        res = minimize(
            lambda x: -j_of(x), x0, method="Nelder-Mead",
            options={"xatol": settings.xatol, "fatol": settings.fatol, "maxiter": settings.maxiter},
        )
        candidates.append((-float(res.fun), _canonical(res.x)))

    best_val = max(c[0] for c in candidates)
    ties = [c for c in candidates if c[0] >= best_val - 1e-12]
    best_val, best_x = min(ties, key=lambda c: tuple(c[1]))
    # polish from the chosen point
    res = minimize(
        lambda x: -j_of(x), best_x, method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": settings.maxiter},
    )
    if -res.fun > best_val:
        best_val, best_x = -float(res.fun), _canonical(res.x)

    m = parametrize_basis(best_x, d_a)
    j = extracted_information(rho, m)
    return CorrelationReport(mi, j, mi - j, m, grid_J=grid_j, probes=len(history), history=history)


def quantum_discord(rho: Bipartite, settings: SearchSettings | None = None) -> float:
    return maximize_classical_correlations(rho, settings).discord
