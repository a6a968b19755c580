"""Entropies, free energies, Gibbs states and ergotropy.

Entropies are in nats. With the default ``k_B = 1`` temperatures and work
share the energy unit of the Hamiltonian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .operators import dagger, hermitian_eigensystem, spectrum, symmetrize

SUPPORT_EIG_TOL = 1e-14
SUPPORT_WEIGHT_TOL = 1e-12


class InfiniteDivergenceError(ValueError):
    """support(rho) is not contained in support(sigma)."""


class GibbsRangeError(ArithmeticError):
    pass


class UnboundedBetaError(ValueError):
    """No finite temperature matches the entropy of a pure state."""


class NoSolutionError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalContext:
    beta: float
    k_B: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and positive, got {self.beta}")
        if not (math.isfinite(self.k_B) and self.k_B > 0):
            raise ValueError(f"k_B must be finite and positive, got {self.k_B}")

    @property
    def T(self) -> float:
        return 1.0 / (self.k_B * self.beta)

    @property
    def kT(self) -> float:
        return 1.0 / self.beta


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def von_neumann_entropy(rho) -> float:
    return float(-np.sum(_xlogx(spectrum(rho))))


def shannon_entropy(p) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    return float(-np.sum(_xlogx(p)))


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy D(rho || sigma) in nats."""
    rho = symmetrize(rho)
    sigma = symmetrize(sigma)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    s_w, s_v = hermitian_eigensystem(sigma)
    # weight of rho on each eigenvector of sigma
    weights = np.real(np.einsum("ij,ik,kj->j", s_v.conj(), rho, s_v))
    null = s_w < SUPPORT_EIG_TOL
    if np.any(weights[null] > SUPPORT_WEIGHT_TOL):
        raise InfiniteDivergenceError("rho has weight outside the support of sigma")
    cross = float(np.sum(weights[~null] * np.log(s_w[~null])))
    return -von_neumann_entropy(rho) - cross


def _energy(h, rho) -> float:
    return float(np.real(np.trace(np.asarray(h) @ np.asarray(rho))))


def gibbs_state(h, ctx: ThermalContext) -> np.ndarray:
    e, v = hermitian_eigensystem(h)
    x = -ctx.beta * e
    if not np.all(np.isfinite(x)):
        raise GibbsRangeError("beta * H overflows")
    # shift by the ground energy so the largest weight is exp(0)
    w = np.exp(x - x.max())
    w = w / w.sum()
    return (v * w) @ dagger(v)


def log_partition_function(h, ctx: ThermalContext) -> float:
    e, _ = hermitian_eigensystem(h)
    x = -ctx.beta * e
    m = x.max()
    return float(m + np.log(np.sum(np.exp(x - m))))


def relative_entropy_to_gibbs(rho, h, ctx: ThermalContext) -> float:
    """D(rho || rho_beta) using ln rho_beta = -beta H - ln Z exactly.

    The generic route loses digits when thermal populations underflow at
    large beta; the Gibbs state is always full rank.
    """
    return -von_neumann_entropy(rho) + ctx.beta * _energy(h, rho) + log_partition_function(h, ctx)


def noneq_free_energy(rho, h, ctx: ThermalContext) -> float:
    """F = Tr[H rho] - k_B T S(rho)."""
    return _energy(h, rho) - ctx.kT * von_neumann_entropy(rho)


def equilibrium_free_energy(h, ctx: ThermalContext) -> float:
    return -ctx.kT * log_partition_function(h, ctx)


def free_energy_forms(rho, h, ctx: ThermalContext) -> tuple[float, float]:
    """The two expressions of the isothermal work bound.

    Returns ``(F(rho) - F(rho_beta), k_B T D(rho || rho_beta))``.
    """
    g = gibbs_state(h, ctx)
    df = noneq_free_energy(rho, h, ctx) - noneq_free_energy(g, h, ctx)
    return df, ctx.kT * relative_entropy_to_gibbs(rho, h, ctx)


def isothermal_extractable_work(rho, h, ctx: ThermalContext) -> float:
    return free_energy_forms(rho, h, ctx)[0]


def passive_state(rho, h) -> np.ndarray:
    """Populations sorted descending onto energy levels sorted ascending."""
    r = np.sort(spectrum(rho))[::-1]
    # eigh returns ascending energies; a stable order keeps degenerate levels in solver order
    _, v = hermitian_eigensystem(h)
    return (v * r) @ dagger(v)


def ergotropy(rho, h) -> float:
    return _energy(h, rho) - _energy(h, passive_state(rho, h))


def passive_state_and_ergotropy(rho, h) -> tuple[np.ndarray, float]:
    p = passive_state(rho, h)
    return p, _energy(h, rho) - _energy(h, p)


def _gibbs_entropy(e: np.ndarray, beta: float) -> float:
    x = -beta * (e - e.min())
    w = np.exp(x)
    w = w / w.sum()
    return float(-np.sum(_xlogx(w)))


def beta_star(rho, h, beta_lo: float = 1e-6, beta_hi: float = 1e6) -> float:
    """Inverse temperature whose Gibbs state has the entropy of ``rho``."""
    e, _ = hermitian_eigensystem(h)
    d = len(e)
    s = von_neumann_entropy(rho)
    s_max = math.log(d)
    if abs(s - s_max) <= 1e-12:
        return 0.0
    if s <= 1e-12:
        raise UnboundedBetaError("pure state: beta* is unbounded")
    if np.ptp(e) <= 1e-12:
        raise NoSolutionError("degenerate Hamiltonian cannot match a non-maximal entropy")
    ground = int(np.sum(e - e.min() <= 1e-12))
    if s <= math.log(ground) + 1e-12:
        raise NoSolutionError("entropy below the ground-space entropy")

    def residual_lin(b):
        return _gibbs_entropy(e, b) - s

    if residual_lin(beta_lo) <= 0:
        # root lies in [0, beta_lo]
        root = brentq(residual_lin, 0.0, beta_lo, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    else:
        if residual_lin(beta_hi) > 0:
            raise UnboundedBetaError(f"beta* exceeds {beta_hi:g}")

        def residual_log(u):
            return residual_lin(math.exp(u))

        u = brentq(
            residual_log, math.log(beta_lo), math.log(beta_hi),
            xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500,
        )
        root = math.exp(u)
    if abs(residual_lin(root)) > 1e-10:
        raise NoSolutionError(f"entropy matching did not converge (residual {residual_lin(root):.2e})")
    return root


class ErgotropyComparison(NamedTuple):
    w_beta: float
    w_max: float
    gap: float
    gap_relative_entropy: float
    beta_star: float


def ergotropy_vs_isothermal(rho, h, ctx: ThermalContext) -> ErgotropyComparison:
    """Compare the isothermal bound with the entropy-preserving unitary bound.

    ``gap`` is ``w_beta - w_max``; ``gap_relative_entropy`` is the same quantity
    computed as ``k_B T D(rho_beta* || rho_beta)``.
    """
    bs = beta_star(rho, h)
    if bs == 0.0:
        g_star = np.eye(len(h)) / len(h)
    else:
        g_star = gibbs_state(h, ThermalContext(bs, ctx.k_B))
    w_beta = isothermal_extractable_work(rho, h, ctx)
    w_max = _energy(h, rho) - _energy(h, g_star)
    return ErgotropyComparison(
        w_beta, w_max, w_beta - w_max, ctx.kT * relative_entropy_to_gibbs(g_star, h, ctx), bs
    )
