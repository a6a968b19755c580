"""Dense operator algebra for small bipartite systems.

Matrices are plain complex ``numpy`` arrays. Composite indices are S-major,
i.e. basis state ``|s, a>`` sits at row ``s * d_a + a``, and every module in
the package relies on that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class StateError(ValueError):
    """Base class for invalid density matrices."""


class NotHermitianError(StateError):
    pass


class NotPSDError(StateError):
    pass


class TraceError(StateError):
    pass


class DomainError(ValueError):
    """A matrix function was evaluated outside its domain."""


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m)), initial=0.0))


def symmetrize(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(m + m^dagger)/2``; raise if ``m`` is not Hermitian within ``tol``."""
    m = as_matrix(m)
    defect = hermitian_defect(m)
    if defect > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |M - M^+| = {defect:.3e})")
    return 0.5 * (m + dagger(m))


@dataclass(frozen=True)
class Bipartite:
    """A density matrix on S (x) A with explicit subsystem dimensions."""

    rho: np.ndarray
    d_s: int
    d_a: int

    def __post_init__(self):
        if self.d_s < 1 or self.d_a < 1:
            raise ValueError("subsystem dimensions must be positive")
        if self.rho.shape != (self.d_s * self.d_a,) * 2:
            raise ValueError(
                f"state of shape {self.rho.shape} does not factor as {self.d_s} x {self.d_a}"
            )

    @property
    def dim(self) -> int:
        return self.d_s * self.d_a

    @property
    def rho_s(self) -> np.ndarray:
        return partial_trace(self, "A")

    @property
    def rho_a(self) -> np.ndarray:
        return partial_trace(self, "S")


def bipartite(rho, d_s: int, d_a: int) -> Bipartite:
    """Validate ``rho`` and attach subsystem dimensions."""
    return Bipartite(validate_density(rho), int(d_s), int(d_a))


def tensor_product(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(rho: Bipartite, over: str) -> np.ndarray:
    """Trace out subsystem ``over`` (``"A"`` or ``"S"``)."""
    if not isinstance(rho, Bipartite):
        raise TypeError("partial_trace expects a Bipartite state")
    t = rho.rho.reshape(rho.d_s, rho.d_a, rho.d_s, rho.d_a)
    if over == "A":
        return np.einsum("iaja->ij", t)
    if over == "S":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"unknown subsystem tag {over!r}; use 'S' or 'A'")


def hermitian_eigensystem(h) -> tuple[np.ndarray, np.ndarray]:
    """Ascending real eigenvalues and orthonormal eigenvector columns."""
    w, v = np.linalg.eigh(symmetrize(h))
    return w, v


def matrix_function(h, f) -> np.ndarray:
    """Apply the scalar function ``f`` to a Hermitian matrix through its spectrum.

    ``f`` must accept a real array. Non-finite values of ``f`` on the spectrum
    raise :class:`DomainError`.
    """
    w, v = hermitian_eigensystem(h)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=float)
    if not np.all(np.isfinite(fw)):
        raise DomainError(f"function undefined on spectrum {w}")
    return (v * fw) @ dagger(v)


def expm_h(h) -> np.ndarray:
    return matrix_function(h, np.exp)


def logm_h(h) -> np.ndarray:
    def _log(w):
        if np.any(w <= 0):
            raise DomainError(f"log of non-positive eigenvalue (min {w.min():.3e})")
        return np.log(w)

    return matrix_function(h, _log)


def validate_density(m) -> np.ndarray:
    """Return the symmetrized matrix if it is a density operator.

    Raises NotHermitianError, NotPSDError or TraceError.
    """
    m = symmetrize(m)
    w = np.linalg.eigvalsh(m)
    if w[0] < -PSD_TOL:
        raise NotPSDError(f"negative eigenvalue {w[0]:.3e}")
    tr = np.trace(m).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceError(f"trace is {tr!r}, expected 1")
    return m


def spectrum(rho) -> np.ndarray:
    """Eigenvalues of a state with noise-level negatives clamped to zero."""
    w = np.linalg.eigvalsh(symmetrize(rho))
    return np.clip(w, 0.0, None)


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def projector(vec) -> np.ndarray:
    return ket_to_dm(vec)


def trace_distance(a, b) -> float:
    w = np.linalg.eigvalsh(symmetrize(np.asarray(a) - np.asarray(b)))
    return 0.5 * float(np.sum(np.abs(w)))


def embed_s(op, d_a: int) -> np.ndarray:
    return np.kron(as_matrix(op), np.eye(d_a))


def embed_a(op, d_s: int) -> np.ndarray:
    return np.kron(np.eye(d_s), as_matrix(op))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed random state (full rank unless ``rank`` is given)."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ dagger(g)
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + dagger(rho))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + dagger(g))
