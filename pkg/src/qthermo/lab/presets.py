"""Named bipartite states used by configs and tests."""

from __future__ import annotations

import numpy as np

from ..operators import Bipartite, bipartite, ket_to_dm, random_density, tensor_product

PRESETS = {
    "bell": "maximally entangled |Phi+> on two qubits",
    "classical_mixture": "(|00><00| + |11><11|)/2",
    "werner": "p |Phi+><Phi+| + (1 - p) I/4, parameter p in [0, 1]",
    "product": "rho_S (x) rho_A from 'rho_s' and 'rho_a' (matrices or population lists)",
    "random_two_qubit": "Ginibre-random full-rank two-qubit state from 'seed'",
    "explicit": "'matrix' of [re, im] pairs with dimensions 'd_s' and 'd_a'",
}


class PresetError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def parse_matrix(data, field: str = "matrix") -> np.ndarray:
    """Nested rows of entries, each a real number or an [re, im] pair.

    A flat list of reals is read as the diagonal.
    """
    if not isinstance(data, list) or not data:
        raise PresetError(field, "expected a non-empty list")

    def entry(x):
        if isinstance(x, (int, float)) and not isinstance(x, bool):
            return complex(x)
        if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
            return complex(x[0], x[1])
        raise PresetError(field, f"bad matrix entry {x!r}")

    if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
        return np.diag([complex(x) for x in data])
    rows = [[entry(x) for x in row] if isinstance(row, list) else None for row in data]
    if any(r is None for r in rows) or len({len(r) for r in rows}) != 1 or len(rows[0]) != len(rows):
        raise PresetError(field, "matrix must be square")
    return np.array(rows, dtype=complex)


def bell() -> Bipartite:
    return bipartite(ket_to_dm([1, 0, 0, 1]), 2, 2)


def classical_mixture() -> Bipartite:
    return bipartite(np.diag([0.5, 0, 0, 0.5]), 2, 2)


def werner(p: float) -> Bipartite:
    if not (0.0 <= p <= 1.0):
        raise PresetError("state.p", f"werner parameter must lie in [0, 1], got {p}")
    return bipartite(p * ket_to_dm([1, 0, 0, 1]) + (1 - p) * np.eye(4) / 4, 2, 2)


def product(rho_s, rho_a) -> Bipartite:
    rho_s, rho_a = np.asarray(rho_s, dtype=complex), np.asarray(rho_a, dtype=complex)
    return bipartite(tensor_product(rho_s, rho_a), len(rho_s), len(rho_a))


def random_two_qubit(seed: int) -> Bipartite:
    return bipartite(random_density(4, np.random.default_rng(seed)), 2, 2)


def classical_quantum(probs, states_s, basis_a=None) -> Bipartite:
    """sum_k q_k rho_S^(k) (x) |k><k| in the columns of ``basis_a``."""
    d_a = len(probs)
    basis_a = np.eye(d_a) if basis_a is None else np.asarray(basis_a)
    rho = sum(
        q * tensor_product(s, np.outer(basis_a[:, k], basis_a[:, k].conj()))
        for k, (q, s) in enumerate(zip(probs, states_s))
    )
    return bipartite(rho, len(states_s[0]), d_a)


def resolve(spec: dict) -> Bipartite:
    """Build a state from a config ``state`` object."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise PresetError("state", "expected an object with a 'name'")
    name = spec["name"]
    if name == "bell":
        return bell()
    if name == "classical_mixture":
        return classical_mixture()
    if name == "werner":
        if "p" not in spec:
            raise PresetError("state.p", "missing")
        return werner(float(spec["p"]))
    if name == "product":
        for key in ("rho_s", "rho_a"):
            if key not in spec:
                raise PresetError(f"state.{key}", "missing")
        return product(parse_matrix(spec["rho_s"], "state.rho_s"), parse_matrix(spec["rho_a"], "state.rho_a"))
    if name == "random_two_qubit":
        return random_two_qubit(int(spec.get("seed", 0)))
    if name == "explicit":
        m = parse_matrix(spec.get("matrix"), "state.matrix")
        d_s = int(spec.get("d_s", len(m)))
        d_a = int(spec.get("d_a", 1))
        if d_s * d_a != len(m):
            raise PresetError("state.d_s", f"{d_s} x {d_a} does not match matrix dimension {len(m)}")
        return bipartite(m, d_s, d_a)
    raise PresetError("state.name", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
