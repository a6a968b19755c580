from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..operators import Bipartite, StateError, symmetrize
from .presets import PresetError, parse_matrix, resolve

EXPERIMENTS = ("identities", "feedback_budget", "discord_stroke", "isothermal_sweep", "ergotropy_compare")


class ConfigError(ValueError):
    """Invalid config; ``field`` names the offending entry (None for parse errors)."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column


@dataclass
class ExperimentConfig:
    experiment: str
    state: dict
    beta: list[float]
    N: list[int] = field(default_factory=lambda: [1000])
    seed: int = 0
    output_dir: str = "qthermo-out"
    k_B: float = 1.0
    alpha: float = 1e-10
    h_s: Any = "ladder"
    h_a: Any = "ladder"
    map: dict = field(default_factory=lambda: {"kind": "full_thermalization"})
    restarts: int = 32

    def to_dict(self) -> dict:
        return asdict(self)

    def build_state(self) -> Bipartite:
        return resolve(self.state)

    def hamiltonians(self, rho: Bipartite) -> tuple[np.ndarray, np.ndarray]:
        return _hamiltonian(self.h_s, rho.d_s, "h_s"), _hamiltonian(self.h_a, rho.d_a, "h_a")


def _hamiltonian(spec, d: int, name: str) -> np.ndarray:
    if spec == "ladder":
        return np.diag(np.arange(d, dtype=float)).astype(complex)
    if spec == "zero":
        return np.zeros((d, d), dtype=complex)
    try:
        h = symmetrize(parse_matrix(spec, name))
    except (PresetError, StateError) as exc:
        raise ConfigError(str(exc), field=name) from exc
    if h.shape != (d, d):
        raise ConfigError(f"{name}: expected a {d}x{d} matrix", field=name)
    return h


def _sweep(value, name: str, kind) -> list:
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"{name}: sweep list is empty", field=name)
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {v!r}", field=name)
        if kind is int and float(v) != int(v):
            raise ConfigError(f"{name}: expected an integer, got {v!r}", field=name)
        out.append(kind(v))
    return out


def load_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config, filling defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}", line=exc.lineno, column=exc.colno
        ) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")

    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown field(s): {sorted(unknown)}", field=sorted(unknown)[0])
    for req in ("experiment", "state", "beta"):
        if req not in doc:
            raise ConfigError(f"{req}: missing", field=req)
    if doc["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {EXPERIMENTS}", field="experiment")

    cfg = ExperimentConfig(
        experiment=doc["experiment"],
        state=doc["state"],
        beta=_sweep(doc["beta"], "beta", float),
        N=_sweep(doc.get("N", 1000), "N", int),
        seed=int(doc.get("seed", 0)),
        output_dir=str(doc.get("output_dir", "qthermo-out")),
        k_B=float(doc.get("k_B", 1.0)),
        alpha=float(doc.get("alpha", 1e-10)),
        h_s=doc.get("h_s", "ladder"),
        h_a=doc.get("h_a", "ladder"),
        map=doc.get("map", {"kind": "full_thermalization"}),
        restarts=int(doc.get("restarts", 32)),
    )
    if any(b <= 0 for b in cfg.beta):
        raise ConfigError("beta: values must be positive", field="beta")
    if any(n < 1 for n in cfg.N):
        raise ConfigError("N: values must be at least 1", field="N")
    if cfg.k_B <= 0:
        raise ConfigError("k_B: must be positive", field="k_B")
    if not (0 < cfg.alpha <= 1e-3):
        raise ConfigError("alpha: must lie in (0, 1e-3]", field="alpha")
    if cfg.restarts < 1:
        raise ConfigError("restarts: must be at least 1", field="restarts")
    if not isinstance(cfg.map, dict) or cfg.map.get("kind") not in ("full_thermalization", "partial_thermalization"):
        raise ConfigError("map.kind: must be full_thermalization or partial_thermalization", field="map.kind")
    lam = cfg.map.get("lambda", 1.0)
    if isinstance(lam, bool) or not isinstance(lam, (int, float)) or not (0 < lam <= 1):
        raise ConfigError("map.lambda: must lie in (0, 1]", field="map.lambda")

    try:
        rho = cfg.build_state()
    except PresetError as exc:
        raise ConfigError(str(exc), field=exc.field) from exc
    except StateError as exc:
        raise ConfigError(f"state: {exc}", field="state.matrix") from exc
    cfg.hamiltonians(rho)
    return cfg
