"""Experiment configuration files (JSON, versioned, strict)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Any

from .feynman import ComplexMeasure, CylinderFunctional, functional_from_betas
from .kernel_functions import PRESETS, KernelPair, preset

SCHEMA_VERSION = 1
MC_GRID = 256


class ConfigError(ValueError):
    """Malformed configuration; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ExperimentConfig:
    schema: int = SCHEMA_VERSION
    kernel: Any = "drifted"
    grid_M: int = MC_GRID
    T: float = 1.0
    seed: int = 42
    N: int = 100_000
    workers: int = 1
    tuple: list = field(default_factory=lambda: [1.0])
    functional: dict | None = None
    output: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("$", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in doc:
            if key not in known:
                raise ConfigError(f"$.{key}", "unknown field")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("$", f"invalid JSON ({exc})") from None
        return cls.from_dict(doc)

    def validate(self) -> None:
        if self.schema != SCHEMA_VERSION:
            raise ConfigError("$.schema", f"unsupported schema version {self.schema!r}")
        for name in ("grid_M", "N", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"$.{name}", "must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("$.seed", "must be a 64-bit unsigned integer")
        if isinstance(self.kernel, str):
            if self.kernel not in PRESETS:
                raise ConfigError("$.kernel", f"unknown preset {self.kernel!r}")
        elif not isinstance(self.kernel, dict):
            raise ConfigError("$.kernel", "must be a preset name or a kernel document")
        if not isinstance(self.tuple, list) or not self.tuple:
            raise ConfigError("$.tuple", "must be a non-empty list of paths-times")
        if self.functional is not None and not isinstance(self.functional, dict):
            raise ConfigError("$.functional", "must be an object")

    def kernel_pair(self) -> KernelPair:
        if isinstance(self.kernel, str):
            return preset(self.kernel, M=self.grid_M, T=self.T)
        try:
            return KernelPair.from_dict(self.kernel)
        except ValueError as exc:
            raise ConfigError("$.kernel", str(exc)) from None


FUNCTIONAL_FIELDS = {"beta_times", "s", "atoms", "lambda", "q", "q0", "rect"}


def parse_complex(value, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(path, "expected a number or a [re, im] pair")


def cylinder_functional(spec: dict, kp: KernelPair) -> CylinderFunctional:
    """Build a functional from ``{"beta_times": [...], "s": [...], "atoms": [{"v": [...], "weight": w}]}``.

    ``G`` is the Gram-Schmidt orthonormalisation of the listed ``beta_t``.
    """
    base = "$.functional"
    for key in spec:
        if key not in FUNCTIONAL_FIELDS:
            raise ConfigError(f"{base}.{key}", "unknown field")
    for key in ("beta_times", "s", "atoms"):
        if key not in spec:
            raise ConfigError(f"{base}.{key}", "required")
    atoms = spec["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise ConfigError(f"{base}.atoms", "must be a non-empty list")
    locs, wts = [], []
    for i, atom in enumerate(atoms):
        p = f"{base}.atoms[{i}]"
        if not isinstance(atom, dict) or set(atom) - {"v", "weight"} or "v" not in atom:
            raise ConfigError(p, "atom needs 'v' and optional 'weight'")
        locs.append(atom["v"])
        wts.append(parse_complex(atom.get("weight", 1.0), f"{p}.weight"))
    try:
        return functional_from_betas(spec["beta_times"], spec["s"], ComplexMeasure.point_masses(locs, wts), kp)
    except ValueError as exc:
        raise ConfigError(base, str(exc)) from None
