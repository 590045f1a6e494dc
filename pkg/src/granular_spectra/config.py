"""Flat key = value run configuration with command-line overrides."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


# fields that do not alter results are excluded from the config hash
_UNHASHED = {"threads", "plots"}


@dataclass(frozen=True)
class RunConfig:
    """Scenario parameters; every field can be set in the config file or
    overridden with --set KEY=VALUE."""

    d: int = 2
    N: int = 32
    L: float | str = "auto"            # auto: box_sigmas * sqrt(T1)
    box_sigmas: float = 7.0
    sphere_points: int | str = "auto"  # auto: 16 (d=2) / 32 (d=3)
    cross_section: str = "constant:1.0"
    alphas: tuple = (1.0, 0.99, 0.97, 0.95)
    omega: tuple = (1.0, 0.0)
    rho_max: float = 0.3
    rho_steps: int = 16
    rho0: float | str = "auto"         # auto: 0.02 sqrt(T1)
    rho2: float | str = "auto"         # auto: 0.12 sqrt(T1)
    tol: float = 1e-6
    max_iter: int = 200_000
    newton_max: int = 25
    solver: str = "newton"
    dt: float | str = "auto"
    seed: int = 1234
    threads: int = 1
    plots: bool = True

    def validate(self) -> "RunConfig":
        if self.d not in (2, 3):
            raise ConfigError(f"d must be 2 or 3, got {self.d}")
        if self.N % 2 or self.N < 8:
            raise ConfigError(f"N must be even and >= 8, got {self.N}")
        if isinstance(self.L, float) and self.L <= 0:
            raise ConfigError("L must be positive or 'auto'")
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or any(not (0.0 < a <= 1.0) for a in alphas):
            raise ConfigError(f"alpha values must lie in (0, 1], got {alphas}")
        given = np.asarray(self.omega, dtype=float)
        if given.size > self.d:
            raise ConfigError(f"omega must be a nonzero {self.d}-vector")
        om = np.zeros(self.d)
        om[:given.size] = given  # short vectors are zero-padded
        if not np.linalg.norm(om) > 0:
            raise ConfigError(f"omega must be a nonzero {self.d}-vector")
        om = tuple(om / np.linalg.norm(om))
        if self.rho_max <= 0 or self.rho_steps < 1:
            raise ConfigError("rho range must be nonempty")
        if self.solver not in ("newton", "explicit"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return replace(self, alphas=alphas, omega=om)

    # ------------- parsing -------------

    @staticmethod
    def _parse_value(name: str, text: str):
        text = text.strip()
        if name in ("alphas", "omega"):
            return tuple(float(x) for x in text.split(",") if x.strip())
        if name in ("L", "rho0", "rho2", "dt", "sphere_points"):
            if text == "auto":
                return "auto"
            return int(text) if name == "sphere_points" else float(text)
        if name in ("d", "N", "rho_steps", "max_iter", "newton_max", "seed", "threads"):
            return int(text)
        if name in ("box_sigmas", "rho_max", "tol"):
            return float(text)
        if name == "plots":
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ConfigError(f"cannot parse boolean {text!r}")
        return text

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = cls._parse_value(key, val)
        return cls(**values).validate()

    def with_overrides(self, pairs) -> "RunConfig":
        known = {f.name for f in fields(self)}
        values = {}
        for pair in pairs or ():
            if "=" not in pair:
                raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
            key, _, val = pair.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = self._parse_value(key, val)
        return replace(self, **values).validate() if values else self

    # ------------- canonical form -------------

    def canonical_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name in _UNHASHED:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]
