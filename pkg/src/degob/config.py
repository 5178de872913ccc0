"""Run configuration for the command-line tools (JSON on disk)."""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import solver

COMMANDS = ("solve", "catalog", "weiss", "blowup", "fb", "epi", "reproduce")
N_MIN, N_MAX = 64, 1024


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    n: int = 256
    tol: float = solver.DEFAULT_TOL
    max_iter: int = solver.DEFAULT_MAX_ITER
    omega: object = "auto"
    variant: str = "obstacle"


@dataclass
class RunConfig:
    command: str = "solve"
    grid: GridConfig = field(default_factory=GridConfig)
    boundary: dict = field(default_factory=lambda: {"type": "catalog", "catalog": {"family": "single_cone",
                                                                                   "theta1": 0.5235987755982988}})
    output: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        n = self.grid.n
        if not isinstance(n, int) or n < N_MIN or n > N_MAX or n & (n - 1):
            raise ConfigError(f"n must be a power of two in [{N_MIN}, {N_MAX}], got {n!r}")
        if self.grid.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.grid.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        om = self.grid.omega
        if om != "auto" and not (isinstance(om, (int, float)) and 0.0 < om < 2.0):
            raise ConfigError(f"omega must be 'auto' or in (0, 2), got {om!r}")
        if self.grid.variant not in solver.VARIANTS:
            raise ConfigError(f"variant must be one of {solver.VARIANTS}")
        for key, path in self.output.items():
            check_writable(path, key)

    @classmethod
    def from_dict(cls, d, command=None):
        d = dict(d)
        grid = dict(d.pop("grid", {}))
        # flat keys as in {"n": 256, "tol": 1e-8, ...}
        for key in ("n", "tol", "max_iter", "omega", "variant"):
            if key in d:
                grid[key] = d.pop(key)
        try:
            g = GridConfig(**grid)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        known = {"command", "boundary", "output", "seed"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if command is not None:
            d["command"] = command
        return cls(grid=g, **d)

    @classmethod
    def load(cls, path, command=None):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, command)

    def to_dict(self):
        return asdict(self)


def check_writable(path: Optional[str], what="output"):
    if path is None:
        return
    folder = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
        raise ConfigError(f"{what} path {path!r} is not writable")
