"""Lab configuration: defaults, JSON files and the FOCKSTOP_SEED override."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace

from ..errors import ConfigurationError
from ..fock import DENSE_MAX_CELLS, MAX_CELLS

SEED_ENV = "FOCKSTOP_SEED"
DEFAULT_SEED = 20_240_917


@dataclass(frozen=True)
class LabConfig:
    n_cells: int = 6
    t_max: float = 1.0
    seed: int = DEFAULT_SEED
    cases_per_identity: int = 100
    tol_exact: float | None = None  # None means 1e-10 * 2**n_cells
    refinement_levels: int = 3
    converge_base_cells: int = 4
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.n_cells, int) or not 1 <= self.n_cells <= DENSE_MAX_CELLS:
            raise ConfigurationError(f"n_cells must be an integer in 1..{DENSE_MAX_CELLS}")
        if not self.t_max > 0:
            raise ConfigurationError("t_max must be positive")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if not isinstance(self.cases_per_identity, int) or self.cases_per_identity < 1:
            raise ConfigurationError("cases_per_identity must be a positive integer")
        if self.tol_exact is not None and not self.tol_exact >= 0:
            raise ConfigurationError("tol_exact must be non-negative")
        if not isinstance(self.refinement_levels, int) or self.refinement_levels < 1:
            raise ConfigurationError("refinement_levels must be a positive integer")
        if not isinstance(self.converge_base_cells, int) or self.converge_base_cells < 1:
            raise ConfigurationError("converge_base_cells must be a positive integer")
        if self.converge_base_cells << (self.refinement_levels - 1) > MAX_CELLS:
            raise ConfigurationError(
                f"finest convergence grid has {self.converge_base_cells << (self.refinement_levels - 1)} cells;"
                f" the cap is {MAX_CELLS}"
            )
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigurationError("workers must be a positive integer")

    @property
    def tolerance(self) -> float:
        return 1e-10 * 2**self.n_cells if self.tol_exact is None else float(self.tol_exact)

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(data: dict) -> dict:
    known = {f.name for f in fields(LabConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(data)
    if "t_max" in out and isinstance(out["t_max"], int):
        out["t_max"] = float(out["t_max"])
    return out


def load_config(path=None, env: dict | None = None, **overrides) -> LabConfig:
    """Defaults, then the JSON file, then the environment seed, then explicit overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
    data = _coerce(data)
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            data["seed"] = int(env[SEED_ENV])
        except ValueError as exc:
            raise ConfigurationError(f"{SEED_ENV} must be an integer") from exc
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return LabConfig(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def with_changes(config: LabConfig, **changes) -> LabConfig:
    return replace(config, **changes)
