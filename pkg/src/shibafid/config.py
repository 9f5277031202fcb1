"""Run configuration: a JSON tree mapped onto the parameter dataclasses.

Schema (all keys optional, defaults shown by ``default_config``)::

    {
      "model":   {"t", "eps_f", "g", "omega_d", "j_coupling", "phi",
                  "temperature", "impurity_site"},
      "lattice": {"width", "height", "boundary"},
      "sweep":   {"j_min", "j_max", "j_step", "delta_j", "mode",
                  "sites", "warm_start"},
      "solver":  {"mixing", "tol", "max_iter"},
      "output_dir": str, "seed": int, "workers": int | null
    }

Command-line ``--set section.key=value`` overrides beat file values; the
``SHIBAFID_OUTPUT_DIR`` environment variable beats both for the output
directory.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .bdg import SolverOptions
from .errors import ConfigError
from .lattice import LatticeConfig
from .model import ModelParams
from .sweep import SweepPlan

OUTPUT_DIR_ENV = "SHIBAFID_OUTPUT_DIR"

_SECTIONS = {
    "model": ModelParams,
    "lattice": LatticeConfig,
    "sweep": SweepPlan,
    "solver": SolverOptions,
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = ModelParams()
    lattice: LatticeConfig = LatticeConfig()
    sweep: SweepPlan = SweepPlan()
    solver: SolverOptions = SolverOptions()
    output_dir: str = "runs"
    seed: int = 7
    workers: int | None = None

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV, self.output_dir))


def default_config() -> RunConfig:
    return RunConfig()


def _build_section(cls, payload: dict, section: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"section {section!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in section {section!r}")
    coerced = dict(payload)
    if "sites" in coerced and coerced["sites"] is not None:
        coerced["sites"] = tuple(int(s) for s in coerced["sites"])
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid section {section!r}: {err}") from err


def config_from_dict(tree: dict) -> RunConfig:
    if not isinstance(tree, dict):
        raise ConfigError("configuration root must be an object")
    known = set(_SECTIONS) | {"output_dir", "seed", "workers"}
    unknown = set(tree) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    kwargs = {}
    for section, cls in _SECTIONS.items():
        if section in tree:
            kwargs[section] = _build_section(cls, tree[section], section)
    if "output_dir" in tree:
        kwargs["output_dir"] = str(tree["output_dir"])
    if "seed" in tree:
        kwargs["seed"] = int(tree["seed"])
    if "workers" in tree:
        kwargs["workers"] = None if tree["workers"] is None else int(tree["workers"])
    return RunConfig(**kwargs)


def config_to_dict(config: RunConfig) -> dict:
    tree = {}
    for section in _SECTIONS:
        block = dataclasses.asdict(getattr(config, section))
        if "sites" in block:
            block["sites"] = list(block["sites"])
        tree[section] = block
    tree["output_dir"] = config.output_dir
    tree["seed"] = config.seed
    tree["workers"] = config.workers
    return tree


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        tree = json.loads(path.read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    return config_from_dict(tree)


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("null", "none"):
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare string (e.g. boundary=open)


def apply_overrides(config: RunConfig, overrides) -> RunConfig:
    """Apply ``section.key=value`` strings on top of a configuration."""
    tree = config_to_dict(config)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        key, _, raw = item.partition("=")
        value = _parse_scalar(raw.strip())
        parts = key.strip().split(".")
        node = tree
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"override {item!r} addresses unknown section {part!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"override {item!r} addresses unknown key {parts[-1]!r}")
        node[parts[-1]] = value
    return config_from_dict(tree)
