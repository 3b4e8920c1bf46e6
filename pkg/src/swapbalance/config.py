"""Run configuration: one INI file plus command-line overrides.

Sections map onto the library's config dataclasses::

    [run]        seed, workers, out_dir
    [generator]  GenConfig fields except seed (weights as "g, f, s, w")
    [sim]        SimConfig fields
    [env]        representation, width, height, max_steps, max_changes, n_sims, sim_seed
    [reward]     alpha, mode, balance_tolerance
    [train]      TrainConfig fields except seed (hidden as "64, 64")
    [calibrate]  n_max, threshold, levels
    [eval]       levels, sampling

Unknown sections or keys are rejected. ``RunConfig.to_ini`` renders the
effective configuration, which every command writes next to its outputs.
"""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .balance import RewardConfig
from .generator import GenConfig
from .ppo import TrainConfig
from .sim import SimConfig
from .swap_env import EnvConfig

ENV_OUT_DIR = "SWAPBALANCE_OUT_DIR"
ENV_WORKERS = "SWAPBALANCE_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrateSettings:
    n_max: int = 30
    threshold: float = 0.05
    levels: int = 100


@dataclass(frozen=True)
class EvalSettings:
    levels: int = 100
    sampling: bool = False


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    workers: int = 1
    out_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    run: RunSettings = field(default_factory=RunSettings)
    generator: GenConfig = field(default_factory=GenConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    calibrate: CalibrateSettings = field(default_factory=CalibrateSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)

    def env_config(self) -> EnvConfig:
        """Env config with the shared sim and reward blocks folded in."""
        return replace(self.env, sim=self.sim, reward=self.reward)

    def gen_config(self) -> GenConfig:
        return replace(self.generator, width=self.env.width, height=self.env.height)

    def train_config(self) -> TrainConfig:
        return replace(self.train, seed=self.run.seed)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for section, obj in self._sections():
            parser[section] = {name: _format(getattr(obj, name)) for name in _keys(section, obj)}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def _sections(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


# fields that live elsewhere in the file or are set by the run seed
_HIDDEN = {
    "generator": {"seed", "width", "height"},
    "env": {"sim", "reward"},
    "train": {"seed"},
}


def _keys(section: str, obj) -> list[str]:
    return [f.name for f in fields(obj) if f.name not in _HIDDEN.get(section, set())]


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def _parse(text: str, template, where: str):
    text = text.strip()
    try:
        if isinstance(template, bool):
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(template, int):
            return int(text)
        if isinstance(template, float):
            return float(text)
        if isinstance(template, tuple):
            parts = [p for p in text.replace(",", " ").split() if p]
            if len(parts) != len(template):
                raise ValueError(f"expected {len(template)} values")
            return tuple(_parse(p, t, where) for p, t in zip(parts, template))
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r} ({exc})") from None


def apply_overrides(cfg: RunConfig, values: dict[str, dict[str, str]], origin: str) -> RunConfig:
    """Return ``cfg`` with ``{section: {key: text}}`` applied; unknown names are errors."""
    known = {f.name for f in fields(cfg)}
    updates = {}
    for section, items in values.items():
        if section not in known:
            raise ConfigError(f"{origin}: unknown section [{section}]; "
                              f"valid sections: {', '.join(sorted(known))}")
        block = getattr(cfg, section)
        allowed = _keys(section, block)
        changes = {}
        for key, text in items.items():
            if key not in allowed:
                raise ConfigError(f"{origin}: unknown key {key!r} in [{section}]; "
                                  f"valid keys: {', '.join(allowed)}")
            changes[key] = _parse(text, getattr(block, key), f"{origin} [{section}] {key}")
        try:
            updates[section] = replace(block, **changes)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{origin} [{section}]: {exc}") from None
    return replace(cfg, **updates)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Defaults, then the INI file (if any), then environment variables."""
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        values = {s: dict(parser[s]) for s in parser.sections()}
        cfg = apply_overrides(cfg, values, str(path))
    env_values = {}
    if os.environ.get(ENV_OUT_DIR):
        env_values["out_dir"] = os.environ[ENV_OUT_DIR]
    if os.environ.get(ENV_WORKERS):
        env_values["workers"] = os.environ[ENV_WORKERS]
    if env_values:
        cfg = apply_overrides(cfg, {"run": env_values}, "environment")
    return cfg
