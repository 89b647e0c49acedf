"""INI-style experiment configuration with ``--key=value`` (or ``--key value``) overrides.

A config file holds ``[section]`` headers followed by ``key = value`` lines.
Overrides on the command line use either ``--section.key=value`` or a bare
``--key=value``; a bare key must be unique across sections or belong to
exactly one of the sections the running command prefers.
"""

from __future__ import annotations

import configparser
import copy
from pathlib import Path

from .errors import ConfigError

DEFAULTS = {
    "run": {
        "dataset": "",
        "mode": "transductive",
        "seeds": "0-9",
        "per_class_train": "20",
        "per_class_val": "30",
        "inductive_frac": "0.2",
        "plots": "true",
    },
    "teacher": {
        "lr": "0.01",
        "weight_decay": "0.0005",
        "dropout": "0",
        "hidden": "128",
        "max_epochs": "500",
        "patience": "50",
        "fan_out": "",
    },
    "student": {
        "hidden": "128",
        "lr": "0.01",
        "weight_decay": "0.0005",
        "dropout": "0.3",
        "max_epochs": "500",
        "patience": "50",
        "batch_size": "full",
    },
    "distill": {
        "variant": "glnn",
        "gamma": "",
        "iterations": "",
        "alpha": "0",
    },
    "sweep": {
        "gamma_grid": "0.1,0.9",
        "t_grid": "5,10,20,50",
    },
    "energy": {
        "invkd_gamma": "0.9",
    },
    "chains": {
        "num_chains": "30",
        "length": "8",
        "num_classes": "10",
        "noise": "0.1",
        "feature_dim": "32",
        "gamma": "0.9",
        "iterations": "20",
        "dropout": "0",
        "weight_decay": "0",
    },
    "synthetic": {
        "degree": "10",
        "h": "0.8",
        "num_classes": "5",
        "nodes_per_class": "50",
    },
    "theory": {
        "count": "50",
        "max_degree": "400",
        "margin": "0.001",
        "composition": "deterministic",
        "tolerance": "0.02",
    },
}


class Config:
    def __init__(self, values: dict[str, dict[str, str]]):
        self.values = values

    @classmethod
    def load(cls, path=None, overrides=(), prefer=()) -> "Config":
        """Defaults, then the file, then overrides.  ``prefer`` lists sections that win
        when a bare override key exists in several sections."""
        values = copy.deepcopy(DEFAULTS)
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"{p}: config file not found")
            parser = configparser.ConfigParser(interpolation=None)
            try:
                parser.read(p)
            except configparser.Error as exc:
                raise ConfigError(f"{p}: {exc}") from None
            for section in parser.sections():
                for key, val in parser.items(section):
                    cls._assign(values, section, key, val, source=str(p))
        for item in cls._pair_flags(overrides):
            cls._assign_flag(values, item, prefer)
        return cls(values)

    @staticmethod
    def _pair_flags(items):
        """Join ``--key value`` pairs into ``--key=value``."""
        items = list(items)
        out, i = [], 0
        while i < len(items):
            item = items[i]
            if (item.startswith("--") and "=" not in item and i + 1 < len(items)
                    and not items[i + 1].startswith("--")):
                out.append(f"{item}={items[i + 1]}")
                i += 2
            else:
                out.append(item)
                i += 1
        return out

    @staticmethod
    def _assign(values, section, key, val, source):
        if section not in values or key not in values[section]:
            raise ConfigError(f"{source}: unknown setting [{section}] {key}")
        values[section][key] = val.strip()

    @classmethod
    def _assign_flag(cls, values, item, prefer=()):
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r} (overrides look like --key=value)")
        name, val = item[2:].split("=", 1)
        name = name.replace("-", "_")
        if "." in name:
            section, key = name.split(".", 1)
        else:
            owners = [s for s, keys in values.items() if name in keys]
            if not owners:
                raise ConfigError(f"unknown setting {name!r}")
            if len(owners) > 1 and sum(o in prefer for o in owners) == 1:
                owners = [o for o in owners if o in prefer]
            if len(owners) > 1:
                raise ConfigError(f"{name!r} is ambiguous; use one of "
                                  + ", ".join(f"--{s}.{name}" for s in owners))
            section, key = owners[0], name
        cls._assign(values, section, key, val, source="command line")

    def raw(self, section, key) -> str:
        return self.values[section][key]

    def str(self, section, key) -> str:
        return self.raw(section, key)

    def float(self, section, key, optional=False):
        v = self.raw(section, key)
        if v == "" and optional:
            return None
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected a number, got {v!r}") from None

    def int(self, section, key, optional=False):
        v = self.raw(section, key)
        if v == "" and optional:
            return None
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected an integer, got {v!r}") from None

    def bool(self, section, key) -> bool:
        v = self.raw(section, key).lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key}: expected true/false, got {v!r}")

    def float_list(self, section, key) -> list[float]:
        try:
            out = [float(x) for x in self.raw(section, key).split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected comma-separated numbers") from None
        if not out:
            raise ConfigError(f"[{section}] {key}: list must not be empty")
        return out

    def int_list(self, section, key) -> list[int]:
        return [int(x) for x in self.float_list(section, key)]

    def seeds(self) -> list[int]:
        return parse_seeds(self.raw("run", "seeds"))

    def set(self, section, key, value) -> None:
        self.values[section][key] = str(value)

    def echo(self, *sections) -> dict:
        """Plain-dict copy of the given sections (all when none given)."""
        names = sections or tuple(self.values)
        return {s: dict(self.values[s]) for s in names}


def parse_seeds(text: str) -> list[int]:
    """"0-9" or "1,4,7" or a mix like "0-2,5"."""
    seeds = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = part.split("-", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise ConfigError(f"cannot parse seed list {text!r}") from None
    if not seeds:
        raise ConfigError("seed list must not be empty")
    if min(seeds) < 0:
        raise ConfigError("seeds must be non-negative")
    return seeds
