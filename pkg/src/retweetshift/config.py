"""Run configuration: a single JSON file drives the whole pipeline.

Schema (all paths relative to the config file's directory unless absolute):

    {
      "records": "records.jsonl",
      "windows": {"t1": {"start": 0, "end": 100}, "t2": {...}},
      "activity_threshold": 5,
      "blocks": 2,
      "seed": 42,
      "mcmc": {"sweeps": 1000, "chains": 4, "epsilon": null,
               "init": "agglomerative", "early_stop_window": 50,
               "early_stop_tol": 1e-6},
      "lexicon": "lexicon.txt",          // omit for the built-in lexicon
      "anchors": {"realDonaldTrump": "republican", ...},
      "bootstrap": {"iterations": 10000, "subsample_fraction": 1.0},
      "histogram_bins": 20,
      "sentiment_originals_only": false,
      "alpha": 0.01
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .communities import McmcConfig
from .errors import ConfigError
from .ingest import TimeWindow


@dataclass
class RunConfig:
    records: str
    windows: list[TimeWindow]
    activity_threshold: int = 5
    blocks: int = 2
    seed: int = 0
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    lexicon: str | None = None
    anchors: dict[str, str] = field(default_factory=dict)
    bootstrap_iterations: int = 10000
    subsample_fraction: float = 1.0
    histogram_bins: int = 20
    sentiment_originals_only: bool = False
    alpha: float = 0.01


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def load_config(path: str, seed_override: int | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fp:
            raw = json.load(fp)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    base_dir = os.path.dirname(os.path.abspath(path))
    try:
        windows_raw = raw["windows"]
        records = raw["records"]
    except KeyError as exc:
        raise ConfigError(f"config missing required key {exc}") from exc
    if not isinstance(windows_raw, dict) or not windows_raw:
        raise ConfigError("config 'windows' must be a non-empty object")
    windows = []
    seen = set()
    for name, spec in windows_raw.items():
        if name in seen:
            raise ConfigError(f"duplicate window name {name!r}")
        seen.add(name)
        try:
            windows.append(TimeWindow(name=name, start=int(spec["start"]), end=int(spec["end"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"window {name!r}: {exc}") from exc
        except Exception as exc:  # TimeWindow start>=end raises DataError
            raise ConfigError(str(exc)) from exc

    seed = int(raw.get("seed", 0))
    if seed_override is not None:
        seed = seed_override
    mcmc_raw = raw.get("mcmc", {})
    if not isinstance(mcmc_raw, dict):
        raise ConfigError("config 'mcmc' must be an object")
    known = {"sweeps", "chains", "epsilon", "init", "early_stop_window", "early_stop_tol"}
    unknown = set(mcmc_raw) - known
    if unknown:
        raise ConfigError(f"unknown mcmc options: {sorted(unknown)}")
    mcmc = McmcConfig(seed=seed, **mcmc_raw)

    boot = raw.get("bootstrap", {})
    try:
        cfg = RunConfig(
            records=_resolve(base_dir, records),
            windows=windows,
            activity_threshold=int(raw.get("activity_threshold", 5)),
            blocks=int(raw.get("blocks", 2)),
            seed=seed,
            mcmc=mcmc,
            lexicon=_resolve(base_dir, raw["lexicon"]) if raw.get("lexicon") else None,
            anchors=dict(raw.get("anchors", {})),
            bootstrap_iterations=int(boot.get("iterations", 10000)),
            subsample_fraction=float(boot.get("subsample_fraction", 1.0)),
            histogram_bins=int(raw.get("histogram_bins", 20)),
            sentiment_originals_only=bool(raw.get("sentiment_originals_only", False)),
            alpha=float(raw.get("alpha", 0.01)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if cfg.activity_threshold < 0:
        raise ConfigError("activity_threshold must be >= 0")
    if cfg.blocks < 1:
        raise ConfigError("blocks must be >= 1")
    if not 0.0 < cfg.subsample_fraction <= 1.0:
        raise ConfigError("bootstrap.subsample_fraction must be in (0, 1]")
    return cfg


def window_by_name(cfg: RunConfig, name: str) -> TimeWindow:
    for w in cfg.windows:
        if w.name == name:
            return w
    raise ConfigError(f"window {name!r} not defined in config")
