"""Experiment configuration files.

A config is a YAML mapping. Every key is optional; omitted ones take the
defaults below (the evolution defaults are the standard MGE settings)::

    seed: 0                 # master seed
    repeats: 30
    out_dir: runs
    evolution: {mu: 200, generations: 500, p_c: 0.9, ...}
    dataset: {kind: csv, path: data.csv, label_column: -1, train_fraction: 0.8}
    grammar: {weight_digits: null, file: null}
    analysis: {methods: [MGE, GE_BASELINE], samples: 100000, ...}

Validation errors name the offending field by its dotted path.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .evolution import EvolutionConfig
from .mapping import Variant


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists ``path: message`` strings."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid config:\n  " + "\n  ".join(problems))


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "csv"            # csv | blobs | moons
    path: str | None = None
    label_column: int | str = -1
    has_header: bool = True
    n: int = 240
    d: int = 2
    c: int = 2
    separation: float = 4.0
    noise: float = 1.0
    train_fraction: float = 0.8
    stratify: bool = False
    normalize: bool = True


@dataclass(frozen=True)
class GrammarSpec:
    weight_digits: int | None = None
    file: str | None = None


@dataclass(frozen=True)
class AnalysisSpec:
    methods: tuple[str, ...] = ("MGE", "GE_BASELINE")
    d: int = 30
    c: int = 2
    weight_digits: int | None = 3
    samples: int = 100_000
    neuron_counts: tuple[int, ...] = tuple(range(2, 10))
    per_cell_samples: int = 1000
    hamming: tuple[int, ...] = (1, 2)
    invalid_mutants: str = "empty_tree"
    ge_tail: bool = False
    max_attempts: int = 5_000_000
    generations: int = 100
    mu: int = 50
    repeats: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    repeats: int = 30
    out_dir: str = "runs"
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    grammar: GrammarSpec = field(default_factory=GrammarSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["evolution"].pop("seed")  # per-repeat seeds derive from the master seed
        return _plain(out)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


_SECTIONS = {"evolution": EvolutionConfig, "dataset": DatasetSpec,
             "grammar": GrammarSpec, "analysis": AnalysisSpec}
_OPTIONAL = {"weight_digits", "path", "file"}
_TOP = {"seed": int, "repeats": int, "out_dir": str}


def _coerce(value, default, path: str, problems: list[str]):
    """Coerce a YAML value to the type of ``default``; record a problem on failure."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        problems.append(f"{path}: expected true/false, got {value!r}")
        return default
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            problems.append(f"{path}: expected a list, got {value!r}")
            return default
        proto = default[0] if default else value[0] if value else None
        return tuple(_coerce(v, proto, f"{path}[{i}]", problems) if proto is not None else v
                     for i, v in enumerate(value))
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        problems.append(f"{path}: expected an integer, got {value!r}")
        return default
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        problems.append(f"{path}: expected a number, got {value!r}")
        return default
    return value


def _section(cls, raw, path: str, problems: list[str]):
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        problems.append(f"{path}: expected a mapping")
        return {}
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    out = {}
    for key, value in raw.items():
        if key not in names or (cls is EvolutionConfig and key == "seed"):
            problems.append(f"{path}.{key}: unknown field")
            continue
        default = getattr(defaults, key)
        if value is None and key in _OPTIONAL:
            out[key] = None
            continue
        if key == "label_column" and isinstance(value, str):
            out[key] = value  # a header name instead of a position
        elif default is None:
            # optional fields: weight_digits is an int, the rest are strings
            out[key] = _coerce(value, 0 if key == "weight_digits" else "", f"{path}.{key}", problems)
        else:
            out[key] = _coerce(value, default, f"{path}.{key}", problems)
    return out


def _check_dataset(ds: DatasetSpec, problems: list[str]):
    if ds.kind not in ("csv", "blobs", "moons"):
        problems.append(f"dataset.kind: must be csv, blobs or moons, got {ds.kind!r}")
    if not 0 < ds.train_fraction < 1:
        problems.append("dataset.train_fraction: must lie in (0, 1)")
    if ds.kind in ("blobs", "moons") and ds.n < 4:
        problems.append("dataset.n: must be >= 4")
    if ds.kind == "blobs":
        if ds.d < 1:
            problems.append("dataset.d: must be >= 1")
        if ds.c < 2:
            problems.append("dataset.c: must be >= 2")


def _check_analysis(a: AnalysisSpec, problems: list[str]):
    for i, m in enumerate(a.methods):
        try:
            Variant.parse(m)
        except ValueError:
            problems.append(f"analysis.methods[{i}]: unknown method {m!r}")
    for name in ("d", "c", "samples", "per_cell_samples", "max_attempts", "mu", "repeats"):
        if getattr(a, name) < 1:
            problems.append(f"analysis.{name}: must be >= 1")
    if a.generations < 0:
        problems.append("analysis.generations: must be >= 0")
    if a.weight_digits is not None and a.weight_digits < 1:
        problems.append("analysis.weight_digits: must be >= 1")
    if any(k not in (1, 2) for k in a.hamming):
        problems.append("analysis.hamming: entries must be 1 or 2")
    if any(n < 1 for n in a.neuron_counts):
        problems.append("analysis.neuron_counts: entries must be >= 1")
    if a.invalid_mutants not in ("empty_tree", "exclude"):
        problems.append("analysis.invalid_mutants: must be empty_tree or exclude")


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a mapping"])
    problems: list[str] = []
    top = {}
    for key, value in raw.items():
        if key in _TOP:
            top[key] = _coerce(value, _TOP[key](), key, problems) if _TOP[key] is not str else str(value)
        elif key not in _SECTIONS:
            problems.append(f"{key}: unknown field")
    parts = {name: _section(cls, raw.get(name), name, problems) for name, cls in _SECTIONS.items()}
    if top.get("repeats", 1) < 1:
        problems.append("repeats: must be >= 1")
    variant = parts["evolution"].get("variant", "MGE")
    try:
        Variant.parse(variant)
    except ValueError:
        problems.append(f"evolution.variant: unknown variant {variant!r}")
        parts["evolution"].pop("variant")
    try:
        evolution = EvolutionConfig(**parts["evolution"])
    except ValueError as exc:
        # EvolutionConfig reports "field: message"
        problems.extend(f"evolution.{p.strip()}" for p in str(exc).split(";"))
        evolution = EvolutionConfig()
    dataset = DatasetSpec(**parts["dataset"])
    grammar = GrammarSpec(**parts["grammar"])
    analysis = AnalysisSpec(**parts["analysis"])
    _check_dataset(dataset, problems)
    _check_analysis(analysis, problems)
    if grammar.weight_digits is not None and grammar.weight_digits < 1:
        problems.append("grammar.weight_digits: must be >= 1")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(evolution=evolution, dataset=dataset, grammar=grammar,
                            analysis=analysis, **top)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"<file>: YAML syntax error: {exc}"]) from None
    cfg = config_from_dict(raw)
    # relative dataset paths are resolved against the config file's folder
    if cfg.dataset.path and not Path(cfg.dataset.path).is_absolute():
        resolved = str((path.parent / cfg.dataset.path).resolve())
        cfg = dataclasses.replace(cfg, dataset=dataclasses.replace(cfg.dataset, path=resolved))
    return cfg


def dump_config(cfg: ExperimentConfig, include_out_dir: bool = True) -> str:
    doc = cfg.to_dict()
    if not include_out_dir:
        doc.pop("out_dir")
    return yaml.safe_dump(doc, sort_keys=False)

