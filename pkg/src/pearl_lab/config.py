"""JSON config loading with a strict schema.

The CLI consumes three config kinds, all documented in ``config.schema.json``
next to this module: ``run`` (decode prompts with one engine), ``sweep``
(Monte Carlo gamma sweep) and ``train`` (fit and serialize n-gram models).
Validation is strict: unknown keys anywhere are an error, and every error is
reported with the JSON path of the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Tuple, Union

import jsonschema

from .simulator import TimingParams


class ConfigError(ValueError):
    """A config file failed schema validation or semantic checks.

    Attributes:
        path: JSON path of the offending field, e.g. "$.model.ngram.corpus".
    """

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"config error at {path}: {message}")


def _schema() -> dict:
    with resources.files("pearl_lab").joinpath("config.schema.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_json(path: str) -> dict:
    # Missing files surface as OSError (exit code 3); broken JSON is a config
    # error (exit code 2).
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("$", "top level must be a JSON object")
    return doc


def _validate(doc: dict, kind: str) -> None:
    schema = _schema()
    sub = {"$ref": f"#/$defs/{kind}", "$defs": schema["$defs"]}
    validator = jsonschema.Draft202012Validator(sub)
    errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise ConfigError(first.json_path, first.message)


@dataclass(frozen=True)
class NGramSpec:
    corpus: str
    draft_order: int
    target_order: int
    smoothing: float = 0.5


@dataclass(frozen=True)
class SyntheticSpec:
    alpha: float
    vocab: int = 64


ModelSpec = Union[NGramSpec, SyntheticSpec]


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated 'run' config."""

    engine: str
    max_new_tokens: int
    seed: int
    model: ModelSpec
    timing: TimingParams
    gamma: Optional[int] = None
    greedy: bool = False
    prompts: Optional[str] = None
    out_dir: Optional[str] = None


@dataclass(frozen=True)
class SweepConfig:
    alphas: Tuple[float, ...]
    cs: Tuple[float, ...]
    gammas: Tuple[int, ...]
    seed: int
    steps: int = 100_000
    out_dir: Optional[str] = None


@dataclass(frozen=True)
class TrainConfig:
    corpus: str
    orders: Tuple[int, ...]
    smoothing: float = 0.5
    out_dir: Optional[str] = None


def _model_spec(doc: dict) -> ModelSpec:
    if "ngram" in doc:
        m = doc["ngram"]
        return NGramSpec(
            corpus=m["corpus"],
            draft_order=m["draft_order"],
            target_order=m["target_order"],
            smoothing=m.get("lambda", 0.5),
        )
    m = doc["synthetic"]
    return SyntheticSpec(alpha=m["alpha"], vocab=m.get("vocab", 64))


def load_run_config(path: str) -> ExperimentConfig:
    doc = _load_json(path)
    _validate(doc, "run")
    if doc["engine"] in ("sd", "pearl") and "gamma" not in doc:
        raise ConfigError("$.gamma", f"engine {doc['engine']!r} requires gamma")
    return ExperimentConfig(
        engine=doc["engine"],
        gamma=doc.get("gamma"),
        max_new_tokens=doc["max_new_tokens"],
        seed=doc["seed"],
        greedy=doc.get("greedy", False),
        prompts=doc.get("prompts"),
        model=_model_spec(doc["model"]),
        timing=TimingParams(t=doc["timing"]["t"], c=doc["timing"]["c"]),
        out_dir=doc.get("out_dir"),
    )


def load_sweep_config(path: str) -> SweepConfig:
    doc = _load_json(path)
    _validate(doc, "sweep")
    return SweepConfig(
        alphas=tuple(doc["alphas"]),
        cs=tuple(doc["cs"]),
        gammas=tuple(doc["gammas"]),
        steps=doc.get("steps", 100_000),
        seed=doc["seed"],
        out_dir=doc.get("out_dir"),
    )


def load_train_config(path: str) -> TrainConfig:
    doc = _load_json(path)
    _validate(doc, "train")
    return TrainConfig(
        corpus=doc["corpus"],
        orders=tuple(doc["orders"]),
        smoothing=doc.get("lambda", 0.5),
        out_dir=doc.get("out_dir"),
    )
