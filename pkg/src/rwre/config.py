"""Experiment configuration: JSON in, validated objects out.

A config names a model (builtin shorthand or explicit cycles), a torus
side, a master seed, and per-command parameters.  The canonical JSON
serialization (sorted keys, compact separators) is hashed into every
artifact so a run can always be traced back to its exact inputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .cycles import BUILTIN_MODELS, Cycle, CycleModel, WeightLaw
from .errors import ConfigurationError

COMMANDS = ("validate", "kernel-checks", "nash", "decay", "corrector", "clt", "full-report")


@dataclass
class ExperimentConfig:
    model: CycleModel
    side: int
    seed: int
    params: dict = field(default_factory=dict)
    out_dir: str | None = None
    raw: dict = field(default_factory=dict)

    def param(self, name: str, default):
        return self.params.get(name, default)

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _build_law(node: dict) -> WeightLaw:
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigurationError("each weight law needs a 'kind'")
    kind = node["kind"]
    known = {"kind", "value", "lo", "hi", "p"}
    extra = set(node) - known
    if extra:
        raise ConfigurationError(f"unknown weight-law keys: {sorted(extra)}")
    try:
        if kind == "constant":
            return WeightLaw(kind="constant", value=float(node.get("value", 1.0)))
        if kind == "uniform":
            return WeightLaw(kind="uniform", lo=float(node["lo"]), hi=float(node["hi"]))
        if kind == "bernoulli":
            return WeightLaw(kind="bernoulli", p=float(node["p"]))
    except KeyError as missing:
        raise ConfigurationError(f"weight law {kind!r} missing {missing}") from None
    raise ConfigurationError(f"unknown weight-law kind {kind!r}")


def _build_model(node) -> CycleModel:
    if not isinstance(node, dict):
        raise ConfigurationError("'model' must be an object")
    name = node.get("name")
    if name is None:
        raise ConfigurationError("'model' needs a 'name'")
    if name in BUILTIN_MODELS:
        params = node.get("params", {})
        if not isinstance(params, dict):
            raise ConfigurationError("'model.params' must be an object")
        try:
            return BUILTIN_MODELS[name](**params)
        except TypeError as bad:
            raise ConfigurationError(f"bad params for model {name!r}: {bad}") from None
    if name != "custom":
        raise ConfigurationError(
            f"unknown model {name!r}; builtins: {sorted(BUILTIN_MODELS)} or 'custom'"
        )
    try:
        cycles = tuple(
            Cycle(points=tuple(tuple(int(c) for c in p) for p in pts))
            for pts in node["cycles"]
        )
        laws = tuple(_build_law(law) for law in node["laws"])
        couplings = tuple(tuple(int(i) for i in pair) for pair in node.get("couplings", []))
        return CycleModel(
            name=str(node.get("label", "custom")), cycles=cycles, laws=laws, couplings=couplings
        )
    except ConfigurationError:
        raise
    except KeyError as missing:
        raise ConfigurationError(f"custom model missing {missing}") from None
    except Exception as bad:
        raise ConfigurationError(f"invalid custom model: {bad}") from None


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    unknown = set(raw) - {"model", "side", "seed", "params", "out"}
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("model", "side", "seed"):
        if key not in raw:
            raise ConfigurationError(f"config missing required key {key!r}")
    model = _build_model(raw["model"])
    side = raw["side"]
    if not isinstance(side, int) or side < 3:
        raise ConfigurationError("'side' must be an integer >= 3")
    seed = raw["seed"]
    if not isinstance(seed, int) or not (0 <= seed < 2**64):
        raise ConfigurationError("'seed' must be an integer in [0, 2^64)")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigurationError("'params' must be an object")
    out_dir = raw.get("out")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigurationError("'out' must be a string path")
    return ExperimentConfig(
        model=model, side=side, seed=seed, params=params, out_dir=out_dir, raw=raw
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as bad:
        raise ConfigurationError(f"cannot read config {path!r}: {bad}") from None
    except json.JSONDecodeError as bad:
        raise ConfigurationError(f"config {path!r} is not valid JSON: {bad}") from None
    return parse_config(raw)
