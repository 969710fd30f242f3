"""Flat ``key=value`` experiment and sweep files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .core import check_alpha

MODELS = ("simple", "adaptive", "extreme")
BANDWIDTHS = ("uniform", "type1", "type2")
POLICIES = ("greedy", "stable-marriage")

# long field names are accepted as aliases of the short keys
ALIASES = {
    "free_rider_model": "model",
    "free_rider_fraction": "fr_fraction",
    "bandwidth_model": "bandwidth",
    "selection_policy": "policy",
    "rng_seed": "seed",
}


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    n_peers: int = 1000
    alpha: float = 0.9
    total_transactions: int = 100_000
    responder_fraction: float = 0.1
    resource_min: int = 1
    resource_max: int = 255
    model: str = "simple"
    fr_fraction: float = 0.1
    bandwidth: str = "uniform"
    policy: str = "greedy"
    epoch_size: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_peers < 2:
            raise ConfigError("n_peers", "need at least two peers")
        try:
            check_alpha(self.alpha)
        except ValueError as exc:
            raise ConfigError("alpha", str(exc)) from None
        if self.total_transactions < 0:
            raise ConfigError("total_transactions", "must be non-negative")
        if not 0.0 < self.responder_fraction <= 1.0:
            raise ConfigError("responder_fraction", "must lie in (0, 1]")
        if not 1 <= self.resource_min <= self.resource_max:
            raise ConfigError("resource_min", "need 1 <= resource_min <= resource_max")
        if self.model not in MODELS:
            raise ConfigError("model", f"expected one of {', '.join(MODELS)}")
        if not 0.0 <= self.fr_fraction <= 1.0:
            raise ConfigError("fr_fraction", "must lie in [0, 1]")
        if self.bandwidth not in BANDWIDTHS:
            raise ConfigError("bandwidth", f"expected one of {', '.join(BANDWIDTHS)}")
        if self.policy not in POLICIES:
            raise ConfigError("policy", f"expected one of {', '.join(POLICIES)}")
        if self.epoch_size < 1:
            raise ConfigError("epoch_size", "must be at least 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{f.name}={_format(getattr(self, f.name))}\n" for f in dataclasses.fields(self))


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _convert(key: str, raw: str):
    kind = FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}") from None
    return raw


def parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        pairs.append((ALIASES.get(key, key), value))
    return pairs


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for key, raw in parse_pairs(text):
        if key not in FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


SWEEP_LISTS = {"alphas": "alpha", "fr_fractions": "fr_fraction", "models": "model", "policies": "policy", "seeds": "seed"}


@dataclass
class SweepSpec:
    """Grid of runs: the cartesian product of the list keys over a base config."""

    alphas: list
    fr_fractions: list
    models: list = field(default_factory=lambda: ["simple"])
    policies: list = field(default_factory=lambda: ["greedy"])
    seeds: list | None = None
    out: str | None = None
    base: ExperimentConfig = field(default_factory=ExperimentConfig)

    def __post_init__(self):
        for name in SWEEP_LISTS:
            value = getattr(self, name)
            if value is not None and not value:
                raise ConfigError(name, "list must not be empty")

    def cells(self) -> list[dict]:
        """Per-cell overrides of the base config, in grid order.

        Without explicit seeds, cell k runs with ``base.seed + k``.
        """
        out = []
        seeds = self.seeds if self.seeds is not None else [None]
        for model in self.models:
            for policy in self.policies:
                for alpha in self.alphas:
                    for fr in self.fr_fractions:
                        for seed in seeds:
                            out.append(dict(model=model, policy=policy, alpha=alpha, fr_fraction=fr,
                                            seed=self.base.seed + len(out) if seed is None else seed))
        return out

    def config_for(self, cell: dict) -> ExperimentConfig:
        return self.base.replace(**cell)


def parse_sweep(text: str) -> SweepSpec:
    lists: dict = {}
    base: dict = {}
    out = None
    for key, raw in parse_pairs(text):
        if key in SWEEP_LISTS:
            item_key = SWEEP_LISTS[key]
            items = [v.strip() for v in raw.split(",") if v.strip()]
            lists[key] = [_convert(item_key, v) for v in items]
        elif key == "out":
            out = raw
        elif key in FIELD_TYPES:
            base[key] = _convert(key, raw)
        else:
            raise ConfigError(key, "unknown key")
    for required in ("alphas", "fr_fractions"):
        if required not in lists:
            raise ConfigError(required, "missing")
    return SweepSpec(out=out, base=ExperimentConfig(**base), **lists)


def load_sweep(path) -> SweepSpec:
    with open(path) as fh:
        return parse_sweep(fh.read())
