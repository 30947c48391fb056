"""SUT configuration model.

A SUT is an ordered list of parameters, each with a domain (a single numeric
default or a list of permissible values, optionally allowing ``None``) and a
secure setting. Configurations are scored per parameter: HIGH when the value
equals the secure setting, LOW otherwise. The ``lim`` value turns a SUT into
a :class:`SearchSpace` of integer sampling intervals.

Setting values are plain Python ``int`` or ``None``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import jsonschema
import numpy as np

from .errors import (
    DuplicateParameterError,
    FitnessRangeError,
    InadmissibleSecureSettingError,
    MissingAssignmentError,
    SchemaError,
    UnknownParameterError,
)

Setting = Optional[int]


def _is_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True)
class NumericDomain:
    default: int

    def __post_init__(self):
        if not _is_int(self.default):
            raise SchemaError("domain.default", f"expected integer, got {self.default!r}")
        object.__setattr__(self, "default", int(self.default))

    def admits(self, value: Setting) -> bool:
        return value is not None and _is_int(value)


@dataclass(frozen=True)
class ListDomain:
    values: tuple[int, ...]
    allow_none: bool = False

    def __post_init__(self):
        values = tuple(self.values)
        if not values:
            raise SchemaError("domain.values", "must be non-empty")
        if not all(_is_int(v) and v >= 0 for v in values):
            raise SchemaError("domain.values", "must be non-negative integers")
        if len(set(values)) != len(values):
            raise SchemaError("domain.values", "must be distinct")
        object.__setattr__(self, "values", tuple(int(v) for v in values))

    def admits(self, value: Setting) -> bool:
        if value is None:
            return self.allow_none
        return _is_int(value) and value in self.values


Domain = Union[NumericDomain, ListDomain]


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    domain: Domain
    secure: Setting

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise SchemaError("name", "must be a non-empty string")
        if not self.domain.admits(self.secure):
            raise InadmissibleSecureSettingError(self.name, self.secure)
        if self.secure is not None:
            object.__setattr__(self, "secure", int(self.secure))


@dataclass(frozen=True)
class SutSpec:
    name: str
    parameters: tuple[ParameterSpec, ...]

    def __post_init__(self):
        params = tuple(self.parameters)
        if not params:
            raise SchemaError("parameters", "at least one parameter is required")
        seen = set()
        for p in params:
            if p.name in seen:
                raise DuplicateParameterError(p.name)
            seen.add(p.name)
        object.__setattr__(self, "parameters", params)

    @property
    def n(self) -> int:
        return len(self.parameters)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def secure_values(self) -> tuple[Setting, ...]:
        return tuple(p.secure for p in self.parameters)

    def index(self, name: str) -> int:
        for i, p in enumerate(self.parameters):
            if p.name == name:
                return i
        raise UnknownParameterError(name)


@dataclass(frozen=True)
class ScoringConfig:
    high: int = 800
    low: int = 8
    val: int = 800

    def __post_init__(self):
        if not (self.high > self.low > 0):
            raise ValueError(f"scores must satisfy high > low > 0, got high={self.high} low={self.low}")
        if self.val <= 0:
            raise ValueError(f"val must be positive, got {self.val}")


DEFAULT_SCORING = ScoringConfig()


@dataclass(frozen=True)
class Configuration:
    """Total assignment of settings, stored in the SUT's parameter order."""

    names: tuple[str, ...]
    values: tuple[Setting, ...]

    @classmethod
    def from_mapping(cls, sut: SutSpec, assignments: Mapping[str, Setting]) -> "Configuration":
        missing = [name for name in sut.names if name not in assignments]
        if missing:
            raise MissingAssignmentError(f"no setting for parameter(s) {missing}")
        extra = sorted(set(assignments) - set(sut.names))
        if extra:
            raise MissingAssignmentError(f"unknown parameter(s) {extra}")
        return cls(sut.names, tuple(assignments[name] for name in sut.names))

    @classmethod
    def from_values(cls, sut: SutSpec, values: Sequence[Setting]) -> "Configuration":
        if len(values) != sut.n:
            raise MissingAssignmentError(f"expected {sut.n} settings, got {len(values)}")
        return cls(sut.names, tuple(values))

    @property
    def key(self) -> tuple[Setting, ...]:
        return self.values

    def as_dict(self) -> dict[str, Setting]:
        return dict(zip(self.names, self.values))

    def __getitem__(self, name: str) -> Setting:
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise UnknownParameterError(name) from None


def score_parameter(spec: ParameterSpec, value: Setting, scoring: ScoringConfig = DEFAULT_SCORING) -> int:
    secure = spec.secure
    if secure is None:
        return scoring.high if value is None else scoring.low
    if value is None or value != secure:
        return scoring.low
    return scoring.high


def _as_values(sut: SutSpec, config) -> tuple[Setting, ...]:
    if isinstance(config, Configuration):
        if config.names != sut.names:
            raise MissingAssignmentError("configuration was built for a different SUT")
        return config.values
    return Configuration.from_mapping(sut, config).values


def fitness(sut: SutSpec, config, scoring: ScoringConfig = DEFAULT_SCORING) -> int:
    """Sum of per-parameter scores. ``config`` is a Configuration or a name mapping."""
    values = _as_values(sut, config)
    return sum(score_parameter(p, v, scoring) for p, v in zip(sut.parameters, values))


def max_fitness(sut: SutSpec, scoring: ScoringConfig = DEFAULT_SCORING) -> int:
    return sut.n * scoring.high


def min_fitness(sut: SutSpec, scoring: ScoringConfig = DEFAULT_SCORING) -> int:
    return sut.n * scoring.low


def normalize_fitness(fs: float, sut: SutSpec, scoring: ScoringConfig = DEFAULT_SCORING) -> float:
    lo, hi = min_fitness(sut, scoring), max_fitness(sut, scoring)
    if not lo <= fs <= hi:
        raise FitnessRangeError(f"fitness {fs} outside [{lo}, {hi}]")
    return (fs - lo) / (hi - lo)


def round_lim(lim: float) -> int:
    """Nearest integer, halves rounded away from zero (``round`` would use banker's rounding)."""
    return int(math.copysign(math.floor(abs(lim) + 0.5), lim))


@dataclass(frozen=True)
class SampleRule:
    """Inclusive integer interval, plus ``None`` when ``allow_none``."""

    lo: int
    hi: int
    allow_none: bool = False

    def admits(self, value: Setting) -> bool:
        if value is None:
            return self.allow_none
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class SearchSpace:
    names: tuple[str, ...]
    rules: tuple[SampleRule, ...]
    lim: float
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _hi: np.ndarray = field(init=False, repr=False, compare=False)
    _none: np.ndarray = field(init=False, repr=False, compare=False)
    has_none: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_lo", np.array([r.lo for r in self.rules], dtype=np.int64))
        object.__setattr__(self, "_hi", np.array([r.hi for r in self.rules], dtype=np.int64))
        object.__setattr__(self, "_none", np.array([r.allow_none for r in self.rules], dtype=bool))
        object.__setattr__(self, "has_none", bool(self._none.any()))

    def rule(self, name: str) -> SampleRule:
        try:
            return self.rules[self.names.index(name)]
        except ValueError:
            raise UnknownParameterError(name) from None

    def admits(self, values: Sequence[Setting]) -> bool:
        return len(values) == len(self.rules) and all(r.admits(v) for r, v in zip(self.rules, values))


def build_search_space(sut: SutSpec, lim: float) -> SearchSpace:
    if not lim > 0:
        raise ValueError(f"lim must be positive, got {lim}")
    r = round_lim(lim)
    rules = []
    for p in sut.parameters:
        if isinstance(p.domain, NumericDomain):
            v = p.domain.default
            lo = max(0, v - r)
            # negative defaults far below zero collapse to the single value 0
            rules.append(SampleRule(lo, max(lo, v + r)))
        else:
            rules.append(SampleRule(0, max(p.domain.values) + r, p.domain.allow_none))
    return SearchSpace(sut.names, tuple(rules), float(lim))


def sample_indices(space: SearchSpace, indices: Sequence[int], rng: np.random.Generator) -> list[Setting]:
    """Draw one setting for each parameter index.

    Integers are uniform over the inclusive interval; a ``None``-allowing rule
    yields ``None`` with probability 1/2 first.
    """
    idx = np.asarray(indices, dtype=np.intp)
    out = rng.integers(space._lo[idx], space._hi[idx], endpoint=True).tolist()
    if space.has_none:
        coins = rng.random(len(idx))
        for j in np.flatnonzero(space._none[idx] & (coins < 0.5)):
            out[j] = None
    return out


def sample_setting(space: SearchSpace, param: str, rng: np.random.Generator) -> Setting:
    try:
        i = space.names.index(param)
    except ValueError:
        raise UnknownParameterError(param) from None
    return sample_indices(space, [i], rng)[0]


# --- persistence -----------------------------------------------------------

_INTEGER = {"type": "integer"}

SUT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "parameters"],
    "properties": {
        "name": {"type": "string"},
        "parameters": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "domain", "secure"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "secure": {"type": ["integer", "null"]},
                    "domain": {
                        "oneOf": [
                            {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["kind", "default"],
                                "properties": {"kind": {"const": "numeric"}, "default": _INTEGER},
                            },
                            {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["kind", "values", "allow_none"],
                                "properties": {
                                    "kind": {"const": "list"},
                                    "values": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
                                    "allow_none": {"type": "boolean"},
                                },
                            },
                        ]
                    },
                },
            },
        },
    },
}

# JSON "integer" must not accept 3.0 or booleans
_type_checker = jsonschema.Draft202012Validator.TYPE_CHECKER.redefine(
    "integer", lambda _checker, inst: isinstance(inst, int) and not isinstance(inst, bool)
)
_Validator = jsonschema.validators.extend(jsonschema.Draft202012Validator, type_checker=_type_checker)
_validator = _Validator(SUT_SCHEMA)


def sut_from_dict(doc) -> SutSpec:
    error = jsonschema.exceptions.best_match(_validator.iter_errors(doc))
    if error is not None:
        raise SchemaError(error.json_path, error.message)
    params = []
    for i, raw in enumerate(doc["parameters"]):
        d = raw["domain"]
        try:
            if d["kind"] == "numeric":
                domain = NumericDomain(d["default"])
            else:
                domain = ListDomain(tuple(d["values"]), d["allow_none"])
        except SchemaError as exc:
            raise SchemaError(f"$.parameters[{i}].{exc.field}", str(exc).split(": ", 1)[1]) from None
        params.append(ParameterSpec(raw["name"], domain, raw["secure"]))
    return SutSpec(doc["name"], tuple(params))


def sut_to_dict(sut: SutSpec) -> dict:
    params = []
    for p in sut.parameters:
        if isinstance(p.domain, NumericDomain):
            domain = {"kind": "numeric", "default": p.domain.default}
        else:
            domain = {"kind": "list", "values": list(p.domain.values), "allow_none": p.domain.allow_none}
        params.append({"name": p.name, "domain": domain, "secure": p.secure})
    return {"name": sut.name, "parameters": params}


def load_sut_spec(path) -> SutSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON ({exc})") from None
    return sut_from_dict(doc)


def save_sut_spec(sut: SutSpec, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(sut_to_dict(sut), indent=2) + "\n", encoding="utf-8")
    return path


def generate_synthetic_sut(n: int, seed: int, name: Optional[str] = None) -> SutSpec:
    """Random SUT with ~60% numeric and ~40% list parameters.

    Numeric defaults are uniform on [0, 50] and double as the secure setting.
    List parameters hold 2-6 distinct values from [0, 50]; about half also
    allow ``None``, which may then be the secure setting.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    width = len(str(n))
    params = []
    for i in range(n):
        pname = f"param_{i + 1:0{width}d}"
        if rng.random() < 0.6:
            default = int(rng.integers(0, 51))
            params.append(ParameterSpec(pname, NumericDomain(default), default))
            continue
        size = int(rng.integers(2, 7))
        values = tuple(sorted(int(v) for v in rng.choice(51, size=size, replace=False)))
        allow_none = bool(rng.random() < 0.5)
        if allow_none and rng.random() < 1 / (size + 1):
            secure = None
        else:
            secure = values[int(rng.integers(size))]
        params.append(ParameterSpec(pname, ListDomain(values, allow_none), secure))
    return SutSpec(name or f"synthetic-{n}-{seed}", tuple(params))
