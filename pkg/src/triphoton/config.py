"""Run configuration documents (YAML, ``schema_version: 1``).

A minimal document::

    schema_version: 1
    experiment: ghz            # bell | ghz | custom
    model: copenhagen          # copenhagen | timesym
    angles: [0, 0, pi/2]

Angles are radians. Numbers or the forms ``pi``, ``pi/2``, ``3*pi/4``,
``-pi/8`` are accepted; degree notation is rejected. ``angles`` may instead
be a sweep over one axis::

    angles: {axis: theta_c, start: 0, stop: pi, steps: 181, base: [0, 0, 0]}

Unknown keys are errors, and every error names the offending key and line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

import numpy as np
import yaml

from .models import DEFAULT_K

SCHEMA_VERSION = 1
AXES = ("theta_a", "theta_b", "theta_c")
EXPERIMENTS = ("bell", "ghz", "custom")
MODELS = ("copenhagen", "timesym")
FORMATS = ("csv", "json")
NORMALIZATION_TOL = 1e-9


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class Sweep:
    axis: str
    start: float
    stop: float
    steps: int
    base: Optional[tuple] = None

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class DiscriminateOptions:
    alpha: float = 0.01
    beta: float = 0.01
    grid_steps: int = 64
    refine_iterations: int = 50
    n_resamples: int = 1000
    profile_k: bool = False


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    model: str
    angles: Optional[tuple] = None
    sweep: Optional[Sweep] = None
    amplitudes: Optional[tuple] = None
    k: float = DEFAULT_K
    seed: int = 0
    n_emitted: int = 10000
    efficiency: float = 1.0
    dark_rate: float = 0.0
    output_path: Optional[str] = None
    format: str = "csv"
    discriminate: DiscriminateOptions = field(default_factory=DiscriminateOptions)
    verify_grid_steps: int = 181
    schema_version: int = SCHEMA_VERSION

    @property
    def arity(self) -> int:
        if self.experiment == "bell":
            return 2
        if self.experiment == "ghz":
            return 3
        return len(self.amplitudes).bit_length() - 1

    def angle_settings(self) -> list[tuple]:
        """Every angle tuple the run evaluates, in order."""
        if self.sweep is None:
            return [self.angles]
        axis = AXES.index(self.sweep.axis)
        base = list(self.sweep.base or (0.0,) * self.arity)
        out = []
        for v in self.sweep.values():
            point = list(base)
            point[axis] = float(v)
            out.append(tuple(point))
        return out

    def to_document(self) -> dict:
        doc: dict[str, Any] = {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "model": self.model,
        }
        if self.amplitudes is not None:
            doc["amplitudes"] = [
                a.real if a.imag == 0 else [a.real, a.imag] for a in self.amplitudes
            ]
        if self.sweep is not None:
            sweep = {
                "axis": self.sweep.axis,
                "start": self.sweep.start,
                "stop": self.sweep.stop,
                "steps": self.sweep.steps,
            }
            if self.sweep.base is not None:
                sweep["base"] = list(self.sweep.base)
            doc["angles"] = sweep
        else:
            doc["angles"] = list(self.angles)
        doc.update(
            k=self.k,
            seed=self.seed,
            n_emitted=self.n_emitted,
            efficiency=self.efficiency,
            dark_rate=self.dark_rate,
        )
        output = {"format": self.format}
        if self.output_path is not None:
            output["path"] = self.output_path
        doc["output"] = output
        doc["discriminate"] = {f.name: getattr(self.discriminate, f.name) for f in fields(DiscriminateOptions)}
        doc["verify"] = {"grid_steps": self.verify_grid_steps}
        return doc

    def dump(self) -> str:
        return yaml.safe_dump(self.to_document(), sort_keys=False)


# ---------------------------------------------------------------- parsing

_PI_FORM = re.compile(
    r"^\s*(?P<sign>[+-]?)\s*(?:(?P<coef>\d+(?:\.\d*)?|\.\d+)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)
_FLOAT_TEXT = re.compile(r"^\s*[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\s*$")


def _line_map(node, path=(), out=None):
    """Map dotted key paths to 1-based source lines."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        seen = set()
        for key_node, value_node in node.value:
            key = key_node.value
            dotted = ".".join(path + (str(key),))
            if key in seen:
                raise ConfigError("duplicate key", dotted, key_node.start_mark.line + 1)
            seen.add(key)
            out[dotted] = key_node.start_mark.line + 1
            _line_map(value_node, path + (str(key),), out)
    return out


class _Reader:
    def __init__(self, lines: dict):
        self.lines = lines

    def error(self, key: str, message: str) -> ConfigError:
        line = self.lines.get(key)
        if line is None and "." in key:
            line = self.lines.get(key.rsplit(".", 1)[0])
        return ConfigError(message, key, line)

    def check_keys(self, mapping: dict, allowed, prefix: str = "") -> None:
        for key in mapping:
            if key not in allowed:
                dotted = f"{prefix}{key}"
                raise self.error(dotted, f"unknown key (allowed: {', '.join(allowed)})")

    def number(self, key: str, value, allow_pi: bool = False) -> float:
        if isinstance(value, bool):
            raise self.error(key, f"expected a number, got {value!r}")
        if isinstance(value, (int, float)):
            out = float(value)
        elif isinstance(value, str) and _FLOAT_TEXT.match(value):
            # YAML 1.1 reads exponent forms without a dot (1e-3) as strings
            out = float(value)
        elif isinstance(value, str) and allow_pi:
            out = self._angle_text(key, value)
        else:
            raise self.error(key, f"expected a number, got {value!r}")
        if not math.isfinite(out):
            raise self.error(key, f"value must be finite, got {value!r}")
        return out

    def _angle_text(self, key: str, text: str) -> float:
        if text.strip().lower().startswith("deg"):
            raise self.error(key, "angles are radians only; degree notation is not accepted")
        m = _PI_FORM.match(text)
        if not m:
            raise self.error(key, f"cannot read angle {text!r} (use radians, e.g. 1.5708 or pi/2)")
        value = math.pi * float(m.group("coef") or 1.0)
        if m.group("den"):
            den = float(m.group("den"))
            if den == 0:
                raise self.error(key, "division by zero in angle")
            value /= den
        return -value if m.group("sign") == "-" else value

    def integer(self, key: str, value, minimum: Optional[int] = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.error(key, f"must be >= {minimum}, got {value}")
        return value

    def choice(self, key: str, value, options) -> str:
        if value not in options:
            raise self.error(key, f"must be one of {', '.join(options)}, got {value!r}")
        return value

    def angle_list(self, key: str, value, arity: int) -> tuple:
        if not isinstance(value, list):
            raise self.error(key, "expected a list of angles")
        if len(value) != arity:
            raise self.error(key, f"experiment needs {arity} angles, got {len(value)}")
        return tuple(self.number(f"{key}", v, allow_pi=True) for v in value)


_TOP_KEYS = (
    "schema_version", "experiment", "model", "amplitudes", "angles", "k", "seed",
    "n_emitted", "efficiency", "dark_rate", "output", "discriminate", "verify",
)
_SWEEP_KEYS = ("axis", "start", "stop", "steps", "base")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}", None, line) from None
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError("configuration must be a mapping")
    lines = _line_map(root)
    doc = yaml.safe_load(text)
    r = _Reader(lines)
    r.check_keys(doc, _TOP_KEYS)

    if "schema_version" not in doc:
        raise ConfigError("missing required key", "schema_version")
    version = r.integer("schema_version", doc["schema_version"])
    if version != SCHEMA_VERSION:
        raise r.error("schema_version", f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")

    for required in ("experiment", "model", "angles"):
        if required not in doc:
            raise ConfigError("missing required key", required)
    experiment = r.choice("experiment", doc["experiment"], EXPERIMENTS)
    model = r.choice("model", doc["model"], MODELS)

    amplitudes = None
    if experiment == "custom":
        if "amplitudes" not in doc:
            raise r.error("experiment", "custom experiment needs an 'amplitudes' list")
        amplitudes = _amplitudes(r, doc["amplitudes"])
        if model == "timesym":
            raise r.error("model", "timesym model is defined only for the bell and ghz experiments")
    elif "amplitudes" in doc:
        raise r.error("amplitudes", "amplitudes are only allowed with experiment: custom")
    arity = {"bell": 2, "ghz": 3}.get(experiment) or len(amplitudes).bit_length() - 1

    angles = sweep = None
    raw = doc["angles"]
    if isinstance(raw, dict):
        r.check_keys(raw, _SWEEP_KEYS, "angles.")
        for key in ("axis", "start", "stop", "steps"):
            if key not in raw:
                raise r.error("angles", f"sweep spec is missing '{key}'")
        axis = r.choice("angles.axis", raw["axis"], AXES[:arity])
        base = None
        if "base" in raw:
            base = r.angle_list("angles.base", raw["base"], arity)
        sweep = Sweep(
            axis=axis,
            start=r.number("angles.start", raw["start"], allow_pi=True),
            stop=r.number("angles.stop", raw["stop"], allow_pi=True),
            steps=r.integer("angles.steps", raw["steps"], minimum=1),
            base=base,
        )
    else:
        angles = r.angle_list("angles", raw, arity)

    kwargs: dict[str, Any] = {}
    if "k" in doc:
        k = r.number("k", doc["k"])
        if not (0.0 < k <= 1.0):
            raise r.error("k", "k out of range (0,1]")
        kwargs["k"] = k
    if "seed" in doc:
        kwargs["seed"] = r.integer("seed", doc["seed"], minimum=0)
    if "n_emitted" in doc:
        kwargs["n_emitted"] = r.integer("n_emitted", doc["n_emitted"], minimum=1)
    if "efficiency" in doc:
        eff = r.number("efficiency", doc["efficiency"])
        if not (0.0 < eff <= 1.0):
            raise r.error("efficiency", "efficiency out of range (0,1]")
        kwargs["efficiency"] = eff
    if "dark_rate" in doc:
        dark = r.number("dark_rate", doc["dark_rate"])
        if not (0.0 <= dark <= 1.0):
            raise r.error("dark_rate", "dark_rate out of range [0,1]")
        kwargs["dark_rate"] = dark
    if "output" in doc:
        out = doc["output"]
        if not isinstance(out, dict):
            raise r.error("output", "expected a mapping with 'path' and/or 'format'")
        r.check_keys(out, ("path", "format"), "output.")
        if "path" in out:
            if not isinstance(out["path"], str) or not out["path"]:
                raise r.error("output.path", "expected a non-empty string")
            kwargs["output_path"] = out["path"]
        if "format" in out:
            kwargs["format"] = r.choice("output.format", out["format"], FORMATS)
    if "discriminate" in doc:
        kwargs["discriminate"] = _discriminate_options(r, doc["discriminate"])
    if "verify" in doc:
        ver = doc["verify"]
        if not isinstance(ver, dict):
            raise r.error("verify", "expected a mapping")
        r.check_keys(ver, ("grid_steps",), "verify.")
        if "grid_steps" in ver:
            kwargs["verify_grid_steps"] = r.integer("verify.grid_steps", ver["grid_steps"], minimum=2)

    return RunConfig(
        experiment=experiment,
        model=model,
        angles=angles,
        sweep=sweep,
        amplitudes=amplitudes,
        schema_version=version,
        **kwargs,
    )


def _amplitudes(r: _Reader, raw) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise r.error("amplitudes", "expected a non-empty list")
    size = len(raw)
    if size < 2 or size & (size - 1):
        raise r.error("amplitudes", f"length must be a power of two >= 2, got {size}")
    amps = []
    for v in raw:
        if isinstance(v, list):
            if len(v) != 2:
                raise r.error("amplitudes", "complex amplitudes are written [re, im]")
            amps.append(complex(r.number("amplitudes", v[0]), r.number("amplitudes", v[1])))
        else:
            amps.append(complex(r.number("amplitudes", v), 0.0))
    total = math.sqrt(sum(abs(a) ** 2 for a in amps))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise r.error("amplitudes", f"amplitudes must be normalized within {NORMALIZATION_TOL}, norm is {total!r}")
    return tuple(amps)


def _discriminate_options(r: _Reader, raw) -> DiscriminateOptions:
    if not isinstance(raw, dict):
        raise r.error("discriminate", "expected a mapping")
    r.check_keys(raw, [f.name for f in fields(DiscriminateOptions)], "discriminate.")
    opts = DiscriminateOptions()
    updates: dict[str, Any] = {}
    for name in ("alpha", "beta"):
        if name in raw:
            v = r.number(f"discriminate.{name}", raw[name])
            if not (0.0 < v < 1.0):
                raise r.error(f"discriminate.{name}", f"{name} out of range (0,1)")
            updates[name] = v
    if "grid_steps" in raw:
        updates["grid_steps"] = r.integer("discriminate.grid_steps", raw["grid_steps"], minimum=2)
    if "refine_iterations" in raw:
        updates["refine_iterations"] = r.integer("discriminate.refine_iterations", raw["refine_iterations"], minimum=0)
    if "n_resamples" in raw:
        updates["n_resamples"] = r.integer("discriminate.n_resamples", raw["n_resamples"], minimum=1)
    if "profile_k" in raw:
        if not isinstance(raw["profile_k"], bool):
            raise r.error("discriminate.profile_k", "expected true or false")
        updates["profile_k"] = raw["profile_k"]
    return replace(opts, **updates)
