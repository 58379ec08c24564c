"""Experiment configuration: flat dotted key-value files or JSON.

The native format is diff-friendly plain text, one `section.key = value`
per line, '#' comments allowed:

    model.N = 2000
    model.T = 0.5          # beta = 1/T
    model.gamma = 0.5
    model.J0 = 1.0
    model.h = 0.5
    run.kind = simulate
    run.t_end = 2.5
    run.record_dt = 0.05
    run.m0 = 0.0
    run.seeds = 1,2,3
    run.M_list = 12,48
    output.dir = out

model.tau defaults to "auto", meaning tau = 1/M^2 for each M. Temperature
may be given as model.T instead of model.beta; giving both is an error
unless they agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import ModelParams

RUN_KINDS = ("simulate", "drt", "slowflow", "statics", "compare")
FLOW_CHOICES = ("ferro", "fields", "noninteracting", "ferro_slice")
INIT_CHOICES = ("uniform_up", "magnetized", "slice_replicated", "random")
FORMATS = ("csv", "json", "both")


class ConfigError(Exception):
    """Invalid configuration; message carries the offending key or line."""


def _parse_scalar(key, raw, kind):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def _parse_int_list(key, raw):
    if isinstance(raw, list):
        return [int(v) for v in raw]
    items = [s.strip() for s in str(raw).split(",") if s.strip()]
    if not items:
        raise ConfigError(f"key {key!r}: empty list")
    try:
        return [int(s) for s in items]
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as a comma list of ints") from None


# key -> coercion; None means keep the raw string
_SCHEMA = {
    "model.N": int,
    "model.M": int,
    "model.beta": float,
    "model.T": float,
    "model.gamma": float,
    "model.h": float,
    "model.J0": float,
    "model.tau": None,  # float or "auto"
    "run.kind": None,
    "run.t_end": float,
    "run.record_dt": float,
    "run.dt": float,
    "run.m0": float,
    "run.eps0": float,
    "run.init": None,
    "run.seeds": "int_list",
    "run.M_list": "int_list",
    "run.flow": None,
    "run.approx": bool,
    "run.workers": int,
    "run.max_attempts": int,
    "output.dir": None,
    "output.format": None,
}


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    kind: str
    model: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def params_for(self, M: int) -> ModelParams:
        tau = self.model.get("tau", "auto")
        tau_val = 1.0 / (M * M) if tau == "auto" else float(tau)
        try:
            return ModelParams(
                N=self.model.get("N", 1),
                M=M,
                beta=self.model["beta"],
                gamma=self.model["gamma"],
                h=self.model.get("h", 0.0),
                J0=self.model.get("J0", 0.0),
                tau=tau_val,
            )
        except ValueError as exc:
            raise ConfigError(f"invalid model parameters: {exc}") from exc

    def m_values(self) -> list[int]:
        if "M_list" in self.run:
            return list(self.run["M_list"])
        if "M" in self.model:
            return [self.model["M"]]
        raise ConfigError("one of model.M or run.M_list is required")


def parse_flat_text(text: str) -> dict:
    """Flat `a.b = value` lines to a {key: raw-string} map with line context."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {line.strip()!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _flatten_json(obj: dict) -> dict:
    flat = {}
    for section, sub in obj.items():
        if not isinstance(sub, dict):
            raise ConfigError(f"JSON config: top-level {section!r} must be an object")
        for k, v in sub.items():
            flat[f"{section}.{k}"] = v
    return flat


def load_config(path: str, json_format: bool = False) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if json_format:
        try:
            flat = _flatten_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    else:
        flat = parse_flat_text(text)
    return validate_config(flat)


def validate_config(flat: dict) -> ExperimentConfig:
    typed: dict[str, object] = {}
    for key, raw in flat.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        coerce = _SCHEMA[key]
        if coerce == "int_list":
            typed[key] = _parse_int_list(key, raw)
        elif coerce is None:
            typed[key] = str(raw)
        elif isinstance(raw, bool) or not isinstance(raw, str):
            # already typed (JSON path)
            try:
                typed[key] = coerce(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"key {key!r}: cannot coerce {raw!r}") from None
        else:
            typed[key] = _parse_scalar(key, raw, coerce)

    kind = typed.get("run.kind")
    if kind is None:
        raise ConfigError("run.kind is required")
    if kind not in RUN_KINDS:
        raise ConfigError(f"run.kind must be one of {RUN_KINDS}, got {kind!r}")

    model: dict = {}
    run: dict = {}
    output: dict = {}
    for key, val in typed.items():
        section, _, name = key.partition(".")
        {"model": model, "run": run, "output": output}[section][name] = val

    # temperature convention: model.T with beta = 1/T; conflict is an error
    if "T" in model:
        T = model.pop("T")
        if T <= 0:
            raise ConfigError("model.T must be > 0")
        beta_from_T = 1.0 / T
        if "beta" in model and abs(model["beta"] - beta_from_T) > 1e-9 * beta_from_T:
            raise ConfigError(
                f"model.beta = {model['beta']} and model.T = {T} disagree "
                f"(1/T = {beta_from_T})"
            )
        model["beta"] = beta_from_T
    if "beta" not in model:
        raise ConfigError("model.beta (or model.T) is required")
    if "gamma" not in model:
        raise ConfigError("model.gamma is required")
    if "tau" in model and model["tau"] != "auto":
        try:
            model["tau"] = float(model["tau"])
        except ValueError:
            raise ConfigError(f"model.tau must be a number or 'auto', got {model['tau']!r}") from None

    run.setdefault("flow", "ferro")
    if run["flow"] not in FLOW_CHOICES:
        raise ConfigError(f"run.flow must be one of {FLOW_CHOICES}, got {run['flow']!r}")
    run.setdefault("init", "slice_replicated")
    if run["init"] not in INIT_CHOICES:
        raise ConfigError(f"run.init must be one of {INIT_CHOICES}, got {run['init']!r}")
    run.setdefault("eps0", 1.0)
    output.setdefault("dir", "out")
    output.setdefault("format", "csv")
    if output["format"] not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}, got {output['format']!r}")

    def require(section: dict, section_name: str, *keys):
        for k in keys:
            if k not in section:
                raise ConfigError(f"{section_name}.{k} is required for run.kind = {kind}")

    if kind in ("simulate", "compare"):
        require(model, "model", "N")
        require(run, "run", "t_end", "record_dt", "m0", "seeds")
        if not run["seeds"]:
            raise ConfigError("run.seeds must be non-empty")
    if kind in ("drt", "slowflow"):
        require(run, "run", "t_end", "m0")
    if kind in ("drt", "statics"):
        require(model, "model", "M")
    cfg = ExperimentConfig(kind=kind, model=model, run=run, output=output, raw=dict(flat))
    if "M" in model or "M_list" in run:
        for M in cfg.m_values():
            if M < 3:
                raise ConfigError(f"Trotter slice counts must be >= 3, got {M}")
    elif kind in ("simulate", "compare"):
        raise ConfigError("one of model.M or run.M_list is required")
    return cfg
