"""Experiment configuration: a flat key = value text format, schema 1.

Lines are `key = value`; `#` starts a comment; keys are dotted paths.
Values parse as int, float (`inf` allowed), bool (`true`/`false`), or bare
strings; comma-separated lists are split by the consumer.  Example:

    schema = 1
    mode = semilinear_run
    name = supercritical-beam
    model.n = 1
    model.alpha = 2.0
    model.theta = 1.0
    model.delta = 1.0
    m = 2.0
    p = 6.0
    q = 12.0
    grid.L = 125.6637061435917
    grid.N = 512
    data.u1.kind = gaussian
    data.u1.width = 1.0
    data.amplitude = 0.01
    schedule.t_end = 100.0
    schedule.cadence = 1.0
    expect = bounded_Z_norm

Modes: linear_verify, semilinear_run, rate_table, testfn_diagnostic,
lemma_check.  Mode-specific keys live under verify.*, rates.*, testfn.*,
lemma.*; see the README for the full key table.
"""

import math
from dataclasses import dataclass, field

from .params import ModelParams

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_text", "parse_config_file"]

MODES = ("linear_verify", "semilinear_run", "rate_table", "testfn_diagnostic", "lemma_check")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


def _parse_value(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> dict:
    """Parse the key = value format; raises ConfigError with line numbers."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {line.strip()!r}", line=lineno)
        key, _, value = body.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        if not value.strip():
            raise ConfigError(f"empty value for key {key!r}", line=lineno)
        out[key] = _parse_value(value)
    return out


def parse_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _subdict(mapping: dict, prefix: str) -> dict:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in mapping.items() if k.startswith(prefix + ".")}


@dataclass
class ExperimentConfig:
    """Typed view of one experiment; `raw` keeps the full mapping for echo."""

    mode: str
    name: str
    model: ModelParams
    m: float = 2.0
    p: float = 2.0
    q: float = 4.0
    grid_L: float = 64.0
    grid_N: int = 256
    data_u0: dict | None = None
    data_u1: dict | None = None
    amplitude: float = 1.0
    t_end: float = 10.0
    cadence: float = 0.5
    h: float | None = None
    scheme: str = "ETD2"
    adaptive_h: bool = True
    store_fields: bool = False
    zbound_factor: float = 2.0
    max_steps: int = 2_000_000
    expect: str | None = None
    flagged_subcritical: bool = False
    seed: int = 0
    verify: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)
    testfn: dict = field(default_factory=dict)
    lemma: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        if mapping.get("schema") != 1:
            raise ConfigError("config must declare 'schema = 1'")
        mode = mapping.get("mode")
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

        needs_model = mode != "lemma_check"
        if needs_model:
            try:
                model = ModelParams(
                    n=int(mapping["model.n"]),
                    alpha=float(mapping["model.alpha"]),
                    theta=float(mapping["model.theta"]),
                    delta=float(mapping["model.delta"]),
                )
            except KeyError as exc:
                raise ConfigError(f"missing required key {exc.args[0]!r} for mode {mode}") from exc
            except ValueError as exc:
                raise ConfigError(f"invalid model parameters: {exc}") from exc
        else:
            model = ModelParams(n=1, alpha=1.0, theta=0.5, delta=0.5)

        q = float(mapping.get("q", 2.0 * float(mapping.get("p", 2.0))))
        if mode in ("semilinear_run", "linear_verify") and q < 2.0:
            raise ConfigError(
                f"q = {q} rejected: the output Lebesgue index must lie in [2, inf]")

        cfg = cls(
            mode=mode,
            name=str(mapping.get("name", mode)),
            model=model,
            m=float(mapping.get("m", 2.0)),
            p=float(mapping.get("p", 2.0)),
            q=q,
            grid_L=float(mapping.get("grid.L", 64.0)),
            grid_N=int(mapping.get("grid.N", 256)),
            data_u0=_subdict(mapping, "data.u0") or None,
            data_u1=_subdict(mapping, "data.u1") or None,
            amplitude=float(mapping.get("data.amplitude", 1.0)),
            t_end=float(mapping.get("schedule.t_end", 10.0)),
            cadence=float(mapping.get("schedule.cadence", 0.5)),
            h=float(mapping["schedule.h"]) if "schedule.h" in mapping else None,
            scheme=str(mapping.get("schedule.scheme", "ETD2")),
            adaptive_h=bool(mapping.get("schedule.adaptive", True)),
            store_fields=bool(mapping.get("schedule.store_fields", False)),
            zbound_factor=float(mapping.get("zbound_factor", 2.0)),
            max_steps=int(mapping.get("max_steps", 2_000_000)),
            expect=mapping.get("expect"),
            flagged_subcritical=bool(mapping.get("flagged_subcritical", False)),
            seed=int(mapping.get("seed", 0)),
            verify=_subdict(mapping, "verify"),
            rates=_subdict(mapping, "rates"),
            testfn=_subdict(mapping, "testfn"),
            lemma=_subdict(mapping, "lemma"),
            raw=dict(mapping),
        )
        cfg._validate()
        return cfg

    def _validate(self):
        if self.mode == "semilinear_run":
            if self.data_u0 is None and self.data_u1 is None:
                raise ConfigError("semilinear_run needs data.u0.* or data.u1.*")
            if not self.flagged_subcritical and self.model.theta > 0:
                horizon = (self.grid_L / (2.0 * math.pi)) ** (2.0 * self.model.theta)
                if self.t_end > horizon / 4.0 + 1e-9:
                    raise ConfigError(
                        f"schedule.t_end = {self.t_end} exceeds a quarter of the decay "
                        f"horizon {horizon} for grid.L = {self.grid_L}; enlarge the box")
        if self.mode == "linear_verify":
            for key in ("kernel", "j", "t0", "t1"):
                if key not in self.verify:
                    raise ConfigError(f"linear_verify needs verify.{key}")
            eta = float(self.verify.get("eta", 1.0))
            if not 1.0 <= eta <= 2.0:
                raise ConfigError(f"verify.eta must lie in [1, 2], got {eta}")
        if self.mode == "lemma_check":
            for key in ("kappa", "mu"):
                if key not in self.lemma:
                    raise ConfigError(f"lemma_check needs lemma.{key}")
            if float(self.lemma["kappa"]) > 1.0:
                raise ConfigError("lemma.kappa must be <= 1")
            if float(self.lemma["mu"]) < 1.0:
                raise ConfigError("lemma.mu must be >= 1")
