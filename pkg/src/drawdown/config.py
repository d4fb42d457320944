"""JSON configuration parsing.

One document combines the module fragments:

    {
      "market":    {"lambda": 1.0, "theta": 0.1, "eta": 0.2,
                    "c": 1.2, "alpha": 0.3},
      "severity":  {"kind": "exponential", "rate": 1.0},
      "retention": {"kind": "diffusion_optimal"}        # optional
    }

Unknown keys are rejected everywhere.
"""

import json

from .errors import ConfigError
from .model import (Deterministic, Exponential, MarketParams, SeverityModel,
                    Uniform)

_MARKET_KEYS = {"lambda", "theta", "eta", "c", "alpha"}


def parse_market(d: dict) -> MarketParams:
    if not isinstance(d, dict):
        raise ConfigError("market fragment must be an object")
    unknown = set(d) - _MARKET_KEYS
    if unknown:
        raise ConfigError(f"unknown market keys {sorted(unknown)}")
    missing = _MARKET_KEYS - set(d) - {"alpha"}
    if missing:
        raise ConfigError(f"missing market keys {sorted(missing)}")
    try:
        return MarketParams(lambda_=float(d["lambda"]),
                            theta=float(d["theta"]),
                            eta=float(d["eta"]),
                            c=float(d["c"]),
                            alpha=float(d.get("alpha", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"non-numeric market value: {exc}") from exc


_SEVERITY_FIELDS = {
    "exponential": ("rate", Exponential),
    "uniform": ("b", Uniform),
    "deterministic": ("b", Deterministic),
}


def parse_severity(d: dict) -> SeverityModel:
    if not isinstance(d, dict):
        raise ConfigError("severity fragment must be an object")
    kind = d.get("kind")
    if kind not in _SEVERITY_FIELDS:
        raise ConfigError(f"unknown severity kind {kind!r}")
    field, cls = _SEVERITY_FIELDS[kind]
    unknown = set(d) - {"kind", field}
    if unknown:
        raise ConfigError(f"unknown severity keys {sorted(unknown)}")
    if field not in d:
        raise ConfigError(f"severity kind {kind!r} requires key {field!r}")
    try:
        return cls(**{field: float(d[field])})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad severity parameter: {exc}") from exc


_RETENTION_KEYS = {
    "full": set(),
    "proportional": {"q"},
    "cap": {"d"},
    "diffusion_optimal": set(),
    "max_adjust": set(),
}


def parse_retention_fragment(d: dict) -> dict:
    """Validate the retention fragment; resolution (solving for the
    optimal exponents) happens later against a concrete market."""
    if not isinstance(d, dict):
        raise ConfigError("retention fragment must be an object")
    kind = d.get("kind")
    if kind not in _RETENTION_KEYS:
        raise ConfigError(f"unknown retention kind {kind!r}")
    unknown = set(d) - {"kind"} - _RETENTION_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown retention keys {sorted(unknown)}")
    missing = _RETENTION_KEYS[kind] - set(d)
    if missing:
        raise ConfigError(f"retention kind {kind!r} missing {sorted(missing)}")
    return dict(d)


def load_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    unknown = set(doc) - {"market", "severity", "retention"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    if "market" not in doc or "severity" not in doc:
        raise ConfigError("config requires 'market' and 'severity'")
    market = parse_market(doc["market"])
    severity = parse_severity(doc["severity"])
    retention = (parse_retention_fragment(doc["retention"])
                 if "retention" in doc else {"kind": "full"})
    return market, severity, retention
