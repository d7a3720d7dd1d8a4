"""
Flat ``key = value`` run configuration with dotted keys.

Lines starting with ``#`` are comments. Every key must be known; values are
parsed according to the key's declared type and range-checked before any
computation starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration entry."""


def _floats(text: str) -> list[float]:
    return [float(v) for v in _split(text)]


def _ints(text: str) -> list[int]:
    return [int(v) for v in _split(text)]


def _split(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _rows(text: str) -> list[tuple[int, float]]:
    out = []
    for item in _split(text):
        m, zeta = item.split(":")
        out.append((int(m), float(zeta)))
    return out


def _grid(text: str) -> list[float]:
    """Either an explicit list ``a, b, c`` or ``linspace(start, stop, count)``."""
    text = text.strip()
    if text.startswith("linspace(") and text.endswith(")"):
        start, stop, count = _split(text[len("linspace("):-1])
        n = int(count)
        if n < 1:
            raise ValueError("linspace count must be positive")
        if n == 1:
            return [float(start)]
        step = (float(stop) - float(start)) / (n - 1)
        return [float(start) + k * step for k in range(n)]
    return _floats(text)


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _complex(text: str) -> complex:
    return complex(text.strip().replace(" ", "").replace("i", "j"))


def _in(lo, hi, closed_lo=True):
    def check(v):
        vals = v if isinstance(v, list) else [v]
        for x in vals:
            x = abs(x) if isinstance(x, complex) else x
            if math.isnan(x) or x > hi or (x < lo if closed_lo else x <= lo):
                return False
        return True
    return check


_ALWAYS = lambda v: True  # noqa: E731

# key -> (parser, default, validator, description)
SCHEMA = {
    "seed": (int, 0, _ALWAYS, "seed for the optimizer start list"),
    "dim": (int, None, _in(1, 10**5), "per-mode truncation override"),
    "format": (str, "csv", lambda v: v in ("csv", "json"), "output format"),
    "out": (str, None, _ALWAYS, "output path"),
    "tolerance_profile": (str, "default", lambda v: v in ("default", "strict"), "table tolerances"),
    "params.zeta": (_complex, 1.0, _ALWAYS, "squeezing parameter"),
    "params.lam": (_complex, 2.68j, _ALWAYS, "coherent displacement"),
    "params.tau": (float, 0.9, _in(0.0, 1.0), "tap transmittance"),
    "params.m": (int, 3, _in(0, 200), "heralded photon count"),
    "table1.rows": (_rows, None, _ALWAYS, "rows as m:zeta, comma separated"),
    "table1.tau": (float, 0.9, _in(0.0, 1.0, closed_lo=False), "tap transmittance for the table"),
    "distribution.tau_prime": (float, 1.0, _in(0.0, 1.0), "output transmittance"),
    "distribution.eta": (float, 1.0, _in(0.0, 1.0, closed_lo=False), "detection efficiency"),
    "bell.n_starts": (int, 24, _in(1, 10**4), "optimizer starts per cell"),
    "bell.convention": (str, "mode1", lambda v: v in ("mode1", "symmetric", "alternating"), "marginal convention"),
    "bell.eta": (float, 1.0, _in(0.0, 1.0, closed_lo=False), "detection efficiency"),
    "bell.tau_prime": (float, 1.0, _in(0.0, 1.0), "output transmittance"),
    "sweep.m_list": (_ints, [0, 3], _in(0, 200), "heralded counts"),
    "sweep.zeta_grid": (_grid, [0.5, 1.0], _in(0.0, 10.0), "squeezing magnitudes"),
    "sweep.lambda_grid": (_grid, [1.0, 2.0, 3.0], _in(0.0, 20.0), "displacement magnitudes"),
    "eta.grid": (_grid, [0.5, 0.6, 0.7, 0.8, 0.9, 1.0], _in(0.0, 1.0, closed_lo=False), "efficiencies"),
    "tau.grid": (_grid, [0.5, 0.6, 0.7, 0.8, 0.9, 1.0], _in(0.0, 1.0), "output transmittances"),
    "tau.ecs": (_bool, False, _ALWAYS, "add the entangled coherent state baseline"),
    "phase.grid": (_grid, [0.0, 0.2, 0.4, 0.6, 0.8], _in(-math.pi / 2, math.pi / 2), "phase offsets"),
    "phase.lambda_mag": (float, 2.68, _in(0.0, 20.0), "displacement magnitude"),
}


@dataclass
class RunConfig:
    """Validated configuration values keyed by dotted name."""

    values: dict = field(default_factory=lambda: {k: v[1] for k, v in SCHEMA.items()})

    def __getitem__(self, key: str):
        return self.values[key]

    def set(self, key: str, raw) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        parser, _, check, _ = SCHEMA[key]
        try:
            value = parser(raw) if isinstance(raw, str) else raw
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None
        if value is not None and not check(value):
            raise ConfigError(f"{key}: value {raw!r} out of range")
        self.values[key] = value

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        cfg = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, raw = (p.strip() for p in line.split("=", 1))
            cfg.set(key, raw)
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        return cls.from_text(Path(path).read_text())

    def section(self, prefix: str) -> dict:
        return {k: v for k, v in self.values.items() if k.startswith(prefix + ".")}
