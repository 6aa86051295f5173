"""Run configuration: one flat document, strictly checked.

Two syntaxes, detected automatically: a JSON object of scalars/flat lists,
or `key = value` lines (# comments allowed). Every command declares the
exact keys it accepts; unknown keys are rejected so a typo can never
silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import errors

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    """Parsed flat configuration document."""

    values: dict

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        stripped = text.lstrip()
        if stripped.startswith(("{", "[")):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as e:
                raise errors.ConfigError(f"invalid JSON config: {e}") from None
            if not isinstance(doc, dict):
                raise errors.ConfigError("JSON config must be an object")
            for k, v in doc.items():
                if isinstance(v, dict):
                    raise errors.ConfigError(f"config must be flat; key {k!r} holds an object")
            return cls(values=dict(doc))
        values: dict = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise errors.ConfigError(f"config line {ln}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            if not key:
                raise errors.ConfigError(f"config line {ln}: empty key")
            if key in values:
                raise errors.ConfigError(f"config line {ln}: duplicate key {key!r}")
            values[key] = val.strip()
        return cls(values=values)

    def require_known(self, allowed: set[str]) -> None:
        unknown = sorted(set(self.values) - allowed)
        if unknown:
            raise errors.ConfigError(f"unknown config keys: {', '.join(unknown)}")

    def _raw(self, key: str, default):
        return self.values.get(key, default)

    def get_str(self, key: str, default: str | None = None) -> str:
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        return str(v)

    def get_int(self, key: str, default: int | None = None) -> int:
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        try:
            if isinstance(v, bool):
                raise ValueError("boolean is not an integer")
            return int(v)
        except (TypeError, ValueError):
            raise errors.ConfigError(f"config key {key!r} must be an integer, got {v!r}") from None

    def get_float(self, key: str, default: float | None = None) -> float:
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        try:
            if isinstance(v, bool):
                raise ValueError("boolean is not a number")
            return float(v)
        except (TypeError, ValueError):
            raise errors.ConfigError(f"config key {key!r} must be a number, got {v!r}") from None

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        if isinstance(v, bool):
            return v
        s = str(v).strip().lower()
        if s in _TRUE:
            return True
        if s in _FALSE:
            return False
        raise errors.ConfigError(f"config key {key!r} must be a boolean, got {v!r}")

    def get_str_list(self, key: str, default: list[str] | None = None) -> list[str]:
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        if isinstance(v, list):
            return [str(item) for item in v]
        parts = [p.strip() for p in str(v).split(",")]
        return [p for p in parts if p]

    def get_float_list(self, key: str, default: list[float] | None = None) -> list[float]:
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        if isinstance(v, list):
            items = v
        else:
            items = [p.strip() for p in str(v).split(",") if p.strip()]
        try:
            return [float(item) for item in items]
        except (TypeError, ValueError):
            raise errors.ConfigError(f"config key {key!r} must be a list of numbers, got {v!r}") from None

    def get_pair_grid(self, key: str, default=None) -> list[tuple[float, float]]:
        """Grid of (a, b) pairs: `0.9,0.1;0.5,0.5` or a JSON list of pairs."""
        v = self._raw(key, default)
        if v is None:
            raise errors.ConfigError(f"missing required config key {key!r}")
        pairs = []
        if isinstance(v, list):
            cells = v
        else:
            cells = [c for c in str(v).split(";") if c.strip()]
        for cell in cells:
            parts = cell if isinstance(cell, list) else [p for p in str(cell).split(",") if p.strip()]
            if len(parts) != 2:
                raise errors.ConfigError(f"config key {key!r}: each grid cell needs exactly 2 numbers")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except (TypeError, ValueError):
                raise errors.ConfigError(f"config key {key!r}: non-numeric grid cell {cell!r}") from None
        if not pairs:
            raise errors.ConfigError(f"config key {key!r}: empty grid")
        return pairs
