"""Flat ``key = value`` experiment configs with dotted namespacing.

The format is deliberately primitive -- one assignment per line, ``#``
comments, no nesting -- so configs diff cleanly and can be echoed
verbatim into run manifests.  Values are kept as strings internally and
converted on access, which makes parse/serialize round-trips lossless.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    def __init__(self, message, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class Config:
    values: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "Config":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw!r}", lineno)
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if not key:
                raise ConfigError("empty key", lineno)
            if not val:
                raise ConfigError(f"empty value for key {key!r}", lineno)
            values[key] = val
        return cls(values)

    @classmethod
    def load(cls, path) -> "Config":
        with open(path, "r", encoding="utf-8") as f:
            return cls.parse(f.read())

    def serialize(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.serialize())

    # -- typed access -------------------------------------------------------

    def __contains__(self, key) -> bool:
        return key in self.values

    def require(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"missing required key: {key}")
        return self.values[key]

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def get_int(self, key: str, default: int | None = None) -> int:
        return self._typed(key, default, int)

    def get_float(self, key: str, default: float | None = None) -> float:
        return self._typed(key, default, float)

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        def conv(s):
            low = s.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(s)

        return self._typed(key, default, conv)

    def _typed(self, key, default, conv):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key: {key}")
            return default
        try:
            return conv(self.values[key])
        except ValueError:
            raise ConfigError(
                f"key {key!r} has malformed value {self.values[key]!r}") from None

    def subsection(self, prefix: str) -> dict:
        """All keys under ``prefix.`` with the prefix stripped."""
        cut = len(prefix) + 1
        return {k[cut:]: v for k, v in self.values.items()
                if k.startswith(prefix + ".")}

    def with_values(self, **overrides) -> "Config":
        merged = dict(self.values)
        merged.update({k: str(v) for k, v in overrides.items()})
        return Config(merged)
