"""Settings loading for the SOL kernel

Settings come from the ``"settings"`` object of a JSON file shaped like
``config.example.json``. Command-line flags and node inputs override the
file values through :meth:`Settings.with_overrides`.
"""

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from .log import log_debug, log_warning, set_debug


MODES = ("exact-where-possible", "sampling")


@dataclass(frozen=True)
class Settings:
    """Global knobs shared by evaluation, entailment checking and suites."""

    int_range: Tuple[int, int] = (-64, 64)
    tolerance: float = 1e-9
    samples: int = 20
    seed: int = 0
    max_dim: int = 4096
    max_states: int = 2_000_000
    int_limit: int = 2**31 - 1
    workers: int = 1
    mode: str = "exact-where-possible"
    debug_mode: bool = False

    def __post_init__(self):
        lo, hi = self.int_range
        if lo > hi:
            raise ValueError(f"Invalid int range {lo}..{hi}: range is empty")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.mode not in MODES:
            raise ValueError(f"Unknown mode '{self.mode}', expected one of {MODES}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for key in ("max_dim", "max_states", "int_limit"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be at least 1")

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with every non-None override applied."""
        values = {key: value for key, value in overrides.items() if value is not None}
        if "int_range" in values:
            values["int_range"] = tuple(values["int_range"])
        return replace(self, **values)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["int_range"] = list(self.int_range)
        return data


def parse_int_range(text: str) -> Tuple[int, int]:
    """Parse ``lo..hi`` into a pair of ints.

    Args:
        text: Range text such as ``-20..40``

    Returns:
        (lo, hi) tuple
    """
    parts = text.split("..")
    if len(parts) != 2:
        raise ValueError(f"Invalid int range '{text}', expected lo..hi")
    return int(parts[0]), int(parts[1])


def load_settings(path: Optional[str] = None) -> Settings:
    """Load settings from a JSON config file.

    Args:
        path: Config file path. Falls back to ``$SOL_CONFIG``; when neither is
            set, defaults are returned.

    Returns:
        Settings instance
    """
    path = path or os.environ.get("SOL_CONFIG")
    if not path:
        return Settings()

    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)

    block = raw.get("settings", {})
    known = {f.name for f in fields(Settings)}
    values = {}
    for key, value in block.items():
        if key not in known:
            log_warning(f"Ignoring unknown setting '{key}' in {path}")
            continue
        values[key] = value

    if isinstance(values.get("int_range"), str):
        values["int_range"] = parse_int_range(values["int_range"])
    elif "int_range" in values:
        values["int_range"] = tuple(values["int_range"])

    settings = Settings(**values)
    set_debug(settings.debug_mode)
    log_debug(f"Loaded settings from {path}: {settings.to_dict()}")
    return settings
