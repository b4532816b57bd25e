"""Tagged console logging for the kernel, CLI and nodes"""

import os
import sys


_state = {"debug": os.environ.get("SOL_DEBUG", "") == "1"}


def set_debug(enabled: bool) -> None:
    """Turn [DEBUG] output on or off for the whole process."""
    _state["debug"] = bool(enabled) or os.environ.get("SOL_DEBUG", "") == "1"


def debug_enabled() -> bool:
    return _state["debug"]


def _emit(tag: str, message: str) -> None:
    # stdout is reserved for reports
    print(f"[{tag}] {message}", file=sys.stderr)


def log_info(message: str) -> None:
    _emit("INFO", message)


def log_warning(message: str) -> None:
    _emit("WARNING", message)


def log_error(message: str) -> None:
    _emit("ERROR", message)


def log_success(message: str) -> None:
    _emit("SUCCESS", message)


def log_debug(message: str) -> None:
    if debug_enabled():
        _emit("DEBUG", message)
