"""Event-engine registry: compiled kernel when available, pure Python otherwise.

Both engines expose the same ``run_fcfs`` / ``run_ps`` functions and return
bit-identical results for a given trace; selection only affects speed. The
``CRANQ_ENGINE`` environment variable (``py`` or ``cy``) overrides the
default, which prefers the compiled engine.
"""

from __future__ import annotations

import os

from . import _engine_py

_ENGINES = {"py": _engine_py}

try:
    from . import _engine_cy
except ImportError:
    _engine_cy = None
else:
    _ENGINES["cy"] = _engine_cy

DEFAULT_ENGINE = "cy" if "cy" in _ENGINES else "py"


def available_engines() -> tuple[str, ...]:
    """Names of the engines importable in this environment."""
    return tuple(sorted(_ENGINES))


def get_engine(name: str | None = None):
    """Resolve an engine module by name, env override, or default."""
    if name is None:
        name = os.environ.get("CRANQ_ENGINE") or DEFAULT_ENGINE
    try:
        return _ENGINES[name]
    except KeyError:
        raise ValueError(
            f"unknown engine {name!r}; available: {', '.join(sorted(_ENGINES))}"
        ) from None
