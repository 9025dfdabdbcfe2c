"""Defaults and environment-driven settings."""

from __future__ import annotations

import os

from khl.errors import InvalidSetting

DEFAULT_TOL = 1e-10
DEFAULT_SEED = 0

MAX_GENERAL_N = 30
MAX_STANDARD_P = 64.0

# Two atoms merge when |v1 - v2| <= MERGE_RTOL * max(1, v1).
MERGE_RTOL = 1e-12
# A squared coefficient within PIN_TOL of 1/n counts as pinned.
PIN_TOL = 1e-10


def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise InvalidSetting(f"{name} must be an integer, got {raw!r}") from exc


def default_seed() -> int:
    seed = _env_int("KHL_SEED")
    if seed is None:
        return DEFAULT_SEED
    if not 0 <= seed < 2**64:
        raise InvalidSetting(f"KHL_SEED must be an unsigned 64-bit integer, got {seed}")
    return seed


def default_jobs() -> int:
    jobs = _env_int("KHL_JOBS")
    if jobs is not None:
        return max(1, jobs)
    return os.cpu_count() or 1
