"""
Helper Functions for the Dispatching Engine
Common utility functions used throughout the engine
"""

import hashlib
import json
import re
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd

DURATION_UNITS = {
    's': 1,
    'm': 60,
    'h': 3600,
    'd': 86400,
}

DURATION_PATTERN = re.compile(r"(\d+(?:\.\d+)?)(seconds?|secs?|s|minutes?|mins?|m|hours?|hrs?|h|days?|d)")


def parse_duration(value: Union[str, int, float, None]) -> Optional[float]:
    """Seconds from a number or a string such as '90', '10m', '1h30m'."""
    if value is None or isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)

    text = re.sub(r"\s+", "", str(value).lower())
    try:
        return float(text)
    except ValueError:
        pass

    total = 0.0
    consumed = 0
    for match in DURATION_PATTERN.finditer(text):
        total += float(match.group(1)) * DURATION_UNITS[match.group(2)[0]]
        consumed += len(match.group(0))
    if consumed == 0 or consumed != len(text):
        return None
    return total


def format_duration(seconds: float) -> str:
    total_seconds = int(round(seconds))

    if total_seconds < 0:
        return "0s"

    days, remainder = divmod(total_seconds, 86400)
    hours, remainder = divmod(remainder, 3600)
    minutes, secs = divmod(remainder, 60)

    parts = []
    if days > 0:
        parts.append(f"{days}d")
    if hours > 0:
        parts.append(f"{hours}h")
    if minutes > 0:
        parts.append(f"{minutes}m")
    if secs > 0 or not parts:
        parts.append(f"{secs}s")
    return "".join(parts)


def parse_timestamp(value: Union[str, int, float]) -> float:
    """POSIX seconds from a number or an ISO-8601 string; naive times are UTC."""
    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        return float(value)
    try:
        stamp = pd.Timestamp(str(value).strip())
    except (TypeError, ValueError) as e:
        raise ValueError(f"cannot parse timestamp {value!r}") from e
    if stamp is pd.NaT:
        raise ValueError(f"cannot parse timestamp {value!r}")
    if stamp.tzinfo is None:
        stamp = stamp.tz_localize('UTC')
    return stamp.timestamp()


def format_timestamp(t: float) -> str:
    return pd.Timestamp(float(t), unit='s', tz='UTC').isoformat()


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(',', ':'), default=str)


def generate_hash(data: str, length: int = 16) -> str:
    return hashlib.sha256(data.encode()).hexdigest()[:length]


def hash_file(path: Union[str, Path], length: int = 16) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()[:length]


def format_bytes(size: float) -> str:
    for unit in ['B', 'KB', 'MB', 'GB', 'TB']:
        if abs(size) < 1024:
            return f"{size:.2f} {unit}"
        size /= 1024
    return f"{size:.2f} PB"


def merge_dicts(base: dict, override: dict) -> dict:
    result = base.copy()
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_dicts(result[key], value)
        else:
            result[key] = value
    return result


def split_csv_arg(value: Optional[str]) -> list:
    if value is None:
        return []
    return [part.strip() for part in str(value).split(',') if part.strip()]
