"""
Utility modules for the Dispatching Engine
"""

from .helpers import (
    parse_duration,
    format_duration,
    parse_timestamp,
    format_timestamp,
    canonical_json,
    generate_hash,
    hash_file,
    format_bytes,
    merge_dicts,
    split_csv_arg
)
from .validators import (
    check_file,
    check_center_count,
    check_gap_vector
)

__all__ = [
    'parse_duration',
    'format_duration',
    'parse_timestamp',
    'format_timestamp',
    'canonical_json',
    'generate_hash',
    'hash_file',
    'format_bytes',
    'merge_dicts',
    'split_csv_arg',
    'check_file',
    'check_center_count',
    'check_gap_vector'
]
