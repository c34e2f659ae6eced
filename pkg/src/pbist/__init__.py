"""Parallel-batched interpolation search trees over int64 keys."""

from . import primitives
from .batched import (
    RouteSegment,
    batched_traverse,
    contains_batched,
    insert_batched,
    normalize_batch,
    remove_batched,
    route_segments,
)
from .core import (
    DEFAULT_CONFIG,
    Config,
    IdIndex,
    Node,
    Tree,
    Violation,
    compact,
    contains_scalar,
    interpolation_search,
    validate,
)
from .oracle import OracleSet, oracle_contains_batched, oracle_insert_batched, oracle_remove_batched
from .primitives import get_num_workers, num_workers, set_num_workers
from .rebuild import build_ideal, flatten, height, is_ideally_balanced, rebuild_with_batch

__version__ = "0.1.0"

__all__ = [
    "primitives",
    "Config",
    "DEFAULT_CONFIG",
    "IdIndex",
    "Node",
    "Tree",
    "Violation",
    "RouteSegment",
    "OracleSet",
    "build_ideal",
    "flatten",
    "height",
    "is_ideally_balanced",
    "rebuild_with_batch",
    "interpolation_search",
    "contains_scalar",
    "validate",
    "compact",
    "normalize_batch",
    "contains_batched",
    "insert_batched",
    "remove_batched",
    "batched_traverse",
    "route_segments",
    "oracle_contains_batched",
    "oracle_insert_batched",
    "oracle_remove_batched",
    "set_num_workers",
    "get_num_workers",
    "num_workers",
]
