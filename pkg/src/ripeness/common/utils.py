"""
Common utility functions.
"""

import time
from typing import Any, Dict, List


def elapsed_ms(start: float) -> float:
    """Milliseconds elapsed since a :func:`time.perf_counter` reading."""
    return (time.perf_counter() - start) * 1000.0


def inject_ids_into_cells(cells: List[Dict[str, Any]], prefix: str = "cell") -> List[Dict[str, Any]]:
    """
    Ensures every grid-cell mapping has a ``config_id``. If missing, a positional id is assigned.

    Args:
        cells: Parsed key/value blocks of a grid file.
        prefix: Prefix of generated identifiers.

    Returns:
        The same list with ``config_id`` injected where missing.

    >>> inject_ids_into_cells([{"lr": "0.1"}, {"config_id": "x"}])
    [{'lr': '0.1', 'config_id': 'cell-01'}, {'config_id': 'x'}]
    """
    for position, cell in enumerate(cells, start=1):
        if not isinstance(cell, dict):
            raise ValueError(f"Each cell must be a dict, got: {type(cell)} -> {cell}")
        if "config_id" not in cell:
            cell["config_id"] = f"{prefix}-{position:02d}"
    return cells
