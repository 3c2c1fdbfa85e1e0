"""
Flat ``key = value`` configuration files.

One assignment per line, ``#`` starts a comment, blank lines separate blocks (grid files hold one
block per cell).
"""

from pathlib import Path
from typing import Dict, List

from ..errors import ConfigError, DatasetIOError


def parse_blocks(text: str) -> List[Dict[str, str]]:
    """
    Parse ``key = value`` text into one mapping per blank-line separated block.

    >>> parse_blocks("a = 1  # one\\nb = x\\n\\n# second\\na = 2\\n")
    [{'a': '1', 'b': 'x'}, {'a': '2'}]
    """
    blocks: List[Dict[str, str]] = []
    current: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            # comment-only lines do not end a block
            if not raw.strip() and current:
                blocks.append(current)
                current = {}
            continue
        if "=" not in line:
            raise ConfigError(f"Line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"Line {number}: empty key")
        if key in current:
            raise ConfigError(f"Line {number}: duplicate key {key!r}")
        current[key] = value
    if current:
        blocks.append(current)
    return blocks


def parse_single(text: str) -> Dict[str, str]:
    """Parse a file that must hold exactly one block."""
    blocks = parse_blocks(text)
    if len(blocks) != 1:
        raise ConfigError(f"Expected a single configuration block, found {len(blocks)}")
    return blocks[0]


def read_text(path: Path) -> str:
    """Read a configuration file, naming it in the error when it cannot be read."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot read configuration file {path}: {e}") from e
