"""Flat ``key = value`` configuration files.

Keys use the command-line flag spelling; ``-`` and ``_`` are interchangeable
and a leading ``--`` is ignored. Values stay strings; the command-line parser
converts them when they are installed as its defaults.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Union

from multiseq.errors import ConfigurationError

logger = logging.getLogger(__name__)

# A comment starts at "#" at the start of a line or after whitespace.
_COMMENT = re.compile(r"(?:^|\s)#.*$")


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def parse_config_lines(lines: list[str], source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = normalize_key(key)
        if not sep or not key:
            msg = f"{source}:{number}: expected 'key = value', got {raw.strip()!r}"
            raise ConfigurationError(msg)
        if key in values:
            msg = f"{source}:{number}: key {key!r} set twice"
            raise ConfigurationError(msg)
        values[key] = value.strip()
    return values


def read_config_file(path: Union[str, Path]) -> dict[str, str]:
    """Read a config file into ``{normalized_key: raw_value}``.

    Raises:
        ConfigurationError: The file cannot be read, a line has no ``=`` or a key repeats.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        msg = f"cannot read config file {path}: {exc}"
        raise ConfigurationError(msg) from exc
    values = parse_config_lines(text.splitlines(), str(path))
    logger.info("read %d settings from %s", len(values), path)
    return values
