"""Flat ``key = value`` config files.

Keys mirror the long CLI flags without the leading dashes (``txs``,
``dep-ratio``; underscores are accepted too). ``#`` starts a comment.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Union


def load_config(path: Union[str, Path]) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        values[key.replace("_", "-").lower()] = value
    return values
