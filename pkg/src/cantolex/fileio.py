"""Small file helpers shared by the pipeline stages."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator


def atomic_write(path: str | Path, text: str) -> None:
    """Write text to path via temp-file + rename so readers never see a torn file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_ndjson(path: str | Path, objs: Iterable[Any]) -> None:
    atomic_write(path, "".join(dump_json_line(o) + "\n" for o in objs))


def read_ndjson(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (1-based line number, parsed object), skipping blank lines."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON record: {exc}") from None
