"""Line-delimited JSON files.

Every intermediate artifact in the pipeline is a plain text file with one JSON
object per line, so stages are inspectable with standard tools and resumable
after interruption. Files may start with header lines carrying a "_header" key.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Iterator


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_lines(path, objs: Iterable[dict], header: dict | None = None) -> None:
    """Write records atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            if header is not None:
                fh.write(dumps_line({"_header": header}) + "\n")
            for obj in objs:
                fh.write(dumps_line(obj) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def append_line(path, obj: dict) -> None:
    """Append one record and flush; used for append-only logs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(dumps_line(obj) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_lines(path, skip_header: bool = True) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            if skip_header and isinstance(obj, dict) and "_header" in obj:
                continue
            yield obj
