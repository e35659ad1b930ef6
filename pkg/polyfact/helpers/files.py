# This module, and all included code, is made available under the terms of the MIT Licence
#
# Copyright (c) 2024 The polyfact Authors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to
# use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of
# the Software, and to permit persons to whom the Software is furnished to do so,
# subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY, FITNESS
# FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR
# COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER
# IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN
# CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
"""Small file helpers shared by the caches, the index persistence and the run
store.

All writes which other workers might observe are made with
[`atomic_write_text`][polyfact.helpers.files.atomic_write_text], which writes a
temporary file in the target directory and then renames it into place: readers
therefore see either the old file or the new one, never a partial write.
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterator, Union

logger = logging.getLogger(__name__)


def sha256_hex(data: Union[str, bytes]) -> str:
    """Return the hexadecimal SHA-256 digest of `data`, encoding text as
    UTF-8."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def stable_json(payload: Any) -> str:
    """Serialise `payload` with sorted keys and no insignificant whitespace, so
    equal values always give identical text."""
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def atomic_write_text(path: Path, text: str) -> None:
    """Write `text` to `path` by way of a temporary file and a rename.

    Parameters
    ----------

    path: Path
        The destination. Parent directories are created when missing.
    text: str
        The content, written as UTF-8.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def has_torn_tail(path: Path) -> bool:
    """Whether `path` ends part way through a line, as left by an interrupted
    append. Missing and empty files have no torn tail."""
    path = Path(path)
    if not path.is_file() or path.stat().st_size == 0:
        return False
    with path.open("rb") as handle:
        handle.seek(-1, os.SEEK_END)
        return handle.read(1) != b"\n"


def read_jsonl(path: Path) -> Iterator[dict]:
    """Yield the JSON objects stored one per line in `path`.

    A final line which cannot be parsed is taken to be the remains of an
    interrupted write, and is skipped with a warning. An unparseable line
    anywhere else is an error.

    Raises
    ------

    ValueError:
        A line other than the last is not valid JSON.
    """
    path = Path(path)
    if not path.exists():
        return

    lines = path.read_text(encoding="utf-8").splitlines()
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            if number == len(lines):
                logger.warning("Ignoring truncated final line %d of %s", number, path)
                return
            msg = f"Invalid JSON on line {number} of {path}"
            raise ValueError(msg) from exc
