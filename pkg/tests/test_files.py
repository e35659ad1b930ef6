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
"""Tests of the file helpers used by the run store.

Run as: `py.test test_files.py`
"""

import pytest

from polyfact.helpers.files import has_torn_tail, read_jsonl


@pytest.mark.parametrize(
    "content, torn",
    [
        (None, False),
        (b"", False),
        (b'{"a": 1}\n', False),
        (b'{"a": 1}\n{"b": 2}\n', False),
        (b'{"a": 1}\n{"b"', True),
        (b'{"a": 1}\n{"b": 2}', True),
    ],
)
def test_has_torn_tail(tmp_path, content, torn):
    path = tmp_path / "records.jsonl"
    if content is not None:
        path.write_bytes(content)
    assert has_torn_tail(path) is torn


def test_read_jsonl_skips_a_torn_tail(tmp_path):
    path = tmp_path / "records.jsonl"
    path.write_text('{"a": 1}\n{"b": 2}\n{"c": ', encoding="utf-8")
    assert list(read_jsonl(path)) == [{"a": 1}, {"b": 2}]
