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
"""Knowledge documents, and their division into passages.

A [`KnowledgeDocument`][polyfact.knowledge.documents.KnowledgeDocument] holds
the plain text of one English Wikipedia article. Before it can be searched the
text is divided by [`chunk_document`][polyfact.knowledge.documents.chunk_document]
into overlapping windows of whitespace tokens, each window becoming a
[`Passage`][polyfact.knowledge.documents.Passage].

Chunking
--------

With a window of `w` tokens and a stride of `s` tokens:

* a document of at most `w` tokens gives exactly one passage;
* otherwise a passage starts at every multiple of `s` (`0, s, 2s, ...`) below
  the document length, and the last, partial, window is kept.

So ten tokens with `w = s = 4` give passages of 4, 4 and 2 tokens; and eight
tokens with `w = 4, s = 2` give passages starting at tokens 0, 2, 4 and 6. Every
token of the document is in at least one passage.
"""

from datetime import datetime
from typing import Any, Mapping

import attrs

from polyfact.core.types import PassageId, utc_now

DEFAULT_WINDOW = 256
"""Default passage length, in whitespace tokens."""

DEFAULT_STRIDE = 128
"""Default distance between the starts of consecutive passages."""


@attrs.frozen
class KnowledgeDocument:
    """The plain text of one Wikipedia article.

    Attributes
    ----------

    wikipedia_title: str
        The article title.
    revision_id: str
        The revision the text was taken from, recorded for reproducibility.
    plain_text: str
        Markup-free article text.
    fetched_at: datetime
        When the revision was downloaded.
    """

    wikipedia_title: str
    revision_id: str
    plain_text: str
    fetched_at: datetime = attrs.field(factory=utc_now)

    def as_dict(self) -> dict:
        return {
            "wikipedia_title": self.wikipedia_title,
            "revision_id": self.revision_id,
            "plain_text": self.plain_text,
            "fetched_at": self.fetched_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "KnowledgeDocument":
        return cls(
            wikipedia_title=data["wikipedia_title"],
            revision_id=str(data["revision_id"]),
            plain_text=data["plain_text"],
            fetched_at=datetime.fromisoformat(data["fetched_at"]),
        )


@attrs.frozen
class Passage:
    """One window of a knowledge document.

    Attributes
    ----------

    passage_id: PassageId
        The article title and the ordinal of the passage in the article.
    text: str
        The window's tokens, joined by single spaces.
    token_count: int
        Number of whitespace tokens in `text`; never more than the window.
    """

    passage_id: PassageId
    text: str
    token_count: int

    @property
    def title(self) -> str:
        return self.passage_id.title

    def as_dict(self) -> dict:
        return {"passage_id": str(self.passage_id), "text": self.text, "token_count": self.token_count}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Passage":
        return cls(PassageId.parse(data["passage_id"]), data["text"], int(data["token_count"]))


def window_starts(n_tokens: int, window: int, stride: int) -> range:
    """The token offsets at which passages start, for a document of `n_tokens`
    tokens."""
    if n_tokens <= window:
        return range(0, min(n_tokens, 1))
    return range(0, n_tokens, stride)


def chunk_document(
    doc: KnowledgeDocument, window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE
) -> list[Passage]:
    """Divide `doc` into sliding windows of whitespace tokens.

    Parameters
    ----------

    doc: KnowledgeDocument
        The document to divide.
    window: int
        Maximum number of tokens in a passage.
    stride: int
        Offset between the starts of consecutive passages, with `0 < stride <=
        window`.

    Returns
    -------

    list[Passage]
        The passages in document order. An empty document has no passages.

    Raises
    ------

    ValueError:
        `window` or `stride` is out of range.
    """
    if window <= 0:
        msg = f"window must be positive (got {window})"
        raise ValueError(msg)
    if not 0 < stride <= window:
        msg = f"stride must satisfy 0 < stride <= window (got stride={stride}, window={window})"
        raise ValueError(msg)

    tokens = doc.plain_text.split()
    passages = []
    for ordinal, start in enumerate(window_starts(len(tokens), window, stride)):
        chunk = tokens[start : start + window]
        passages.append(
            Passage(
                passage_id=PassageId(doc.wikipedia_title, ordinal),
                text=" ".join(chunk),
                token_count=len(chunk),
            )
        )
    return passages
