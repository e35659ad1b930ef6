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
"""The per-run knowledge base: one retrieval index per topic article.

A [`KnowledgeBase`][polyfact.knowledge.base.KnowledgeBase] turns a topic into
the [`RetrievalIndex`][polyfact.knowledge.index.RetrievalIndex] of its article,
by way of a *loader* (any callable mapping a `Topic` to a `KnowledgeDocument`).
Two loaders are used in practice:

* [`wikipedia_loader`][polyfact.knowledge.base.wikipedia_loader], which reads
  the article cache, downloading on a miss;
* the synthetic articles of the mock backend, used for offline runs.

Indexes are built at most once per title and then shared by every worker
thread. When an `index_dir` is given the built indexes are also persisted, and
loaded from there by later runs.
"""

import logging
import threading
from pathlib import Path
from typing import Callable, Optional, Union
from urllib.parse import quote

from polyfact.core.types import Topic
from polyfact.knowledge.documents import DEFAULT_STRIDE, DEFAULT_WINDOW, KnowledgeDocument, chunk_document
from polyfact.knowledge.index import RetrievalIndex, build_index, load_index, save_index
from polyfact.knowledge.wikipedia import ArticleCache, WikipediaClient, fetch_article

logger = logging.getLogger(__name__)

DocumentLoader = Callable[[Topic], KnowledgeDocument]
"""Produces the knowledge document of a topic."""


def wikipedia_loader(
    cache: ArticleCache, client: Optional[WikipediaClient] = None, *, offline: bool = False
) -> DocumentLoader:
    """A loader reading each topic's `wikipedia_title` through `cache`."""

    def load(topic: Topic) -> KnowledgeDocument:
        return fetch_article(topic.wikipedia_title, cache=cache, client=client, offline=offline)

    return load


class KnowledgeBase:
    """Thread-safe memo of topic article to retrieval index.

    Parameters
    ----------

    loader: DocumentLoader
        Produces the article of a topic.
    window: int
        Passage window, in whitespace tokens.
    stride: int
        Passage stride, in whitespace tokens.
    index_dir: Path, optional
        Directory in which built indexes are persisted.
    """

    def __init__(
        self,
        loader: DocumentLoader,
        *,
        window: int = DEFAULT_WINDOW,
        stride: int = DEFAULT_STRIDE,
        index_dir: Optional[Union[str, Path]] = None,
    ) -> None:
        self.loader = loader
        self.window = window
        self.stride = stride
        self.index_dir = Path(index_dir) if index_dir is not None else None

        self._indexes: dict[str, RetrievalIndex] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock_for(self, title: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(title, threading.Lock())

    def _index_path(self, title: str) -> Optional[Path]:
        if self.index_dir is None:
            return None
        return self.index_dir / f"{quote(title, safe='')}.w{self.window}.s{self.stride}.json"

    def index_for(self, topic: Topic) -> RetrievalIndex:
        """The retrieval index over `topic`'s article, built on first use.

        Raises
        ------

        ArticleNotFound, NetworkError:
            The article could not be loaded.
        EmptyCorpus:
            The article has no text.
        """
        title = topic.wikipedia_title
        if title in self._indexes:
            return self._indexes[title]

        with self._lock_for(title):
            if title not in self._indexes:
                self._indexes[title] = self._build(topic)
        return self._indexes[title]

    def _build(self, topic: Topic) -> RetrievalIndex:
        path = self._index_path(topic.wikipedia_title)
        if path is not None and path.is_file():
            logger.debug("Loading index for '%s' from %s", topic.wikipedia_title, path)
            return load_index(path)

        doc = self.loader(topic)
        index = build_index(chunk_document(doc, self.window, self.stride))
        logger.debug("Indexed '%s': %d passages", topic.wikipedia_title, len(index))

        if path is not None:
            save_index(index, path)
        return index
