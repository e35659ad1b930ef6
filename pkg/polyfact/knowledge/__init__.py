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
"""The knowledge store: the English Wikipedia articles against which atomic
facts are verified.

* **[`wikipedia`][polyfact.knowledge.wikipedia]**: downloads articles as plain
  text, through a mandatory on-disk cache.
* **[`documents`][polyfact.knowledge.documents]**: divides an article into
  overlapping passages.
* **[`text`][polyfact.knowledge.text]**: the tokeniser shared by the index and
  by the lexical support score.
* **[`index`][polyfact.knowledge.index]**: Okapi BM25 indexing and top-k
  retrieval.
* **[`base`][polyfact.knowledge.base]**: the per-run memo of one index per
  topic article.
"""

### Expose the `knowledge` module interface as a full package
from .base import DocumentLoader, KnowledgeBase, wikipedia_loader
from .documents import DEFAULT_STRIDE, DEFAULT_WINDOW, KnowledgeDocument, Passage, chunk_document
from .index import (
    INDEX_FORMAT_VERSION,
    CorpusStats,
    RetrievalIndex,
    bm25_score,
    build_index,
    load_index,
    retrieve,
    save_index,
)
from .text import STOPWORDS, content_tokens, normalise, tokenize
from .wikipedia import ArticleCache, WikipediaClient, fetch_article, strip_headings
