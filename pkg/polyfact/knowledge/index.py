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
"""Okapi BM25 retrieval over the passages of the knowledge store.

The index is built once per article and is immutable afterwards, so it can be
read from any number of worker threads. Scores follow the standard Okapi BM25
formula with fixed parameters `k1 = 1.2` and `b = 0.75`:

````
score(q, p) = sum over terms t of q of
    idf(t) * tf(t, p) * (k1 + 1) / (tf(t, p) + k1 * (1 - b + b * |p| / avg_len))

idf(t) = ln((N - df(t) + 0.5) / (df(t) + 0.5) + 1)
````

where `|p|` is the number of analysed terms in the passage (see
[`tokenize`][polyfact.knowledge.text.tokenize]), and the sum runs over the query
terms *with* repetition: a term repeated in the query counts twice.

[`retrieve`][polyfact.knowledge.index.retrieve] walks the postings lists, but adds
up the per-term contributions in the same order as
[`bm25_score`][polyfact.knowledge.index.bm25_score] does, so the two always agree
to the last bit.

Persistence
-----------

[`save_index`][polyfact.knowledge.index.save_index] writes the index as a single
JSON document with a `format_version` field, sorted keys and no insignificant
whitespace. The same passages always give the same bytes.
"""

import json
import logging
import math
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import attrs

from polyfact.core.types import PassageId
from polyfact.errors import EmptyCorpus, KnowledgeError
from polyfact.helpers.files import atomic_write_text
from polyfact.knowledge.documents import Passage
from polyfact.knowledge.text import tokenize

logger = logging.getLogger(__name__)

K1 = 1.2
B = 0.75

INDEX_FORMAT_VERSION = 1
"""Version written to (and required from) persisted index files."""

###
### Classes
###


@attrs.frozen
class CorpusStats:
    """The corpus-wide statistics needed by BM25.

    Attributes
    ----------

    n_passages: int
        Number of passages in the corpus.
    avg_passage_length: float
        Mean number of analysed terms per passage.
    document_frequency: Mapping[str, int]
        For each term, the number of passages containing it. Never more than
        `n_passages`.
    """

    n_passages: int
    avg_passage_length: float
    document_frequency: Mapping[str, int]

    def idf(self, term: str) -> float:
        """The BM25 inverse document frequency of `term`; a term unknown to the
        corpus has a document frequency of zero."""
        df = self.document_frequency.get(term, 0)
        return math.log((self.n_passages - df + 0.5) / (df + 0.5) + 1)

    def as_dict(self) -> dict:
        return {
            "n_passages": self.n_passages,
            "avg_passage_length": self.avg_passage_length,
            "document_frequency": dict(self.document_frequency),
        }


@attrs.frozen
class RetrievalIndex:
    """An immutable BM25 index over a list of passages.

    Build instances with [`build_index`][polyfact.knowledge.index.build_index]
    rather than directly: the postings must be consistent with the passages.

    Attributes
    ----------

    passages: tuple[Passage, ...]
        The indexed passages, in document order.
    corpus_stats: CorpusStats
        Statistics of the passages.
    postings: Mapping[str, tuple[tuple[PassageId, int], ...]]
        For each term, the passages holding it together with the term
        frequency, in passage order.
    lengths: tuple[int, ...]
        Analysed length of each passage, parallel to `passages`.
    """

    passages: tuple[Passage, ...]
    corpus_stats: CorpusStats
    postings: Mapping[str, tuple[tuple[PassageId, int], ...]]
    lengths: tuple[int, ...]
    _positions: dict[PassageId, int] = attrs.field(init=False, eq=False, repr=False)

    def __attrs_post_init__(self) -> None:
        positions = {passage.passage_id: position for position, passage in enumerate(self.passages)}
        object.__setattr__(self, "_positions", positions)

    def __len__(self) -> int:
        return len(self.passages)

    def __contains__(self, passage_id: object) -> bool:
        return passage_id in self._positions

    def passage(self, passage_id: PassageId) -> Passage:
        """Look up a passage by id.

        Raises
        ------

        KeyError:
            The passage is not part of this index.
        """
        return self.passages[self._positions[passage_id]]

    @property
    def passage_ids(self) -> tuple[PassageId, ...]:
        return tuple(passage.passage_id for passage in self.passages)

    def as_dict(self) -> dict:
        return {
            "format_version": INDEX_FORMAT_VERSION,
            "passages": [passage.as_dict() for passage in self.passages],
            "corpus_stats": self.corpus_stats.as_dict(),
            "postings": {
                term: [[str(passage_id), tf] for passage_id, tf in entries]
                for term, entries in self.postings.items()
            },
        }

    def serialise(self) -> str:
        """The canonical JSON form of the index."""
        return json.dumps(self.as_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


###
### Functions
###


def _term_contribution(tf: int, length: int, idf: float, avg_length: float) -> float:
    norm = K1 * (1 - B + B * length / avg_length) if avg_length > 0 else K1
    return idf * tf * (K1 + 1) / (tf + norm)


def build_index(passages: Sequence[Passage]) -> RetrievalIndex:
    """Build a BM25 index over `passages`.

    Raises
    ------

    EmptyCorpus:
        `passages` is empty.

    Example
    -------

    ````python
    index = build_index([Passage(PassageId("T", 0), "a b a", 3)])
    index.postings["a"]   # ((PassageId("T", 0), 2),)
    ````
    """
    if not passages:
        msg = "Cannot build an index over no passages"
        raise EmptyCorpus(msg)

    postings: dict[str, list[tuple[PassageId, int]]] = {}
    lengths = []
    for passage in passages:
        terms = tokenize(passage.text)
        lengths.append(len(terms))
        for term, tf in Counter(terms).items():
            postings.setdefault(term, []).append((passage.passage_id, tf))

    n_passages = len(passages)
    stats = CorpusStats(
        n_passages=n_passages,
        avg_passage_length=sum(lengths) / n_passages,
        document_frequency={term: len(entries) for term, entries in sorted(postings.items())},
    )

    return RetrievalIndex(
        passages=tuple(passages),
        corpus_stats=stats,
        postings={term: tuple(entries) for term, entries in sorted(postings.items())},
        lengths=tuple(lengths),
    )


def bm25_score(query_terms: Iterable[str], passage: Passage, stats: CorpusStats) -> float:
    """The Okapi BM25 score of `passage` for `query_terms`.

    Query terms absent from the passage contribute nothing, and repeated query
    terms contribute once per repetition.

    Parameters
    ----------

    query_terms: Iterable[str]
        Analysed query terms (as returned by `tokenize`).
    passage: Passage
        The passage to score.
    stats: CorpusStats
        Statistics of the corpus the passage belongs to.
    """
    terms = tokenize(passage.text)
    counts = Counter(terms)
    score = 0.0
    for term in query_terms:
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        score += _term_contribution(tf, len(terms), stats.idf(term), stats.avg_passage_length)
    return score


def retrieve(index: RetrievalIndex, query: str, k: int) -> list[tuple[PassageId, float]]:
    """The `k` best passages of `index` for `query`.

    Results are ordered by descending score, ties broken by ascending passage
    id. Every passage is a candidate, even one sharing no term with the query
    (its score is zero), so the result always holds `min(k, len(index))`
    entries.

    Raises
    ------

    ValueError:
        `k` is less than one.
    EmptyCorpus:
        The index holds no passages.
    """
    if k < 1:
        msg = f"k must be at least 1 (got {k})"
        raise ValueError(msg)
    if not index.passages:
        msg = "Cannot retrieve from an empty index"
        raise EmptyCorpus(msg)

    stats = index.corpus_stats
    positions = {passage.passage_id: position for position, passage in enumerate(index.passages)}
    scores = [0.0] * len(index.passages)
    for term in tokenize(query):
        entries = index.postings.get(term)
        if not entries:
            continue
        idf = stats.idf(term)
        for passage_id, tf in entries:
            position = positions[passage_id]
            scores[position] += _term_contribution(tf, index.lengths[position], idf, stats.avg_passage_length)

    ranked = sorted(zip(index.passage_ids, scores), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def save_index(index: RetrievalIndex, path: Union[str, Path]) -> None:
    """Persist `index` to `path` as canonical JSON."""
    atomic_write_text(Path(path), index.serialise())
    logger.debug("Saved index of %d passages to %s", len(index), path)


def load_index(path: Union[str, Path]) -> RetrievalIndex:
    """Load an index written by [`save_index`][polyfact.knowledge.index.save_index].

    The index is rebuilt from the stored passages and checked against the
    stored postings.

    Raises
    ------

    KnowledgeError:
        The file cannot be read, has another format version, or its postings
        do not match its passages.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        msg = f"Cannot read index file {path}: {exc}"
        raise KnowledgeError(msg) from exc

    version = data.get("format_version") if isinstance(data, dict) else None
    if version != INDEX_FORMAT_VERSION:
        msg = f"Index file {path} has format version {version}, expected {INDEX_FORMAT_VERSION}"
        raise KnowledgeError(msg)

    try:
        index = build_index([Passage.from_dict(entry) for entry in data["passages"]])
        postings = data["postings"]
    except (KeyError, TypeError, ValueError) as exc:
        msg = f"Index file {path} is malformed: {type(exc).__name__}: {exc}"
        raise KnowledgeError(msg) from exc
    if index.as_dict()["postings"] != postings:
        msg = f"Index file {path} has postings inconsistent with its passages"
        raise KnowledgeError(msg)
    return index
