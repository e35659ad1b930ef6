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
"""Tests of the BM25 passage index, checked against a brute-force scorer.

Run as: `py.test test_index.py`
"""

import math
import random
from collections import Counter

import pytest

from polyfact.core.types import PassageId
from polyfact.errors import EmptyCorpus, KnowledgeError
from polyfact.knowledge.documents import Passage
from polyfact.knowledge.index import B, K1, bm25_score, build_index, load_index, retrieve, save_index
from polyfact.knowledge.text import tokenize

VOCABULARY = "obama born honolulu president senate illinois harvard law review nobel peace prize".split()


def random_passages(seed: int, count: int = 12, title: str = "Corpus") -> list[Passage]:
    generator = random.Random(seed)
    passages = []
    for ordinal in range(count):
        words = [generator.choice(VOCABULARY) for _ in range(generator.randint(3, 30))]
        passages.append(Passage(PassageId(title, ordinal), " ".join(words), len(words)))
    return passages


def brute_force_bm25(query: str, passages: list[Passage], documents=None) -> list[tuple[PassageId, float]]:
    """Score every passage by the textbook BM25 formula, recomputing the
    corpus statistics from the passage texts."""
    documents = documents if documents is not None else [tokenize(passage.text) for passage in passages]
    n = len(documents)
    avg = sum(len(terms) for terms in documents) / n
    query_terms = tokenize(query)
    df = {term: sum(1 for other in documents if term in other) for term in set(query_terms)}
    results = []
    for passage, terms in zip(passages, documents):
        counts = Counter(terms)
        score = 0.0
        for term in query_terms:
            tf = counts[term]
            if not tf:
                continue
            idf = math.log((n - df[term] + 0.5) / (df[term] + 0.5) + 1)
            score += idf * tf * (K1 + 1) / (tf + K1 * (1 - B + B * len(terms) / avg))
        results.append((passage.passage_id, score))
    return sorted(results, key=lambda item: (-item[1], item[0]))


RARE_WORDS = [f"term{number}" for number in range(40)]
UNSEEN_WORDS = ["zanzibar", "quokka", "tundra"]


def random_corpus(generator: random.Random) -> list[Passage]:
    """Up to 1000 passages over a skewed vocabulary, about a tenth of them
    copies of an earlier passage so that retrieval meets exact ties."""
    vocabulary = VOCABULARY + RARE_WORDS
    passages: list[Passage] = []
    for ordinal in range(generator.randint(1, 1000)):
        if passages and generator.random() < 0.1:
            text = generator.choice(passages).text
        else:
            text = " ".join(generator.choice(vocabulary) for _ in range(generator.randint(1, 40)))
        passages.append(Passage(PassageId("Corpus", ordinal), text, len(text.split())))
    generator.shuffle(passages)
    return passages


def random_queries(generator: random.Random, count: int = 20) -> list[str]:
    """Random queries, the first of which shares no term with any corpus."""
    queries = [" ".join(generator.sample(UNSEEN_WORDS, 2))]
    pool = VOCABULARY + RARE_WORDS + UNSEEN_WORDS
    while len(queries) < count:
        queries.append(" ".join(generator.choice(pool) for _ in range(generator.randint(1, 5))))
    return queries


@pytest.mark.parametrize("seed", range(50))
def test_retrieve_matches_brute_force(seed):
    """Test retrieval over random corpora against the brute-force scorer, for
    twenty queries per corpus and a range of `k`.

    Expectation
    -----------

    **Pass**: `min(k, n)` results, each scored within 1e-9 of the brute-force
    score, ordered by descending score then passage id, and no passage left out
    scoring above the last one returned

    On-Failure
    ----------

      * Check the idf formula, and the length normalisation of the term
        frequency
      * Check the tie-break on the passage id
    """
    generator = random.Random(seed)
    passages = random_corpus(generator)
    documents = [tokenize(passage.text) for passage in passages]
    index = build_index(passages)

    for query in random_queries(generator):
        k = generator.choice([1, 3, 5, 10, 50, 2000])
        oracle = dict(brute_force_bm25(query, passages, documents))
        found = retrieve(index, query, k)

        assert len(found) == min(k, len(passages))
        assert found == sorted(found, key=lambda item: (-item[1], item[0]))
        for passage_id, score in found:
            assert score == pytest.approx(oracle[passage_id], abs=1e-9)

        returned = {passage_id for passage_id, _ in found}
        lowest = found[-1][1]
        assert all(score <= lowest + 1e-9 for passage_id, score in oracle.items() if passage_id not in returned)


def test_query_sharing_no_term_ranks_by_passage_id():
    passages = random_passages(4)
    found = retrieve(build_index(passages), "zanzibar quokka", 4)
    assert found == [(PassageId("Corpus", ordinal), 0.0) for ordinal in range(4)]


def test_bm25_parameters():
    """Test the BM25 constants and the smoothed idf on a two passage corpus.

    Expectation
    -----------

    **Pass**: k1 is 1.2 and b is 0.75; a term found once in one of two
    passages of average length scores `log(2)`
    """
    assert (K1, B) == (1.2, 0.75)
    passages = [Passage(PassageId("T", 0), "alpha beta", 2), Passage(PassageId("T", 1), "gamma delta", 2)]
    found = retrieve(build_index(passages), "alpha", 1)
    assert found == [(PassageId("T", 0), pytest.approx(math.log(2), abs=1e-12))]


def test_bm25_score_agrees_with_retrieve():
    passages = random_passages(7)
    index = build_index(passages)
    for passage_id, score in retrieve(index, "harvard law review", 3):
        direct = bm25_score(tokenize("harvard law review"), index.passage(passage_id), index.corpus_stats)
        assert direct == pytest.approx(score, abs=1e-12)


def test_ties_are_broken_by_passage_id():
    """Test that passages with equal scores come back in passage id order."""
    passages = [Passage(PassageId("T", i), "same words here", 3) for i in (2, 0, 1)]
    index = build_index(passages)
    assert [passage_id.ordinal for passage_id, _ in retrieve(index, "words", 3)] == [0, 1, 2]


def test_retrieve_returns_at_most_k():
    index = build_index(random_passages(3, count=4))
    assert len(retrieve(index, "obama", 10)) == 4
    assert len(retrieve(index, "obama", 2)) == 2
    assert len(retrieve(index, "unrelated query", 3)) == 3


def test_unknown_terms_score_zero():
    index = build_index(random_passages(1, count=3))
    assert all(score == 0.0 for _, score in retrieve(index, "zanzibar", 3))


def test_document_frequency_bounded_by_passage_count():
    index = build_index(random_passages(11))
    stats = index.corpus_stats
    assert all(0 < df <= stats.n_passages for df in stats.document_frequency.values())


def test_invalid_retrieval_arguments():
    index = build_index(random_passages(0, count=2))
    with pytest.raises(ValueError):
        retrieve(index, "obama", 0)
    with pytest.raises(EmptyCorpus):
        build_index([])


def test_index_persistence(tmp_path):
    """Test that a saved index loads back equal, and byte-identical when saved
    again."""
    index = build_index(random_passages(5))
    path = tmp_path / "index.json"
    save_index(index, path)
    loaded = load_index(path)
    assert loaded == index
    assert loaded.serialise() == path.read_text(encoding="utf-8")


def test_corrupt_index_is_rejected(tmp_path):
    index = build_index(random_passages(5))
    path = tmp_path / "index.json"
    save_index(index, path)
    path.write_text(path.read_text(encoding="utf-8").replace('"format_version":1', '"format_version":9'))
    with pytest.raises(KnowledgeError):
        load_index(path)


@pytest.mark.parametrize("content", ['{"format_version": 1}', "[]", '{"format_version": 1, "passages": [{}]}'])
def test_malformed_index_is_rejected(tmp_path, content):
    path = tmp_path / "index.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(KnowledgeError):
        load_index(path)
