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
"""Tests of the per-run knowledge base of article indexes.

Run as: `py.test test_knowledge_base.py`
"""

import threading
from concurrent.futures import ThreadPoolExecutor

import pytest

from polyfact.errors import EmptyCorpus
from polyfact.knowledge.base import KnowledgeBase, wikipedia_loader
from polyfact.knowledge.documents import KnowledgeDocument
from polyfact.knowledge.wikipedia import ArticleCache, WikipediaClient

from .conftest import FakeResponse, FakeSession, make_topic, wikipedia_payload


def counting_loader(text: str = "Ada Example was born in Testland. She was elected in 2014."):
    calls = []
    lock = threading.Lock()

    def load(topic):
        with lock:
            calls.append(topic.id)
        return KnowledgeDocument(topic.wikipedia_title, "1", text)

    return load, calls


def test_index_is_built_once_per_title():
    """Test that concurrent requests for the same article build one index.

    Expectation
    -----------

    **Pass**: The loader is called once, and every caller gets the same index
    """
    load, calls = counting_loader()
    knowledge = KnowledgeBase(load)
    topic = make_topic()

    with ThreadPoolExecutor(max_workers=8) as executor:
        indexes = list(executor.map(lambda _: knowledge.index_for(topic), range(16)))

    assert calls == ["testland"]
    assert all(index is indexes[0] for index in indexes)


def test_index_is_persisted_and_reloaded(tmp_path):
    load, calls = counting_loader()
    topic = make_topic()
    first = KnowledgeBase(load, window=8, stride=4, index_dir=tmp_path).index_for(topic)
    second = KnowledgeBase(load, window=8, stride=4, index_dir=tmp_path).index_for(topic)

    assert calls == ["testland"]
    assert first == second
    assert len(list(tmp_path.glob("*.w8.s4.json"))) == 1


def test_empty_article_has_no_index():
    load, _ = counting_loader("")
    with pytest.raises(EmptyCorpus):
        KnowledgeBase(load).index_for(make_topic())


def test_wikipedia_loader(tmp_path):
    session = FakeSession([FakeResponse(200, wikipedia_payload("Ada Example", "Ada Example was born in 1990."))])
    loader = wikipedia_loader(ArticleCache(tmp_path), WikipediaClient(session=session, backoff=0.0))
    index = KnowledgeBase(loader).index_for(make_topic())
    assert len(index) == 1
    assert index.passages[0].title == "Ada Example"
