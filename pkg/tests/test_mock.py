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
"""Tests of the deterministic mock backend and its synthetic articles.

Run as: `py.test test_mock.py`
"""

from polyfact.gateway.backends import CompletionRequest
from polyfact.gateway.mock import (
    REFUSAL_TEXT,
    MockBackend,
    MockOptions,
    false_claims,
    synthetic_article,
    synthetic_biography,
    true_claims,
)
from polyfact.gateway.templates import render_prompt

from .conftest import make_topic


def ask(backend: MockBackend, prompt: str, seed: int = 0) -> str:
    return backend.complete(CompletionRequest(prompt, seed=seed))


def test_biography_shape():
    """Test the default biography: three true and two false claims, one
    sentence each.

    Expectation
    -----------

    **Pass**: Five sentences, each claim present once
    """
    text = synthetic_biography("Ada Example", MockOptions(), seed=0)
    claims = true_claims("Ada Example", 3, 0) + false_claims("Ada Example", 2, 0)

    assert text.count(". ") == 4
    assert sorted(claim for claim in claims if claim in text) == sorted(claims)


def test_biography_depends_on_the_seed():
    backend = MockBackend()
    prompt = render_prompt("biography", "en", {"name": "Ada Example"})
    assert ask(backend, prompt, seed=1) == ask(backend, prompt, seed=1)
    assert ask(backend, prompt, seed=1) != ask(backend, prompt, seed=2)


def test_refusal_languages():
    backend = MockBackend(MockOptions(refuse_languages=["sw"]))
    assert ask(backend, render_prompt("biography", "sw", {"name": "Ada Example"})) == REFUSAL_TEXT
    assert ask(backend, render_prompt("biography", "de", {"name": "Ada Example"})) != REFUSAL_TEXT


def test_translation_is_identity():
    prompt = render_prompt("translate", "en", {"source_language": "German", "text": "Ada ist hier.\nZwei."})
    assert ask(MockBackend(), prompt) == "Ada ist hier.\nZwei."


def test_decomposition_is_one_bullet():
    prompt = render_prompt("decompose", "en", {"sentence": " Ada was born in 1990. "})
    assert ask(MockBackend(), prompt) == "- Ada was born in 1990."


def test_verification_checks_the_evidence():
    evidence = "Title: Ada Example\nText: Ada Example was born in 1990."
    backend = MockBackend()

    def verify(fact):
        return ask(backend, render_prompt("verify", "en", {"topic": "Ada", "evidence": evidence, "fact": fact}))

    assert verify("Ada Example was born in 1990.") == "Supported"
    assert verify("Ada Example was born in 1991.") == "NotSupported"


def test_unknown_prompt():
    assert ask(MockBackend(), "What is the weather?") == ""


def test_synthetic_article_holds_only_true_claims():
    topic = make_topic(leader="Ada Example")
    options = MockOptions()
    article = synthetic_article(topic, options, seed=4)

    assert article.wikipedia_title == "Ada Example"
    assert all(claim in article.plain_text for claim in true_claims("Ada Example", 3, 4))
    assert not any(claim in article.plain_text for claim in false_claims("Ada Example", 2, 4))


def test_options_round_trip():
    options = MockOptions(true_claims=4, false_claims=1, refuse_languages=["ar", "bn"])
    assert MockOptions(**options.as_dict()) == options
