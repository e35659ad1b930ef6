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
"""Tests of the LLM client: caching, credentials, retries, budget and the
reading of judge answers. HTTP is replaced by `FakeSession`.

Run as: `py.test test_backends.py`
"""

import threading
from concurrent.futures import ThreadPoolExecutor

import pytest
import requests

from polyfact.errors import AuthError, BackendUnavailable, BudgetExceeded, GatewayError
from polyfact.gateway.backends import (
    BackendSpec,
    CallBudget,
    CompletionRequest,
    LLMClient,
    RateLimiter,
    ResponseCache,
    cache_key,
    parse_judge_answer,
)

from .conftest import FakeResponse, FakeSession, chat_payload

ENV_VAR = "POLYFACT_TEST_KEY"


def http_spec(**overrides) -> BackendSpec:
    options = {
        "backend_kind": "http_chat",
        "model_id": "test-model",
        "endpoint_url": "https://llm.invalid/v1/chat/completions",
        "credentials_env_var": ENV_VAR,
        "backoff": 0.0,
        "max_retries": 2,
    }
    options.update(overrides)
    return BackendSpec(**options)


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv(ENV_VAR, "sk-test")


###
### Cache Keys
###


def test_cache_key_depends_on_the_request():
    request = CompletionRequest("Write a biography of Jacob Zuma", temperature=0.0, seed=0)
    key = cache_key("model-a", request)

    assert len(key) == 64
    assert key == cache_key("model-a", CompletionRequest("Write a biography of Jacob Zuma"))
    assert key != cache_key("model-b", request)
    assert key != cache_key("model-a", CompletionRequest(request.prompt, temperature=0.7))
    assert key != cache_key("model-a", CompletionRequest(request.prompt, seed=1))


def test_max_tokens_is_not_part_of_the_key():
    assert cache_key("m", CompletionRequest("p", max_tokens=10)) == cache_key("m", CompletionRequest("p"))


###
### Client
###


def test_request_payload(api_key):
    session = FakeSession([FakeResponse(200, chat_payload("Jacob Zuma is a politician."))])
    result = LLMClient(http_spec(), session=session).complete(CompletionRequest("Hello", seed=3))

    assert result.text == "Jacob Zuma is a politician."
    assert result.cached is False
    call = session.calls[0]
    assert call["method"] == "POST"
    assert call["json"]["model"] == "test-model"
    assert call["json"]["messages"] == [{"role": "user", "content": "Hello"}]
    assert call["json"]["seed"] == 3
    assert call["headers"]["Authorization"] == "Bearer sk-test"


def test_cache_hit_makes_no_call(api_key, tmp_path):
    """Test that a second identical request is served from the cache.

    Expectation
    -----------

    **Pass**: One network call, a `cached` second result, and one cache file
    holding the request for audit
    """
    session = FakeSession([FakeResponse(200, chat_payload("An answer."))])
    cache = ResponseCache(tmp_path)
    client = LLMClient(http_spec(), cache=cache, session=session)
    request = CompletionRequest("Hello")

    first = client.complete(request)
    second = LLMClient(http_spec(), cache=ResponseCache(tmp_path), session=session).complete(request)

    assert (first.text, second.text) == ("An answer.", "An answer.")
    assert second.cached is True
    assert len(session.calls) == 1
    assert [path.name for path in tmp_path.iterdir()] == [f"{first.cache_key}.json"]


def test_concurrent_identical_requests_share_one_call(api_key, tmp_path):
    lock = threading.Lock()

    def responder(**call):
        with lock:
            return FakeResponse(200, chat_payload("Once."))

    session = FakeSession(responder=responder)
    client = LLMClient(http_spec(), cache=ResponseCache(tmp_path), session=session)
    with ThreadPoolExecutor(max_workers=8) as executor:
        texts = list(executor.map(lambda _: client.complete(CompletionRequest("Same")).text, range(8)))

    assert texts == ["Once."] * 8
    assert len(session.calls) == 1


def test_missing_credentials(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    session = FakeSession([])
    with pytest.raises(AuthError, match=ENV_VAR):
        LLMClient(http_spec(), session=session).complete(CompletionRequest("Hello"))
    assert session.calls == []


def test_rejected_credentials_are_not_retried(api_key):
    session = FakeSession([FakeResponse(401)])
    with pytest.raises(AuthError):
        LLMClient(http_spec(), session=session).complete(CompletionRequest("Hello"))
    assert len(session.calls) == 1


def test_transient_failures_are_retried(api_key):
    session = FakeSession(
        [FakeResponse(503), requests.Timeout("slow"), FakeResponse(200, chat_payload("Finally."))]
    )
    client = LLMClient(http_spec(max_retries=2), session=session)
    assert client.complete(CompletionRequest("Hello")).text == "Finally."
    assert client.network_calls == 3


def test_backend_unavailable_after_retries(api_key):
    """Test that a backend which always answers 503 is given up after
    `max_retries` retries.

    Expectation
    -----------

    **Pass**: `BackendUnavailable` is raised after exactly three calls
    """
    session = FakeSession([FakeResponse(503)] * 3)
    with pytest.raises(BackendUnavailable):
        LLMClient(http_spec(max_retries=2), session=session).complete(CompletionRequest("Hello"))
    assert len(session.calls) == 3


def test_malformed_reply(api_key):
    session = FakeSession([FakeResponse(200, {"choices": []})])
    with pytest.raises(GatewayError):
        LLMClient(http_spec(), session=session).complete(CompletionRequest("Hello"))


def test_budget_counts_uncached_calls(api_key, tmp_path):
    session = FakeSession(responder=lambda **call: FakeResponse(200, chat_payload("Ok.")))
    budget = CallBudget(2)
    client = LLMClient(http_spec(), cache=ResponseCache(tmp_path), budget=budget, session=session)

    client.complete(CompletionRequest("one"))
    client.complete(CompletionRequest("two"))
    client.complete(CompletionRequest("one"))
    assert budget.used == 2

    with pytest.raises(BudgetExceeded):
        client.complete(CompletionRequest("three"))
    assert len(session.calls) == 2


def test_mock_backend_needs_no_credentials(tmp_path):
    client = LLMClient(BackendSpec.mock(), cache=ResponseCache(tmp_path))
    result = client.complete(CompletionRequest("Write a biography of Jacob Zuma"))
    assert "Jacob Zuma" in result.text
    assert result.cached is False
    assert list(tmp_path.iterdir()) == []


def test_spec_validation():
    with pytest.raises(ValueError):
        BackendSpec("http_chat", "model")
    with pytest.raises(ValueError):
        BackendSpec("mock", " ")
    with pytest.raises(ValueError):
        BackendSpec("mock", "mock", max_in_flight=0)


def test_rate_limiter_bounds_requests_in_flight():
    limiter = RateLimiter(rate=None, max_in_flight=2)
    active = []
    peak = []
    lock = threading.Lock()
    release = threading.Event()

    def work(_):
        with limiter:
            with lock:
                active.append(1)
                peak.append(len(active))
            release.wait(0.05)
            with lock:
                active.pop()

    with ThreadPoolExecutor(max_workers=6) as executor:
        list(executor.map(work, range(6)))
    assert max(peak) <= 2


def test_budget_must_not_be_negative():
    with pytest.raises(ValueError):
        CallBudget(-1)


###
### Sessions and Locks
###


def test_lock_stripes_are_bounded(tmp_path):
    """Test that cache locks come from a fixed pool, however many keys are
    seen.

    Expectation
    -----------

    **Pass**: A key always maps onto the same lock, and ten thousand keys use
    no more than `stripes` distinct locks
    """
    cache = ResponseCache(tmp_path, stripes=8)
    keys = [cache_key("model", CompletionRequest(f"prompt {number}")) for number in range(10_000)]

    assert all(cache.lock_for(key) is cache.lock_for(key) for key in keys[:100])
    assert len({id(cache.lock_for(key)) for key in keys}) <= 8

    with pytest.raises(ValueError):
        ResponseCache(tmp_path, stripes=0)


def test_unreadable_cache_entry_is_a_miss(api_key, tmp_path):
    session = FakeSession([FakeResponse(200, chat_payload("Fresh."))])
    cache = ResponseCache(tmp_path)
    request = CompletionRequest("Hello")
    cache.path_for(cache_key("test-model", request)).write_text('{"response": ', encoding="utf-8")

    result = LLMClient(http_spec(), cache=cache, session=session).complete(request)
    assert (result.text, result.cached) == ("Fresh.", False)
    assert cache.get(result.cache_key) == "Fresh."


def test_owned_session_is_reused_and_closed(api_key, monkeypatch):
    """Test that a client without a session opens one, uses it for every
    call, and releases it on `close`.

    Expectation
    -----------

    **Pass**: One session is opened for three calls, and it is closed on
    leaving the client's context; a closed client refuses further calls
    """
    opened = []

    def open_session():
        session = FakeSession(responder=lambda **call: FakeResponse(200, chat_payload("Ok.")))
        opened.append(session)
        return session

    monkeypatch.setattr(requests, "Session", open_session)
    with LLMClient(http_spec()) as client:
        for prompt in ("one", "two", "three"):
            client.complete(CompletionRequest(prompt))

    assert len(opened) == 1
    assert len(opened[0].calls) == 3
    assert opened[0].closed is True
    with pytest.raises(GatewayError, match="closed"):
        client.complete(CompletionRequest("four"))


def test_given_session_is_left_open(api_key):
    session = FakeSession([FakeResponse(200, chat_payload("Ok."))])
    client = LLMClient(http_spec(), session=session)
    client.complete(CompletionRequest("Hello"))
    client.close()

    assert session.closed is False


###
### Judge Answers
###


@pytest.mark.parametrize(
    "answer, supported",
    [
        ("True", True),
        ("False", False),
        ("true.", True),
        ("Output: False", False),
        ("The statement is not true, it is false.", False),
        ("False? No: true.", True),
        ("Supported", True),
        ("NotSupported", False),
        ("Not supported by the context.", False),
        ("There is not enough information.", False),
        ("Yes", True),
    ],
)
def test_parse_judge_answer(answer, supported):
    assert parse_judge_answer(answer) is supported
