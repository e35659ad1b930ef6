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
"""Shared fixtures for the `polyfact` test-suite.

None of the tests touch the network: HTTP is replaced by the fake sessions
defined here, and the evaluation pipeline runs on the mock backend over
synthetic articles.
"""

import json
from pathlib import Path
from typing import Any, Callable, Optional

import pytest

from polyfact.config import mock_config
from polyfact.core.roster import Roster, load_roster
from polyfact.core.types import BiographyEvaluation, GeoTag, Language, Outcome, Topic

FIXTURES = Path(__file__).parent / "fixtures"

###
### Fake HTTP
###


class FakeResponse:
    """The parts of `requests.Response` used by the library."""

    def __init__(self, status_code: int = 200, payload: Any = None, text: str = "") -> None:
        self.status_code = status_code
        self._payload = payload
        self.text = text or (json.dumps(payload) if payload is not None else "")

    def json(self) -> Any:
        if self._payload is None:
            raise ValueError("No JSON body")
        return self._payload


class FakeSession:
    """Replays a script of responses (or exceptions), and records every call.

    `responder` may be given instead of a script, to build the response from
    the call arguments.
    """

    def __init__(
        self,
        script: Optional[list] = None,
        responder: Optional[Callable[..., FakeResponse]] = None,
    ) -> None:
        self.script = list(script or [])
        self.responder = responder
        self.calls: list[dict] = []
        self.closed = False

    def _next(self, **call: Any) -> FakeResponse:
        self.calls.append(call)
        if self.responder is not None:
            return self.responder(**call)
        item = self.script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    def get(self, url: str, **kwargs: Any) -> FakeResponse:
        return self._next(method="GET", url=url, **kwargs)

    def post(self, url: str, **kwargs: Any) -> FakeResponse:
        return self._next(method="POST", url=url, **kwargs)

    def close(self) -> None:
        self.closed = True


def wikipedia_payload(title: str, extract: str, revid: int = 1) -> dict:
    """A MediaWiki `formatversion=2` reply holding one page."""
    return {
        "batchcomplete": True,
        "query": {"pages": [{"pageid": 1, "ns": 0, "title": title, "revisions": [{"revid": revid}], "extract": extract}]},
    }


def wikipedia_missing(title: str) -> dict:
    return {"batchcomplete": True, "query": {"pages": [{"ns": 0, "title": title, "missing": True}]}}


def chat_payload(content: str) -> dict:
    """An OpenAI-style chat-completions reply."""
    return {"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}


###
### Domain Objects
###


def make_topic(
    topic_id: str = "testland",
    continent: str = "Europe",
    subregion: str = "Western Europe",
    leader: str = "Ada Example",
    title: Optional[str] = None,
) -> Topic:
    return Topic(
        id=topic_id,
        country=topic_id.title(),
        leader_name=leader,
        name_by_language={language: leader for language in Language},
        geo=GeoTag(continent, subregion),
        wikipedia_title=title or leader,
        iso_code=topic_id[:3].upper(),
    )


def scored(topic_id: str, language: str, n_correct: int, n_hallucinated: int) -> BiographyEvaluation:
    return BiographyEvaluation(topic_id, language, n_correct, n_hallucinated, Outcome.SCORED)


@pytest.fixture(scope="session")
def bundled_roster() -> Roster:
    return load_roster()


@pytest.fixture
def small_roster(bundled_roster: Roster) -> Roster:
    """Four topics, one per continent."""
    return bundled_roster.subset(["ethiopia", "united-states", "japan", "germany"])


@pytest.fixture
def topic() -> Topic:
    return make_topic()


@pytest.fixture
def mock_cfg(tmp_path: Path):
    """A configuration on the mock backend, caching under `tmp_path`."""
    return mock_config(
        paths={"cache_dir": str(tmp_path / "cache"), "runs_dir": str(tmp_path / "runs")},
        run={"concurrency": 2},
    )


@pytest.fixture
def obama_payload() -> dict:
    """A recorded reply of the English Wikipedia API for 'Barack Obama'."""
    return json.loads((FIXTURES / "wikipedia_barack_obama.json").read_text(encoding="utf-8"))
