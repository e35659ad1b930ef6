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
"""Uniform access to the text-generation backends.

Each pipeline stage (generation, translation, decomposition and verification)
binds its own [`BackendSpec`][polyfact.gateway.backends.BackendSpec], and calls
it through an [`LLMClient`][polyfact.gateway.backends.LLMClient]. A client
combines four shared pieces:

* the on-disk [`ResponseCache`][polyfact.gateway.backends.ResponseCache], keyed by
  `(model_id, sha256(prompt), temperature, seed)`: a cached request never
  reaches the network again;
* the [`CallBudget`][polyfact.gateway.backends.CallBudget], a ceiling on the
  number of uncached calls made by a run;
* a [`RateLimiter`][polyfact.gateway.backends.RateLimiter] per backend, a token
  bucket together with a bound on the requests in flight;
* a `tenacity` retry policy for transient HTTP failures.

Two kinds of backend exist. `http_chat` speaks the usual chat-completions wire
format (`model`, `messages`, `temperature` in the request; the first choice's
message in the reply), reading its API key from the environment variable named
in the spec. `mock` answers from the deterministic
[`MockBackend`][polyfact.gateway.mock.MockBackend], and needs no credentials.
Mock answers are pure functions of the request, so they are never cached.
"""

import json
import logging
import os
import string
import threading
import time
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Union

import attrs
import requests
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt, wait_exponential

from polyfact.errors import AuthError, BackendUnavailable, BudgetExceeded, GatewayError
from polyfact.helpers.files import atomic_write_text, sha256_hex, stable_json

logger = logging.getLogger(__name__)

_TRANSIENT_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})
_AUTH_STATUS = frozenset({401, 403})
_PUNCTUATION = str.maketrans({char: " " for char in string.punctuation})

###
### Enumerations
###


class BackendKind(str, Enum):
    HTTP_CHAT = "http_chat"
    MOCK = "mock"


###
### Value Classes
###


def _non_empty(instance: Any, attribute: attrs.Attribute, value: str) -> None:
    if not value or not value.strip():
        msg = f"'{attribute.name}' must not be empty"
        raise ValueError(msg)


def _check_endpoint(instance: "BackendSpec", attribute: attrs.Attribute, value: str) -> None:
    if instance.backend_kind is BackendKind.HTTP_CHAT and not instance.endpoint_url:
        msg = "An http_chat backend needs an endpoint_url"
        raise ValueError(msg)


@attrs.frozen
class BackendSpec:
    """The configuration of one backend.

    Attributes
    ----------

    backend_kind: BackendKind
        `http_chat` or `mock`.
    model_id: str
        The model name sent to the backend, e.g. `gpt-3.5-turbo-0613`.
    endpoint_url: str
        Chat-completions URL (unused by mock backends).
    credentials_env_var: str
        Name of the environment variable holding the API key. Keys are never
        stored in configuration files.
    max_retries: int
        Retries after the first attempt, for transient failures.
    timeout: float
        Per-request time-out, in seconds.
    backoff: float
        Multiplier of the exponential wait between retries, in seconds.
    requests_per_second: float, optional
        Sustained request rate allowed by the token bucket; unlimited if `None`.
    max_in_flight: int
        Most requests outstanding at once on this backend.
    """

    backend_kind: BackendKind = attrs.field(converter=BackendKind)
    model_id: str = attrs.field(validator=_non_empty)
    endpoint_url: str = attrs.field(default="", validator=_check_endpoint)
    credentials_env_var: str = ""
    max_retries: int = attrs.field(default=3, validator=attrs.validators.ge(0))
    timeout: float = attrs.field(default=60.0, validator=attrs.validators.gt(0.0))
    backoff: float = attrs.field(default=1.0, validator=attrs.validators.ge(0.0))
    requests_per_second: Optional[float] = attrs.field(
        default=None, validator=attrs.validators.optional(attrs.validators.gt(0.0))
    )
    max_in_flight: int = attrs.field(default=8, validator=attrs.validators.ge(1))

    @classmethod
    def mock(cls, model_id: str = "mock") -> "BackendSpec":
        return cls(BackendKind.MOCK, model_id)

    def as_dict(self) -> dict:
        data = attrs.asdict(self)
        data["backend_kind"] = self.backend_kind.value
        return data


@attrs.frozen
class CompletionRequest:
    """A single prompt to complete.

    Attributes
    ----------

    prompt: str
        The full prompt text.
    temperature: float
        Sampling temperature, never negative.
    max_tokens: int
        Upper bound on the length of the reply.
    seed: int
        Sampling seed. Drives the mock backend, and is forwarded to HTTP
        backends which honour it.
    """

    prompt: str
    temperature: float = attrs.field(default=0.0, validator=attrs.validators.ge(0.0))
    max_tokens: int = attrs.field(default=1024, validator=attrs.validators.ge(1))
    seed: int = 0


@attrs.frozen
class CompletionResult:
    """The reply to a `CompletionRequest`."""

    text: str
    model_id: str
    cached: bool = False
    cache_key: Optional[str] = None


def cache_key(model_id: str, request: CompletionRequest) -> str:
    """The response cache key of `request` on `model_id`."""
    return sha256_hex(stable_json([model_id, sha256_hex(request.prompt), request.temperature, request.seed]))


###
### Shared Run State
###


class ResponseCache:
    """The on-disk response cache: one JSON file per key under `root`, holding
    the full request and response for audit.

    Files are written atomically. Keys map onto a fixed pool of `stripes`
    locks: a client holds the lock of its key for the duration of a network
    call, so that at most one call is made for each key. Distinct keys sharing
    a stripe wait for each other.
    """

    def __init__(self, root: Union[str, Path], stripes: int = 64) -> None:
        if stripes < 1:
            msg = "A response cache needs at least one lock stripe"
            raise ValueError(msg)
        self.root = Path(root)
        self._locks = tuple(threading.Lock() for _ in range(stripes))

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def lock_for(self, key: str) -> threading.Lock:
        return self._locks[int(sha256_hex(key)[:8], 16) % len(self._locks)]

    def get(self, key: str) -> Optional[str]:
        """The cached response text for `key`. A missing or unreadable entry is
        a miss."""
        path = self.path_for(key)
        if not path.is_file():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))["response"]["text"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            logger.warning("Ignoring unreadable cache entry %s: %s", path, exc)
            return None

    def put(self, key: str, model_id: str, request: CompletionRequest, text: str) -> None:
        entry = {
            "key": key,
            "request": {"model_id": model_id, **attrs.asdict(request)},
            "response": {"text": text},
        }
        text = json.dumps(entry, ensure_ascii=False, sort_keys=True, indent=1)
        atomic_write_text(self.path_for(key), text + "\n")


class CallBudget:
    """A ceiling on the uncached backend calls made by one run, shared by all
    clients. A `limit` of `None` means no ceiling."""

    def __init__(self, limit: Optional[int] = None) -> None:
        if limit is not None and limit < 0:
            msg = "The call budget must not be negative"
            raise ValueError(msg)
        self.limit = limit
        self._used = 0
        self._lock = threading.Lock()

    @property
    def used(self) -> int:
        return self._used

    def charge(self) -> None:
        """Account for one call.

        Raises
        ------

        BudgetExceeded:
            The ceiling has already been reached.
        """
        with self._lock:
            if self.limit is not None and self._used >= self.limit:
                msg = f"Call budget of {self.limit} uncached calls exhausted"
                raise BudgetExceeded(msg)
            self._used += 1


class RateLimiter:
    """A token bucket of `rate` requests per second (with a burst of `burst`),
    and a bound of `max_in_flight` concurrent requests.

    Use as a context manager around each request.
    """

    def __init__(self, rate: Optional[float] = None, max_in_flight: int = 8, burst: int = 1) -> None:
        self.rate = rate
        self.capacity = float(max(burst, 1))
        self._tokens = self.capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()
        self._in_flight = threading.BoundedSemaphore(max_in_flight)

    def _take(self) -> None:
        if self.rate is None:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)

    def __enter__(self) -> "RateLimiter":
        self._in_flight.acquire()
        self._take()
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self._in_flight.release()


###
### Judge Answers
###


def parse_judge_answer(text: str) -> bool:
    """Decide whether a verification answer says the fact is supported.

    Answers naming `true` or `false` follow the FActScore rule: when only one
    of the words occurs it decides, and when both occur the answer is
    supported if the first `true` comes after the first `false`. Answers
    giving a label (`Supported`, `NotSupported`) are read directly. Any other
    answer is taken as supported unless it contains one of the words `not`,
    `cannot`, `unknown` or `information`.
    """
    answer = text.lower()
    if "true" in answer or "false" in answer:
        if "false" not in answer:
            return True
        if "true" not in answer:
            return False
        return answer.index("true") > answer.index("false")

    words = answer.translate(_PUNCTUATION).split()
    if any(word in ("notsupported", "unsupported") for word in words):
        return False
    return not any(word in ("not", "cannot", "unknown", "information") for word in words)


###
### Client
###


class LLMClient:
    """Completes requests on one backend, through the shared cache, budget and
    rate limiter.

    Parameters
    ----------

    spec: BackendSpec
        The backend to call.
    cache: ResponseCache, optional
        Response cache; requests are not cached when omitted.
    budget: CallBudget, optional
        Ceiling on uncached calls; unlimited when omitted.
    limiter: RateLimiter, optional
        Rate limiter; one is built from `spec` when omitted.
    session: requests.Session, optional
        HTTP session, for `http_chat` backends. When omitted the client opens
        its own, which [`close`][polyfact.gateway.backends.LLMClient.close]
        releases.
    mock: MockBackend, optional
        The mock answering `mock` backends; a default one is built if needed.
    """

    def __init__(
        self,
        spec: BackendSpec,
        *,
        cache: Optional[ResponseCache] = None,
        budget: Optional[CallBudget] = None,
        limiter: Optional[RateLimiter] = None,
        session: Optional[requests.Session] = None,
        mock: Optional[Any] = None,
    ) -> None:
        self.spec = spec
        self.cache = cache
        self.budget = budget or CallBudget()
        self.limiter = limiter or RateLimiter(spec.requests_per_second, spec.max_in_flight)
        self._owns_session = session is None and spec.backend_kind is not BackendKind.MOCK
        self.session = requests.Session() if self._owns_session else session
        self.network_calls = 0

        if spec.backend_kind is BackendKind.MOCK and mock is None:
            from polyfact.gateway.mock import MockBackend

            mock = MockBackend()
        self.mock = mock

    @property
    def model_id(self) -> str:
        return self.spec.model_id

    def close(self) -> None:
        """Close the HTTP session, if the client opened it."""
        if self._owns_session and self.session is not None:
            self.session.close()
            self.session = None
            self._owns_session = False

    def __enter__(self) -> "LLMClient":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        """Complete `request`, from the cache when possible.

        Raises
        ------

        AuthError:
            The credentials are missing or were rejected.
        BackendUnavailable:
            The backend failed on every retry.
        BudgetExceeded:
            The run's call ceiling has been reached.
        """
        if self.spec.backend_kind is BackendKind.MOCK:
            self.budget.charge()
            return CompletionResult(self.mock.complete(request), self.model_id)

        key = cache_key(self.model_id, request)
        if self.cache is None:
            return CompletionResult(self._call(request), self.model_id, cache_key=key)

        with self.cache.lock_for(key):
            text = self.cache.get(key)
            if text is not None:
                logger.debug("Cache hit for %s on %s", key[:12], self.model_id)
                return CompletionResult(text, self.model_id, cached=True, cache_key=key)

            text = self._call(request)
            self.cache.put(key, self.model_id, request, text)
        return CompletionResult(text, self.model_id, cache_key=key)

    def _call(self, request: CompletionRequest) -> str:
        api_key = os.environ.get(self.spec.credentials_env_var, "") if self.spec.credentials_env_var else ""
        if self.spec.credentials_env_var and not api_key:
            variable = self.spec.credentials_env_var
            msg = f"Environment variable {variable} is not set (needed by {self.model_id})"
            raise AuthError(msg)

        self.budget.charge()
        retrying = Retrying(
            stop=stop_after_attempt(self.spec.max_retries + 1),
            wait=wait_exponential(multiplier=self.spec.backoff, max=60),
            retry=retry_if_exception_type(BackendUnavailable),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            reraise=True,
        )
        return retrying(self._post, request, api_key)

    def _post(self, request: CompletionRequest, api_key: str) -> str:
        payload = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "seed": request.seed,
        }
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        if self.session is None:
            msg = f"{self.model_id}: the client has been closed"
            raise GatewayError(msg)
        session = self.session
        with self.limiter:
            self.network_calls += 1
            try:
                response = session.post(
                    self.spec.endpoint_url, json=payload, headers=headers, timeout=self.spec.timeout
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                msg = f"{self.model_id}: {exc}"
                raise BackendUnavailable(msg) from exc

        if response.status_code in _AUTH_STATUS:
            msg = f"{self.model_id}: credentials rejected (HTTP {response.status_code})"
            raise AuthError(msg)
        if response.status_code in _TRANSIENT_STATUS:
            msg = f"{self.model_id}: HTTP {response.status_code}"
            raise BackendUnavailable(msg)
        if response.status_code != 200:
            msg = f"{self.model_id}: HTTP {response.status_code}: {response.text[:200]}"
            raise GatewayError(msg)

        try:
            return response.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            msg = f"{self.model_id}: malformed completion reply"
            raise GatewayError(msg) from exc


def complete(client: LLMClient, request: CompletionRequest) -> CompletionResult:
    """Complete `request` with `client`; see [`LLMClient.complete`]
    [polyfact.gateway.backends.LLMClient.complete]."""
    return client.complete(request)
