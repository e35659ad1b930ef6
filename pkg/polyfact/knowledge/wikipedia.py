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
"""Download of English Wikipedia articles, with a mandatory on-disk cache.

Articles are requested from the MediaWiki `action=query` API, using the
`extracts` property with `explaintext` so that the server strips the wiki
markup. Section heading lines (`== Early life ==`) are then removed, leaving
only the running text of the article.

Cache
-----

Every fetched article is stored in the cache directory as one JSON file, named
after the percent-encoded title (`Barack%20Obama.json`), and holding the
revision id and the fetch time alongside the text. Once an article is cached it
is never fetched again: this is what makes repeated evaluations reproducible,
and what allows a run to proceed without network access.

Transient failures (connection errors, time-outs, and HTTP 429 or 5xx replies)
are retried with exponential backoff by `tenacity`, and surface as
[`NetworkError`][polyfact.errors.NetworkError] once the retries are exhausted.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Optional, Union
from urllib.parse import quote

import attrs
import regex
import requests
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt, wait_exponential

from polyfact.errors import ArticleNotFound, KnowledgeError, NetworkError
from polyfact.helpers.files import atomic_write_text
from polyfact.knowledge.documents import KnowledgeDocument

logger = logging.getLogger(__name__)

DEFAULT_API_URL = "https://en.wikipedia.org/w/api.php"
DEFAULT_USER_AGENT = "polyfact/0.1 (multilingual factuality evaluation)"

_HEADING = regex.compile(r"^\s*=+\s*[^=\n]*?\s*=+\s*$", regex.MULTILINE)
_BLANK_RUNS = regex.compile(r"\n{3,}")

_TRANSIENT_STATUS = frozenset({429, 500, 502, 503, 504})


class _TransientHTTPError(Exception):
    """An HTTP reply worth retrying."""


def strip_headings(text: str) -> str:
    """Remove section heading lines from an `explaintext` extract, and squash
    the blank lines they leave behind."""
    text = _HEADING.sub("", text)
    return _BLANK_RUNS.sub("\n\n", text).strip()


###
### Classes
###


class ArticleCache:
    """One JSON file per article, under `root`.

    Reads may happen from any thread. Writes are serialised by a lock, and each
    file is replaced atomically, so a reader never sees a partial file.
    """

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)
        self._lock = threading.Lock()

    def path_for(self, title: str) -> Path:
        return self.root / f"{quote(title, safe='')}.json"

    def get(self, title: str) -> Optional[KnowledgeDocument]:
        """The cached document for `title`, or `None` if it was never fetched.

        Raises
        ------

        KnowledgeError:
            The cache file cannot be read, or does not hold a document.
        """
        path = self.path_for(title)
        if not path.is_file():
            return None
        try:
            return KnowledgeDocument.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            msg = f"Corrupt cache entry {path} for '{title}': {type(exc).__name__}: {exc}"
            raise KnowledgeError(msg) from exc

    def put(self, doc: KnowledgeDocument) -> None:
        text = json.dumps(doc.as_dict(), ensure_ascii=False, sort_keys=True, indent=1)
        with self._lock:
            atomic_write_text(self.path_for(doc.wikipedia_title), text + "\n")

    def __contains__(self, title: object) -> bool:
        return isinstance(title, str) and self.path_for(title).is_file()


@attrs.define
class WikipediaClient:
    """A minimal client for the MediaWiki extracts API.

    Attributes
    ----------

    api_url: str
        The `api.php` end-point of the English Wikipedia.
    user_agent: str
        Sent with every request, as required by the Wikimedia API policy.
    max_retries: int
        Number of retries after the first attempt for transient failures.
    backoff: float
        Multiplier of the exponential wait between retries, in seconds.
    timeout: float
        Per-request time-out, in seconds.
    session: requests.Session
        The HTTP session. Tests inject a fake session here.
    """

    api_url: str = DEFAULT_API_URL
    user_agent: str = DEFAULT_USER_AGENT
    max_retries: int = attrs.field(default=3, validator=attrs.validators.ge(0))
    backoff: float = attrs.field(default=1.0, validator=attrs.validators.ge(0.0))
    timeout: float = 30.0
    session: requests.Session = attrs.field(factory=requests.Session)

    def _request(self, title: str) -> dict:
        params = {
            "action": "query",
            "format": "json",
            "formatversion": "2",
            "prop": "extracts|revisions",
            "rvprop": "ids",
            "explaintext": "1",
            "redirects": "1",
            "titles": title,
        }
        try:
            response = self.session.get(
                self.api_url, params=params, headers={"User-Agent": self.user_agent}, timeout=self.timeout
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise _TransientHTTPError(str(exc)) from exc

        if response.status_code in _TRANSIENT_STATUS:
            msg = f"HTTP {response.status_code} from {self.api_url}"
            raise _TransientHTTPError(msg)
        if response.status_code != 200:
            msg = f"HTTP {response.status_code} from {self.api_url} for '{title}'"
            raise NetworkError(msg)
        return response.json()

    def fetch(self, title: str) -> KnowledgeDocument:
        """Download `title` from Wikipedia, bypassing any cache.

        Raises
        ------

        ArticleNotFound:
            The title has no page.
        NetworkError:
            Wikipedia could not be reached after all retries.
        """
        retrying = Retrying(
            stop=stop_after_attempt(self.max_retries + 1),
            wait=wait_exponential(multiplier=self.backoff, max=60),
            retry=retry_if_exception_type(_TransientHTTPError),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            reraise=True,
        )
        try:
            data = retrying(self._request, title)
        except _TransientHTTPError as exc:
            msg = f"Cannot fetch '{title}' after {self.max_retries + 1} attempts: {exc}"
            raise NetworkError(msg) from exc

        pages = data.get("query", {}).get("pages", [])
        if not pages or pages[0].get("missing") or pages[0].get("invalid"):
            msg = f"Wikipedia has no article titled '{title}'"
            raise ArticleNotFound(msg)

        page = pages[0]
        revisions = page.get("revisions") or [{}]
        return KnowledgeDocument(
            wikipedia_title=title,
            revision_id=str(revisions[0].get("revid", "")),
            plain_text=strip_headings(page.get("extract", "")),
        )


###
### Functions
###


def fetch_article(
    title: str,
    *,
    cache: ArticleCache,
    client: Optional[WikipediaClient] = None,
    offline: bool = False,
) -> KnowledgeDocument:
    """Return the document for `title`, from the cache when possible.

    Parameters
    ----------

    title: str
        The English Wikipedia title.
    cache: ArticleCache
        Cache consulted first, and updated after a download.
    client: WikipediaClient, optional
        The client used on a cache miss. A default client is created if needed.
    offline: bool
        Never touch the network: a cache miss is reported as a `NetworkError`.

    Raises
    ------

    ValueError:
        `title` is empty.
    ArticleNotFound:
        The title has no page.
    NetworkError:
        The article is not cached, and cannot be downloaded.
    KnowledgeError:
        The cached entry for `title` is corrupt.
    """
    if not title or not title.strip():
        msg = "The article title must not be empty"
        raise ValueError(msg)

    cached = cache.get(title)
    if cached is not None:
        logger.debug("Article '%s' served from cache (revision %s)", title, cached.revision_id)
        return cached

    if offline:
        msg = f"Article '{title}' is not cached, and network access is disabled"
        raise NetworkError(msg)

    doc = (client or WikipediaClient()).fetch(title)
    cache.put(doc)
    logger.info("Fetched '%s' (revision %s, %d characters)", title, doc.revision_id, len(doc.plain_text))
    return doc
