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
"""Loading and validation of the topic roster.

The roster is stored as UTF-8 JSON Lines, one [`Topic`][polyfact.core.types.Topic]
per line, with the field names of the `Topic` class. The library ships the
80-country roster used for the evaluations (the twenty most populous countries
of each continent, with the head of state in 2015): this is the default for
[`load_roster`][polyfact.core.roster.load_roster] when no path is given.

Example
-------

````python
from polyfact.core import load_roster

roster = load_roster()
obama = roster["united-states"]
print(obama.name_in("ko"))
````
"""

import json
import logging
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import attrs

from polyfact.core.types import Topic
from polyfact.errors import RosterError
from polyfact.helpers.files import atomic_write_text, sha256_hex

logger = logging.getLogger(__name__)

BUNDLED_ROSTER = "roster.jsonl"
"""Name of the roster file shipped in `polyfact.core.data`."""


def _check_unique(instance: "Roster", attribute: attrs.Attribute, value: tuple[Topic, ...]) -> None:
    seen: set[str] = set()
    for topic in value:
        if topic.id in seen:
            msg = f"Duplicate topic id '{topic.id}' in roster"
            raise RosterError(msg)
        seen.add(topic.id)


@attrs.frozen
class Roster:
    """An ordered, immutable collection of topics with unique ids.

    The order of the topics is the order of the roster file, and is also the
    order of the evaluation grid and of the reports.
    """

    topics: tuple[Topic, ...] = attrs.field(converter=tuple, validator=_check_unique)
    _by_id: dict[str, Topic] = attrs.field(init=False, eq=False, repr=False)

    def __attrs_post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {topic.id: topic for topic in self.topics})

    def __iter__(self) -> Iterator[Topic]:
        return iter(self.topics)

    def __len__(self) -> int:
        return len(self.topics)

    def __contains__(self, topic_id: object) -> bool:
        return topic_id in self._by_id

    def __getitem__(self, topic_id: str) -> Topic:
        try:
            return self._by_id[topic_id]
        except KeyError:
            msg = f"Topic '{topic_id}' is not in the roster"
            raise RosterError(msg) from None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(topic.id for topic in self.topics)

    def subset(self, topic_ids: Sequence[str]) -> "Roster":
        """A roster holding only `topic_ids`, kept in roster order.

        Raises
        ------

        RosterError:
            One of the ids is not in this roster.
        """
        wanted = set(topic_ids)
        missing = sorted(wanted - set(self._by_id))
        if missing:
            msg = f"Unknown topic ids: {', '.join(missing)}"
            raise RosterError(msg)
        return Roster(topic for topic in self.topics if topic.id in wanted)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(topic.as_dict(), ensure_ascii=False) + "\n" for topic in self.topics)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON Lines form of the roster."""
        return sha256_hex(self.to_jsonl())


def parse_roster(text: str, source: str = "<roster>") -> Roster:
    """Parse roster JSON Lines from `text`.

    Raises
    ------

    RosterError:
        A line is not valid JSON, misses a field, or breaks a `Topic`
        invariant; or two topics share an id.
    """
    topics = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            topics.append(Topic.from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            msg = f"{source}, line {number}: {exc}"
            raise RosterError(msg) from exc

    if not topics:
        msg = f"{source} contains no topics"
        raise RosterError(msg)

    return Roster(topics)


def load_roster(path: Optional[Union[str, Path]] = None) -> Roster:
    """Load a roster file, or the bundled 80-country roster when `path` is
    `None`.

    Raises
    ------

    RosterError:
        The file cannot be read or parsed.
    """
    if path is None:
        text = resources.files("polyfact.core.data").joinpath(BUNDLED_ROSTER).read_text(encoding="utf-8")
        return parse_roster(text, source=BUNDLED_ROSTER)

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        msg = f"Cannot read roster file {path}: {exc}"
        raise RosterError(msg) from exc

    roster = parse_roster(text, source=str(path))
    logger.debug("Loaded %d topics from %s", len(roster), path)
    return roster


def dump_roster(roster: Roster, path: Union[str, Path]) -> None:
    """Write `roster` to `path` as JSON Lines."""
    atomic_write_text(Path(path), roster.to_jsonl())
