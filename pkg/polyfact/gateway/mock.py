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
"""A deterministic stand-in for the LLM backends, used by the tests and by
offline runs.

The mock answers each prompt according to the template it was rendered from
(found with [`TemplateRegistry.identify`]
[polyfact.gateway.templates.TemplateRegistry.identify]):

| Template    | Answer                                                                    |
|-------------|---------------------------------------------------------------------------|
| `biography` | `true_claims` true and `false_claims` false claims, one sentence each     |
| `translate` | the text to translate, unchanged                                          |
| `decompose` | the sentence as a single bullet (`- <sentence>`)                          |
| `verify`    | `Supported` if the fact occurs verbatim in the evidence, else `NotSupported` |
| (other)     | the empty string                                                          |

Biographies in the languages listed in `refuse_languages` are refusals.

The answers depend only on the prompt and the request seed. The matching
knowledge document is produced by [`synthetic_article`]
[polyfact.gateway.mock.synthetic_article]: it holds every true claim (under each
of the person's transliterated names) and none of the false claims. A run over
the mock backend and a synthetic knowledge source therefore scores each
biography `true_claims / (true_claims + false_claims)` exactly.
"""

import logging
from typing import Iterable, Optional

import attrs

from polyfact.core.types import Language, Topic
from polyfact.gateway.backends import CompletionRequest
from polyfact.gateway.templates import TemplateId, TemplateRegistry, load_templates
from polyfact.knowledge.documents import KnowledgeDocument

logger = logging.getLogger(__name__)

REFUSAL_TEXT = "I'm sorry, but there is no famous person by that name."
"""The answer of the mock to a biography prompt it is configured to refuse."""

SYNTHETIC_REVISION = "synthetic"

_TRUE_CLAIMS = (
    "{name} held national office according to archive entry {code}.",
    "{name} signed the public register under record number {code}.",
    "{name} was listed in the national gazette as entry {code}.",
    "{name} addressed the national assembly in session {code}.",
)

_FALSE_CLAIMS = (
    "{name} won an Olympic medal in rowing under result code {code}.",
    "{name} recorded a platinum album under catalogue number {code}.",
    "{name} climbed an unnamed glacier on expedition permit {code}.",
    "{name} designed a racing yacht under hull number {code}.",
)


def _languages(values: Iterable) -> tuple[Language, ...]:
    return tuple(Language.parse(value) for value in values)


@attrs.frozen
class MockOptions:
    """Shape of the mock's biographies.

    Attributes
    ----------

    true_claims: int
        Number of claims per biography that the synthetic article supports.
    false_claims: int
        Number of claims per biography that no article supports.
    refuse_languages: tuple[Language, ...]
        Languages in which the mock refuses to write biographies.
    """

    true_claims: int = attrs.field(default=3, validator=attrs.validators.ge(0))
    false_claims: int = attrs.field(default=2, validator=attrs.validators.ge(0))
    refuse_languages: tuple[Language, ...] = attrs.field(default=(), converter=_languages)

    def as_dict(self) -> dict:
        return {
            "true_claims": self.true_claims,
            "false_claims": self.false_claims,
            "refuse_languages": [language.value for language in self.refuse_languages],
        }


def claim_code(seed: int, index: int) -> str:
    return f"{seed}-{index + 1}"


def _claims(forms: tuple[str, ...], name: str, count: int, seed: int) -> list[str]:
    return [forms[i % len(forms)].format(name=name, code=claim_code(seed, i)) for i in range(count)]


def true_claims(name: str, count: int, seed: int) -> list[str]:
    """The supported claims about `name`."""
    return _claims(_TRUE_CLAIMS, name, count, seed)


def false_claims(name: str, count: int, seed: int) -> list[str]:
    """The unsupported claims about `name`."""
    return _claims(_FALSE_CLAIMS, name, count, seed)


def synthetic_biography(name: str, options: MockOptions, seed: int) -> str:
    """The mock biography of `name`: the true and false claims interleaved, and
    rotated by `seed`."""
    truths = true_claims(name, options.true_claims, seed)
    lies = false_claims(name, options.false_claims, seed)

    claims: list[str] = []
    for i in range(max(len(truths), len(lies))):
        claims.extend(truths[i : i + 1])
        claims.extend(lies[i : i + 1])

    if claims:
        shift = seed % len(claims)
        claims = claims[shift:] + claims[:shift]
    return " ".join(claims)


def synthetic_article(topic: Topic, options: MockOptions, seed: int) -> KnowledgeDocument:
    """The knowledge document matching the mock's biographies of `topic`.

    The article opens with a sentence naming the country, followed by the true
    claims under every distinct transliteration of the leader's name.
    """
    sentences = [f"{topic.leader_name} is the head of state of {topic.country}."]
    for name in dict.fromkeys(topic.name_by_language[language] for language in Language):
        sentences.extend(true_claims(name, options.true_claims, seed))

    return KnowledgeDocument(
        wikipedia_title=topic.wikipedia_title,
        revision_id=SYNTHETIC_REVISION,
        plain_text="\n".join(sentences),
    )


class MockBackend:
    """Answers completion requests deterministically; see the module
    description for the contract.

    Parameters
    ----------

    options: MockOptions, optional
        Biography shape; the defaults give three true and two false claims.
    templates: TemplateRegistry, optional
        The templates used to recognise prompts; the bundled set by default.
    """

    def __init__(
        self, options: Optional[MockOptions] = None, templates: Optional[TemplateRegistry] = None
    ) -> None:
        self.options = options or MockOptions()
        self.templates = templates or load_templates()

    def complete(self, request: CompletionRequest) -> str:
        found = self.templates.identify(request.prompt)
        if found is None:
            logger.debug("Mock backend does not recognise the prompt: answering with nothing")
            return ""

        template, bindings = found
        if template.template_id is TemplateId.BIOGRAPHY:
            if template.language in self.options.refuse_languages:
                return REFUSAL_TEXT
            return synthetic_biography(bindings["name"], self.options, request.seed)

        if template.template_id is TemplateId.TRANSLATE:
            return bindings["text"]

        if template.template_id is TemplateId.DECOMPOSE:
            return f"- {bindings['sentence'].strip()}"

        fact = bindings["fact"].strip()
        return "Supported" if fact and fact in bindings["evidence"] else "NotSupported"


def mock_complete(request: CompletionRequest, options: Optional[MockOptions] = None) -> str:
    """Answer `request` with a default-configured (or `options`-configured)
    mock backend."""
    return MockBackend(options).complete(request)
