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
"""The frozen prompt templates of the evaluation pipeline.

Templates live in the bundled `templates.yaml` data file, and are addressed by a
[`TemplateId`][polyfact.gateway.templates.TemplateId] and a
[`Language`][polyfact.core.types.Language]. Placeholders use the `{name}`
syntax of `str.format`:

| Template     | Languages  | Placeholders                          |
|--------------|------------|---------------------------------------|
| `biography`  | all nine   | `name`                                |
| `translate`  | English    | `source_language`, `text`             |
| `decompose`  | English    | `sentence`                            |
| `verify`     | English    | `topic`, `evidence`, `fact`           |

Example
-------

````python
from polyfact.gateway import render_prompt

render_prompt("biography", "en", {"name": "Barack Obama"})
# 'Write a biography of Barack Obama'
````

A template can also recognise its own output: [`PromptTemplate.match`]
[polyfact.gateway.templates.PromptTemplate.match] recovers the bindings from a
rendered prompt. The mock backend relies on this to decide what kind of answer
a prompt expects.
"""

import logging
import string
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Any, Iterator, Mapping, Optional, Union

import attrs
import regex
import yaml

from polyfact.core.types import Language
from polyfact.errors import MissingTemplate, UnboundPlaceholder
from polyfact.helpers.files import sha256_hex

logger = logging.getLogger(__name__)

BUNDLED_TEMPLATES = "templates.yaml"

###
### Enumerations
###


class TemplateId(str, Enum):
    """The four prompt roles of the pipeline."""

    BIOGRAPHY = "biography"
    TRANSLATE = "translate"
    DECOMPOSE = "decompose"
    VERIFY = "verify"


###
### Classes
###


@attrs.frozen
class PromptTemplate:
    """One prompt template in one language.

    Attributes
    ----------

    template_id: TemplateId
        The role of the prompt.
    language: Language
        The language the prompt is written in.
    text: str
        The template text, with `{name}` placeholders.
    """

    template_id: TemplateId = attrs.field(converter=TemplateId)
    language: Language = attrs.field(converter=Language.parse)
    text: str
    _pattern: Any = attrs.field(init=False, eq=False, repr=False)

    def __attrs_post_init__(self) -> None:
        parts = []
        for literal, field_name, _, _ in string.Formatter().parse(self.text):
            parts.append(regex.escape(literal))
            if field_name:
                parts.append(f"(?P<{field_name}>.*?)")
        object.__setattr__(self, "_pattern", regex.compile("".join(parts), regex.DOTALL))

    @property
    def placeholders(self) -> tuple[str, ...]:
        """The names of the placeholders, in order of first appearance."""
        names: list[str] = []
        for _, field_name, _, _ in string.Formatter().parse(self.text):
            if field_name and field_name not in names:
                names.append(field_name)
        return tuple(names)

    @property
    def digest(self) -> str:
        return sha256_hex(self.text)

    def render(self, bindings: Mapping[str, Any]) -> str:
        """Substitute `bindings` into the template.

        Raises
        ------

        UnboundPlaceholder:
            A placeholder of the template has no binding.
        """
        missing = [name for name in self.placeholders if name not in bindings]
        if missing:
            name = f"{self.template_id.value}/{self.language.value}"
            msg = f"Template '{name}' needs a value for: {', '.join(missing)}"
            raise UnboundPlaceholder(msg)
        return self.text.format_map({name: bindings[name] for name in self.placeholders})

    def match(self, prompt: str) -> Optional[dict[str, str]]:
        """Recover the bindings from a prompt rendered with this template, or
        return `None` if `prompt` was not rendered from it."""
        found = self._pattern.fullmatch(prompt)
        if found is None:
            return None
        return found.groupdict()


class TemplateRegistry:
    """The set of available templates, keyed by `(template_id, language)`."""

    def __init__(self, templates: Mapping[tuple[TemplateId, Language], PromptTemplate]) -> None:
        self._templates = dict(templates)

    def __iter__(self) -> Iterator[PromptTemplate]:
        return iter(self._templates.values())

    def __len__(self) -> int:
        return len(self._templates)

    def get(self, template_id: Union[TemplateId, str], language: Union[Language, str]) -> PromptTemplate:
        """Look up a template.

        Raises
        ------

        MissingTemplate:
            No template exists for the pair.
        """
        try:
            key = (TemplateId(template_id), Language.parse(language))
        except ValueError:
            msg = f"No '{template_id}' template for language '{language}'"
            raise MissingTemplate(msg) from None
        try:
            return self._templates[key]
        except KeyError:
            msg = f"No '{key[0].value}' template for language '{key[1].value}'"
            raise MissingTemplate(msg) from None

    def render(
        self, template_id: Union[TemplateId, str], language: Union[Language, str], bindings: Mapping[str, Any]
    ) -> str:
        return self.get(template_id, language).render(bindings)

    def identify(self, prompt: str) -> Optional[tuple[PromptTemplate, dict[str, str]]]:
        """Find the template `prompt` was rendered from, with its bindings.

        The pipeline roles are tried from the most to the least constrained
        template (verify, decompose, translate, then biography).
        """
        order = (TemplateId.VERIFY, TemplateId.DECOMPOSE, TemplateId.TRANSLATE, TemplateId.BIOGRAPHY)
        for template_id in order:
            for (candidate_id, _), template in self._templates.items():
                if candidate_id is not template_id:
                    continue
                bindings = template.match(prompt)
                if bindings is not None:
                    return template, bindings
        return None

    def hashes(self) -> dict[str, str]:
        """The SHA-256 of every template text, keyed by `"<template>/<language>"`."""
        return {
            f"{template_id.value}/{language.value}": template.digest
            for (template_id, language), template in sorted(self._templates.items())
        }

    @classmethod
    def from_yaml(cls, text: str) -> "TemplateRegistry":
        data = yaml.safe_load(text) or {}
        templates = {}
        for template_id, by_language in (data.get("templates") or {}).items():
            for language, body in by_language.items():
                template = PromptTemplate(template_id, language, body)
                templates[(template.template_id, template.language)] = template
        return cls(templates)


###
### Functions
###


@lru_cache(maxsize=1)
def load_templates() -> TemplateRegistry:
    """The bundled template registry."""
    text = resources.files("polyfact.gateway.data").joinpath(BUNDLED_TEMPLATES).read_text(encoding="utf-8")
    registry = TemplateRegistry.from_yaml(text)
    logger.debug("Loaded %d prompt templates", len(registry))
    return registry


def render_prompt(
    template_id: Union[TemplateId, str], language: Union[Language, str], bindings: Mapping[str, Any]
) -> str:
    """Render the bundled `template_id` template for `language`.

    Raises
    ------

    MissingTemplate:
        No template exists for `(template_id, language)`.
    UnboundPlaceholder:
        `bindings` lacks a value for one of the template's placeholders.
    """
    return load_templates().render(template_id, language, bindings)
