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
"""Tests of the bundled prompt templates.

Run as: `py.test test_templates.py`
"""

import pytest

from polyfact.core.types import Language
from polyfact.errors import MissingTemplate, UnboundPlaceholder
from polyfact.gateway.templates import PromptTemplate, TemplateId, load_templates, render_prompt


def test_biography_prompt():
    assert render_prompt("biography", "en", {"name": "Barack Obama"}) == "Write a biography of Barack Obama"


def test_biography_prompt_in_every_language():
    """Test that a biography template exists for each supported language, and
    that the name is placed in each of them.

    Expectation
    -----------

    **Pass**: Nine prompts, each containing the name
    """
    prompts = [render_prompt(TemplateId.BIOGRAPHY, language, {"name": "Jacob Zuma"}) for language in Language]
    assert len(prompts) == 9
    assert all("Jacob Zuma" in prompt for prompt in prompts)


def test_pipeline_templates_are_english_only():
    with pytest.raises(MissingTemplate):
        render_prompt("verify", "de", {"topic": "x", "evidence": "y", "fact": "z"})


def test_unknown_template_or_language():
    with pytest.raises(MissingTemplate):
        render_prompt("summarise", "en", {})
    with pytest.raises(MissingTemplate):
        render_prompt("biography", "xx", {"name": "Jacob Zuma"})


def test_unbound_placeholder():
    with pytest.raises(UnboundPlaceholder, match="evidence"):
        render_prompt("verify", "en", {"topic": "Jacob Zuma", "fact": "Zuma was president."})


def test_placeholders_in_order():
    template = load_templates().get("verify", "en")
    assert template.placeholders == ("topic", "evidence", "fact")


def test_match_recovers_bindings():
    """Test that a template recognises its own output, including bindings which
    span several lines."""
    template = load_templates().get("verify", "en")
    bindings = {"topic": "Jacob Zuma", "evidence": "Title: Jacob Zuma\nText: Zuma was president.", "fact": "A."}
    assert template.match(template.render(bindings)) == bindings
    assert template.match("Write a biography of Jacob Zuma") is None


def test_identify_prefers_the_pipeline_templates():
    registry = load_templates()
    prompt = render_prompt("decompose", "en", {"sentence": "Write a biography of Jacob Zuma"})
    template, bindings = registry.identify(prompt)
    assert template.template_id is TemplateId.DECOMPOSE
    assert bindings == {"sentence": "Write a biography of Jacob Zuma"}

    template, bindings = registry.identify(render_prompt("biography", "ko", {"name": "제이콥 주마"}))
    assert (template.template_id, template.language) == (TemplateId.BIOGRAPHY, Language.KO)
    assert bindings == {"name": "제이콥 주마"}

    assert registry.identify("Hello") is None


def test_hashes_are_stable():
    hashes = load_templates().hashes()
    assert len(hashes) == 12
    assert list(hashes) == sorted(hashes)
    assert hashes["biography/en"] == PromptTemplate("biography", "en", "Write a biography of {name}").digest
