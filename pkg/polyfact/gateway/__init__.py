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
"""The LLM gateway: one interface for the four model roles of the pipeline
(generation, translation, decomposition and verification).

* **[`backends`][polyfact.gateway.backends]**: backend specifications, the
  client with its response cache, call budget, rate limiting and retries.
* **[`templates`][polyfact.gateway.templates]**: the frozen prompt templates.
* **[`mock`][polyfact.gateway.mock]**: the deterministic mock backend, and the
  synthetic articles which match its biographies.
"""

### Expose the `gateway` module interface as a full package
from .backends import (
    BackendKind,
    BackendSpec,
    CallBudget,
    CompletionRequest,
    CompletionResult,
    LLMClient,
    RateLimiter,
    ResponseCache,
    cache_key,
    complete,
    parse_judge_answer,
)
from .mock import (
    REFUSAL_TEXT,
    MockBackend,
    MockOptions,
    mock_complete,
    synthetic_article,
    synthetic_biography,
)
from .templates import PromptTemplate, TemplateId, TemplateRegistry, load_templates, render_prompt
