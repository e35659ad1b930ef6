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
"""Multilingual evaluation of the factual precision of LLM-written biographies.

A model is asked for the biography of a national leader in one of nine
languages; the biography is translated into English, broken into atomic facts,
and each fact is checked against the English Wikipedia article on the leader.
The share of supported facts is the biography's FActScore. Scores are then
compared across languages, continents and sub-regions. The library is organised
as follows.

* **[`core`][polyfact.core]**: the domain types, the scoring arithmetic and the
  topic roster.
* **[`knowledge`][polyfact.knowledge]**: Wikipedia articles, passage chunking
  and BM25 retrieval.
* **[`gateway`][polyfact.gateway]**: prompt templates, and the clients for the
  LLM backends (including a deterministic mock).
* **[`pipeline`][polyfact.pipeline]**: the evaluation stages, the evaluation of
  a single unit, and the resumable runner over the whole grid.
* **[`analytics`][polyfact.analytics]**: statistics and report files.
* **[`config`][polyfact.config]**: the YAML run configuration.
* **[`cli`][polyfact.cli]**: the `polyfact` command.

Each package exposes the interface of its modules, so that for instance

````python
from polyfact.pipeline import run_evaluation
from polyfact.core import load_roster
from polyfact.config import mock_config

run_evaluation(load_roster(), ["en", "sw"], mock_config(), "runs/demo")
````

evaluates the bundled roster in English and Swahili on the mock backend.
"""

__version__ = "0.1.0"
