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
"""The evaluation pipeline: generate a biography, translate it into English,
and measure its factuality (decompose, verify, score), over the whole grid of
topics and languages.

* **[`segmenter`][polyfact.pipeline.segmenter]**: the rule-based sentence
  splitter used before decomposition.
* **[`stages`][polyfact.pipeline.stages]**: the individual stages, and refusal
  detection.
* **[`evaluate`][polyfact.pipeline.evaluate]**: the evaluation of one (topic,
  language) unit, with failures contained to the unit.
* **[`runner`][polyfact.pipeline.runner]**: the resumable, parallel evaluation
  of the grid into a run directory.
"""

### Expose the `pipeline` module interface as a full package
from .evaluate import EvaluationContext, UnitResult, build_knowledge_base, evaluate_topic, evaluate_unit
from .runner import (
    EVALUATIONS,
    FACTS,
    GENERATIONS,
    MANIFEST,
    RUN_FILES,
    TRANSLATIONS,
    VERDICTS,
    RunManifest,
    RunStore,
    RunSummary,
    build_manifest,
    run_evaluation,
)
from .segmenter import ABBREVIATIONS, split_sentences
from .stages import (
    IDENTITY_TRANSLATOR,
    decompose,
    detect_refusal,
    format_evidence,
    generate_biography,
    lexical_support,
    load_refusal_markers,
    parse_fact_lines,
    translate_to_english,
    verify_fact,
)
