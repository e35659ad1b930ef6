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
"""Domain types shared by every stage of the pipeline, the FActScore arithmetic,
and the topic roster.

* **[`types`][polyfact.core.types]**: the immutable value objects (topics,
  generations, translations, atomic facts, verdicts and evaluations).
* **[`scoring`][polyfact.core.scoring]**: `factscore`, `fact_counts` and the
  optional length penalty.
* **[`roster`][polyfact.core.roster]**: loading and validating the topic
  roster, including the bundled 80-country roster.
"""

### Expose the `core` module interface as a full package
from .roster import Roster, dump_roster, load_roster, parse_roster
from .scoring import exact_factscore, fact_counts, factscore, length_penalised_score
from .types import (
    ALL_LANGUAGES,
    LANGUAGE_CODES,
    SUBREGIONS,
    AtomicFact,
    BiographyEvaluation,
    Continent,
    Ensemble,
    GenerationRecord,
    GeoTag,
    Label,
    Language,
    Outcome,
    PassageId,
    Topic,
    TranslationRecord,
    Verdict,
)
