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
"""Statistics over the evaluations of a run, and the report files built from
them.

* **[`stats`][polyfact.analytics.stats]**: per-language summaries, continent
  and sub-region tables, top-k distributions, cross-language correlations and
  the comparison of two score sets.
* **[`reports`][polyfact.analytics.reports]**: the CSV and JSON report files.
"""

### Expose the `analytics` module interface as a full package
from .reports import REPORT_FILES, ReportSet, RunEvaluations, load_evaluations, report_run, write_reports
from .stats import (
    ContinentRow,
    CorrelationMatrix,
    HeatmapRow,
    Histogram,
    LanguageSummary,
    SubregionRow,
    SummaryStat,
    compare_runs,
    continent_table,
    correlation_matrix,
    heatmap_export,
    language_summary,
    pearson,
    refusal_rate,
    present_languages,
    score_distribution,
    score_set_error,
    subregion_breakdown,
    topk_continent_distribution,
)
