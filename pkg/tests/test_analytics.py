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
"""Tests of the run statistics and report files, over a synthetic set of
evaluations on the bundled roster.

Run as: `py.test test_analytics.py`
"""

import json
import math
import random

import pytest

from polyfact.analytics.reports import (
    CONTINENT_TABLE,
    LANGUAGE_SUMMARY,
    REPORT_FILES,
    TOPK_DISTRIBUTION,
    load_evaluations,
    write_reports,
)
from polyfact.analytics.stats import (
    SummaryStat,
    compare_runs,
    continent_table,
    correlation_matrix,
    heatmap_export,
    language_summary,
    pearson,
    refusal_rate,
    score_distribution,
    score_set_error,
    subregion_breakdown,
    topk_continent_distribution,
)
from polyfact.core.types import BiographyEvaluation, Continent, Language, Outcome
from polyfact.errors import ConfigError, DegeneratePair, InsufficientData, NoOverlap

from .conftest import scored


def brute_pearson(x, y):
    mx = sum(x) / len(x)
    my = sum(y) / len(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


@pytest.fixture(scope="module")
def evaluations(bundled_roster):
    """Every roster country in English and German, with varied fact counts;
    in English the fifth country is refused and the seventh failed."""
    evals = []
    for i, topic_id in enumerate(bundled_roster.ids):
        if i == 5:
            evals.append(BiographyEvaluation(topic_id, "en", outcome=Outcome.REFUSED))
        elif i == 7:
            evals.append(BiographyEvaluation(topic_id, "en", outcome=Outcome.FAILED, error="NetworkError: x"))
        else:
            evals.append(scored(topic_id, "en", i % 5 + 1, i % 3))
        evals.append(scored(topic_id, "de", (i * 7) % 6 + 1, i % 4 + 1))
    return evals


def en_scores(evals):
    return {
        evaluation.topic_id: evaluation.score
        for evaluation in evals
        if evaluation.language is Language.EN and evaluation.score is not None
    }


###
### Summaries
###


def test_language_summary(evaluations):
    """Test the English summary against a direct computation.

    Expectation
    -----------

    **Pass**: 78 scored countries, the population standard deviation, two
    exclusions and a refusal rate of 1 in 79
    """
    summary = language_summary(evaluations)[Language.EN]
    values = list(en_scores(evaluations).values())
    mean = sum(values) / len(values)
    std = math.sqrt(sum((value - mean) ** 2 for value in values) / len(values))

    assert summary.score.n == 78
    assert summary.score.mean == pytest.approx(mean)
    assert summary.score.std == pytest.approx(std)
    assert summary.excluded_n == 2
    assert summary.refusal_rate == pytest.approx(1 / 79)


def test_summary_ignores_input_order(evaluations, bundled_roster):
    shuffled = list(evaluations)
    random.Random(3).shuffle(shuffled)
    assert language_summary(shuffled) == language_summary(evaluations)
    assert continent_table(shuffled, bundled_roster) == continent_table(evaluations, bundled_roster)


def test_last_evaluation_of_a_unit_wins():
    evals = [scored("japan", "en", 1, 1), scored("japan", "en", 3, 1)]
    assert language_summary(evals)[Language.EN].score.mean == 0.75


def test_refusal_rate():
    evals = [
        BiographyEvaluation("a", "sw", outcome=Outcome.REFUSED),
        BiographyEvaluation("b", "sw", outcome=Outcome.FAILED),
        scored("c", "sw", 1, 0),
        BiographyEvaluation("d", "sw", outcome=Outcome.EMPTY),
    ]
    assert refusal_rate(evals, Language.SW) == pytest.approx(1 / 3)
    assert refusal_rate(evals, Language.EN) is None


def test_summary_stat_of_nothing():
    assert SummaryStat.of([]) is None
    assert SummaryStat.of([0.5]) == SummaryStat(0.5, 0.0, 1)


###
### Geography
###


def test_continent_table(evaluations, bundled_roster):
    """Test that continent means follow the roster, and that the overall
    statistics are pooled over countries."""
    row = continent_table(evaluations, bundled_roster)[Language.EN]
    scores = en_scores(evaluations)

    for continent in Continent:
        values = [score for topic_id, score in scores.items() if bundled_roster[topic_id].geo.continent is continent]
        assert row.means[continent] == pytest.approx(sum(values) / len(values))

    assert row.overall == language_summary(evaluations)[Language.EN].score
    ranked = sorted(Continent, key=lambda continent: (-row.means[continent], continent.value))
    assert (row.best, row.second) == (ranked[0], ranked[1])


def test_continent_ties_are_broken_by_name(bundled_roster):
    evals = [scored(topic.id, "en", 1, 1) for topic in bundled_roster]
    row = continent_table(evals, bundled_roster)[Language.EN]
    assert (row.best, row.second) == (Continent.AFRICA, Continent.AMERICA)


def test_topk_distribution(evaluations, bundled_roster):
    counts = topk_continent_distribution(evaluations, bundled_roster, Language.DE, k=20)
    assert sum(counts.values()) == 20
    assert all(count > 0 for count in counts.values())

    scores = {e.topic_id: e.score for e in evaluations if e.language is Language.DE}
    top = sorted(scores, key=lambda topic_id: (-scores[topic_id], topic_id))[:20]
    for continent, count in counts.items():
        assert count == sum(1 for topic_id in top if bundled_roster[topic_id].geo.continent is continent)


def test_topk_ties_are_broken_by_topic_id(bundled_roster):
    evals = [scored(topic.id, "en", 1, 0) for topic in bundled_roster]
    counts = topk_continent_distribution(evals, bundled_roster, Language.EN, k=3)
    first = sorted(bundled_roster.ids)[:3]
    expected = {}
    for topic_id in first:
        continent = bundled_roster[topic_id].geo.continent
        expected[continent] = expected.get(continent, 0) + 1
    assert counts == expected


def test_topk_needs_enough_scores(evaluations, bundled_roster):
    with pytest.raises(InsufficientData):
        topk_continent_distribution(evaluations, bundled_roster, Language.EN, k=79)


def test_subregion_breakdown(evaluations, bundled_roster):
    """Test that single-country sub-regions are left out of the breakdown.

    Expectation
    -----------

    **Pass**: 'Southern Africa' and 'Central Asia' are absent; every other
    sub-region has a row, with the mean score of its countries
    """
    rows = subregion_breakdown(evaluations, bundled_roster, Language.DE)
    assert "Southern Africa" not in rows
    assert "Central Asia" not in rows
    assert len(rows) == 17

    west = rows["Western Europe"]
    members = [topic.id for topic in bundled_roster if topic.geo.subregion == "Western Europe"]
    scores = {e.topic_id: e.score for e in evaluations if e.language is Language.DE}
    assert west.n == len(members)
    assert west.continent is Continent.EUROPE
    assert west.mean_score == pytest.approx(sum(scores[m] for m in members) / len(members))


###
### Correlations
###


@pytest.mark.parametrize("seed", range(5))
def test_pearson_matches_direct_computation(seed):
    rng = random.Random(seed)
    x = [rng.random() for _ in range(30)]
    y = [value * rng.uniform(-1, 1) + rng.random() for value in x]
    assert pearson(x, y) == pytest.approx(brute_pearson(x, y))


def test_pearson_bounds():
    x = [0.1, 0.4, 0.3, 0.9]
    assert pearson(x, [2 * value + 1 for value in x]) == pytest.approx(1.0)
    assert pearson(x, [-value for value in x]) == pytest.approx(-1.0)
    assert -1.0 <= pearson(x, [0.2, 0.1, 0.7, 0.3]) <= 1.0

    steps = [1.0, 2.0, 3.0, 4.0]
    assert pearson(steps, [2 * value for value in steps]) == 1.0
    assert pearson(steps, [-value for value in steps]) == -1.0


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([0.1, 0.2], [0.1])
    with pytest.raises(ValueError):
        pearson([0.1], [0.1])
    with pytest.raises(DegeneratePair):
        pearson([0.5, 0.5, 0.5], [0.1, 0.2, 0.3])


def test_correlation_matrix(evaluations):
    matrix = correlation_matrix(evaluations, [Language.EN, Language.DE, Language.SW])

    en = en_scores(evaluations)
    de = {e.topic_id: e.score for e in evaluations if e.language is Language.DE}
    common = sorted(set(en) & set(de))
    expected = brute_pearson([en[t] for t in common], [de[t] for t in common])

    assert matrix.get("en", "de") == pytest.approx(expected)
    assert matrix.get("de", "en") == matrix.get("en", "de")
    assert matrix.get("en", "en") == 1.0
    assert matrix.get("en", "sw") is None
    assert matrix.n[0][1] == 78
    assert matrix.n[1][1] == 80
    assert [(a.value, b.value) for a, b, _, _ in matrix.pairs()] == [("en", "de"), ("en", "sw"), ("de", "sw")]


###
### Exports
###


def test_heatmap_export(evaluations, bundled_roster):
    rows = heatmap_export(evaluations, bundled_roster, Language.EN)
    assert [row.topic_id for row in rows] == list(bundled_roster.ids)
    assert rows[5].score is None
    assert rows[0].iso_code == "ETH"
    assert rows[0].as_dict()["country"] == "Ethiopia"


def test_score_distribution():
    evals = [scored("a", "en", 0, 1), scored("b", "en", 1, 1), scored("c", "en", 1, 0), scored("d", "en", 3, 1)]
    histogram = score_distribution(evals, Language.EN, bins=4)
    assert histogram.edges == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert histogram.counts == (1, 0, 1, 2)


###
### Comparison
###


def test_score_set_error():
    error = score_set_error({"a": 0.5, "b": 0.75, "c": None, "d": 0.1}, {"a": 0.25, "b": 0.25, "c": 0.5})
    assert error.n == 2
    assert error.mean == pytest.approx(0.375)
    assert error.std == pytest.approx(0.125)


def test_identical_score_sets_have_no_error():
    scores = {"a": 0.5, "b": 0.75, "c": 0.1}
    error = score_set_error(scores, dict(scores))
    assert (error.n, error.mean, error.std) == (3, 0.0, 0.0)


def test_score_set_error_without_overlap():
    with pytest.raises(NoOverlap):
        score_set_error({"a": 0.5}, {"b": 0.5})


def test_compare_runs():
    system = [scored("a", "en", 3, 1), scored("a", "de", 1, 1)]
    reference = [scored("a", "en", 1, 1), scored("a", "de", 1, 1)]
    assert compare_runs(system, reference).mean == pytest.approx(0.125)
    assert compare_runs(system, reference, "en").mean == pytest.approx(0.25)
    with pytest.raises(NoOverlap):
        compare_runs(system, reference, "ko")


###
### Report Files
###


def test_reports_are_deterministic(evaluations, bundled_roster, tmp_path):
    """Test that writing the reports twice gives byte-identical files, each
    naming the manifest.

    Expectation
    -----------

    **Pass**: Every report file exists, twice identical, and names the
    manifest hash
    """
    first = write_reports(evaluations, bundled_roster, tmp_path / "a", manifest_hash="abc123")
    write_reports(list(reversed(evaluations)), bundled_roster, tmp_path / "b", manifest_hash="abc123")

    assert first.files == REPORT_FILES
    for name in REPORT_FILES:
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert b"abc123" in a

    summary = (tmp_path / "a" / LANGUAGE_SUMMARY).read_text(encoding="utf-8").splitlines()
    assert summary[0] == "# manifest: abc123; std: population"
    assert summary[1].startswith("language,n,mean,std,excluded_n")
    assert summary[2].startswith("en,78,")

    table = (tmp_path / "a" / CONTINENT_TABLE).read_text(encoding="utf-8").splitlines()
    assert table[1] == "language,Africa,America,Asia,Europe,mean,std,n,best,second"


def test_reports_with_too_few_scores(evaluations, bundled_roster, tmp_path):
    report = write_reports(evaluations, bundled_roster, tmp_path, k=200)
    assert len(report.warnings) == 2
    distribution = json.loads((tmp_path / TOPK_DISTRIBUTION).read_text(encoding="utf-8"))
    assert distribution["k"] == 200
    assert distribution["distribution"] == {"en": None, "de": None}


def test_load_evaluations(tmp_path):
    lines = [scored("a", "en", 1, 1).as_dict(), scored("a", "en", 2, 0).as_dict()]
    (tmp_path / "evaluations.jsonl").write_text("".join(json.dumps(line) + "\n" for line in lines))
    (tmp_path / "manifest.json").write_text("{}\n")

    run = load_evaluations(tmp_path)
    assert [evaluation.score for evaluation in run.evaluations] == [1.0]
    assert len(run.manifest_hash) == 64
    assert load_evaluations(tmp_path / "evaluations.jsonl") == run


def test_load_evaluations_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_evaluations(tmp_path)
