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
"""Aggregate statistics over the evaluations of a run.

All functions here are pure: they take evaluations (and the roster, for the
geography) and return plain values. A few conventions apply throughout.

* Only *defined* scores enter a mean: refused, empty and failed units are left
  out, and reported separately (`excluded_n`, `refusal_rate`).
* Means are macro averages of the per-biography scores; facts are never pooled
  across biographies.
* Standard deviations use the population denominator `n`.
* Scores are always taken in ascending `topic_id` order before any arithmetic,
  so that permuting the input never changes a result, not even in the last
  bit.
* When a unit appears more than once, the last evaluation wins.
"""

import logging
import math
from typing import Iterable, Mapping, Optional, Sequence

import attrs
import numpy as np

from polyfact.core.roster import Roster
from polyfact.core.types import ALL_LANGUAGES, Continent, Language, Outcome, Topic
from polyfact.core.types import BiographyEvaluation as Evaluation
from polyfact.errors import DegeneratePair, InsufficientData, NoOverlap

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 20
"""Number of top-scoring countries in the continental distribution."""

DEFAULT_BINS = 10

###
### Value Classes
###


@attrs.frozen
class SummaryStat:
    """Mean and population standard deviation of `n` values."""

    mean: float
    std: float = attrs.field(validator=attrs.validators.ge(0.0))
    n: int

    @classmethod
    def of(cls, values: Sequence[float]) -> Optional["SummaryStat"]:
        """Summarise `values`; `None` when there are none."""
        if len(values) == 0:
            return None
        array = np.asarray(values, dtype=float)
        return cls(float(array.mean()), float(array.std(ddof=0)), len(values))


@attrs.frozen
class LanguageSummary:
    """Overall statistics for one language.

    Attributes
    ----------

    language: Language
        The generation language.
    score: SummaryStat, optional
        FActScore over the countries with a defined score; `None` if none.
    mean_correct: float, optional
        Mean number of supported facts per scored biography.
    mean_hallucinated: float, optional
        Mean number of unsupported facts per scored biography.
    excluded_n: int
        Units whose score is undefined (refused, empty or failed).
    refusal_rate: float, optional
        Share of the completed (not failed) units which were refusals.
    """

    language: Language
    score: Optional[SummaryStat]
    mean_correct: Optional[float]
    mean_hallucinated: Optional[float]
    excluded_n: int
    refusal_rate: Optional[float]


@attrs.frozen
class ContinentRow:
    """One language row of the continent table.

    `overall` is computed over all the countries, not over the continent
    means, and so equals the `score` of the language summary.
    """

    language: Language
    means: dict[Continent, Optional[float]]
    overall: Optional[SummaryStat]
    best: Optional[Continent]
    second: Optional[Continent]


@attrs.frozen
class SubregionRow:
    subregion: str
    continent: Continent
    n: int
    mean_correct: float
    mean_hallucinated: float
    mean_score: float


@attrs.frozen
class CorrelationMatrix:
    """Pearson correlations between the per-country scores of each pair of
    languages.

    Attributes
    ----------

    languages: tuple[Language, ...]
        Row and column order.
    r: tuple[tuple[Optional[float], ...], ...]
        The correlations; `None` where undefined (fewer than two common
        countries, or no variance).
    n: tuple[tuple[int, ...], ...]
        Number of countries with a defined score in both languages.
    """

    languages: tuple[Language, ...]
    r: tuple[tuple[Optional[float], ...], ...]
    n: tuple[tuple[int, ...], ...]

    def get(self, a: Language, b: Language) -> Optional[float]:
        return self.r[self.languages.index(Language.parse(a))][self.languages.index(Language.parse(b))]

    def pairs(self) -> list[tuple[Language, Language, Optional[float], int]]:
        """Every entry above the diagonal, as `(a, b, r, n)`."""
        size = len(self.languages)
        return [
            (self.languages[i], self.languages[j], self.r[i][j], self.n[i][j])
            for i in range(size)
            for j in range(i + 1, size)
        ]


@attrs.frozen
class HeatmapRow:
    topic_id: str
    country: str
    iso_code: str
    score: Optional[float]

    def as_dict(self) -> dict:
        return attrs.asdict(self)


@attrs.frozen
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def as_dict(self) -> dict:
        return {"edges": list(self.edges), "counts": list(self.counts)}


###
### Helpers
###


def latest(evals: Iterable[Evaluation]) -> dict[tuple[str, Language], Evaluation]:
    """The last evaluation of each unit, keyed by `(topic_id, language)`."""
    return {evaluation.key: evaluation for evaluation in evals}


def _for_language(evals: Iterable[Evaluation], language: Language) -> list[Evaluation]:
    language = Language.parse(language)
    chosen = [evaluation for key, evaluation in latest(evals).items() if key[1] is language]
    return sorted(chosen, key=lambda evaluation: evaluation.topic_id)


def _scored(evals: Iterable[Evaluation], language: Language) -> list[Evaluation]:
    return [evaluation for evaluation in _for_language(evals, language) if evaluation.score is not None]


def _topic(roster: Roster, topic_id: str) -> Optional[Topic]:
    if topic_id in roster:
        return roster[topic_id]
    logger.warning("Ignoring evaluation of '%s', which is not in the roster", topic_id)
    return None


def _mean(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(np.asarray(values, dtype=float))) if len(values) else None


def present_languages(evals: Iterable[Evaluation]) -> tuple[Language, ...]:
    """The languages with at least one evaluation, in canonical order."""
    found = {key[1] for key in latest(evals)}
    return tuple(language for language in ALL_LANGUAGES if language in found)


###
### Reports
###


def refusal_rate(evals: Iterable[Evaluation], language: Language) -> Optional[float]:
    """Share of the completed units of `language` which were refused; failed
    units are not counted. `None` when no unit completed."""
    completed = [
        evaluation
        for evaluation in _for_language(evals, language)
        if evaluation.outcome is not Outcome.FAILED
    ]
    if not completed:
        return None
    return sum(1 for evaluation in completed if evaluation.outcome is Outcome.REFUSED) / len(completed)


def language_summary(evals: Iterable[Evaluation]) -> dict[Language, LanguageSummary]:
    """Overall score, fact counts, exclusions and refusal rate per language."""
    evals = list(evals)
    summary = {}
    for language in present_languages(evals):
        units = _for_language(evals, language)
        scored = [evaluation for evaluation in units if evaluation.score is not None]
        rate = refusal_rate(units, language)

        summary[language] = LanguageSummary(
            language=language,
            score=SummaryStat.of([evaluation.score for evaluation in scored]),
            mean_correct=_mean([evaluation.n_correct for evaluation in scored]),
            mean_hallucinated=_mean([evaluation.n_hallucinated for evaluation in scored]),
            excluded_n=len(units) - len(scored),
            refusal_rate=rate,
        )
    return summary


def continent_table(evals: Iterable[Evaluation], roster: Roster) -> dict[Language, ContinentRow]:
    """Mean score per (language, continent), with each language's overall
    statistics and its best and second-best continents."""
    evals = list(evals)
    table = {}
    for language in present_languages(evals):
        by_continent: dict[Continent, list[float]] = {continent: [] for continent in Continent}
        overall = []
        for evaluation in _scored(evals, language):
            topic = _topic(roster, evaluation.topic_id)
            if topic is None:
                continue
            by_continent[topic.geo.continent].append(evaluation.score)
            overall.append(evaluation.score)

        means = {continent: _mean(values) for continent, values in by_continent.items()}
        ranked = sorted(
            (continent for continent in Continent if means[continent] is not None),
            key=lambda continent: (-means[continent], continent.value),
        )
        table[language] = ContinentRow(
            language=language,
            means=means,
            overall=SummaryStat.of(overall),
            best=ranked[0] if ranked else None,
            second=ranked[1] if len(ranked) > 1 else None,
        )
    return table


def topk_continent_distribution(
    evals: Iterable[Evaluation], roster: Roster, language: Language, k: int = DEFAULT_TOP_K
) -> dict[Continent, int]:
    """Count the continents of the `k` best-scoring countries in `language`.

    Ties are broken by ascending `topic_id`. Only continents with at least one
    country in the top `k` appear, in canonical order; the counts sum to `k`.

    Raises
    ------

    InsufficientData:
        Fewer than `k` countries have a defined score.
    """
    scored = [evaluation for evaluation in _scored(evals, language) if evaluation.topic_id in roster]
    if len(scored) < k:
        msg = f"Only {len(scored)} defined scores for '{Language.parse(language).value}', {k} needed"
        raise InsufficientData(msg)

    top = sorted(scored, key=lambda evaluation: (-evaluation.score, evaluation.topic_id))[:k]
    counts = {continent: 0 for continent in Continent}
    for evaluation in top:
        counts[roster[evaluation.topic_id].geo.continent] += 1
    return {continent: count for continent, count in counts.items() if count}


def subregion_breakdown(
    evals: Iterable[Evaluation], roster: Roster, language: Language
) -> dict[str, SubregionRow]:
    """Mean fact counts and score per sub-region of the roster.

    Sub-regions represented by a single country in the roster are left out:
    one country cannot stand for a region.
    """
    population: dict[str, int] = {}
    for topic in roster:
        population[topic.geo.subregion] = population.get(topic.geo.subregion, 0) + 1

    grouped: dict[str, list[Evaluation]] = {}
    for evaluation in _scored(evals, language):
        topic = _topic(roster, evaluation.topic_id)
        if topic is None or population[topic.geo.subregion] < 2:
            continue
        grouped.setdefault(topic.geo.subregion, []).append(evaluation)

    rows = {}
    for topic in roster:
        subregion = topic.geo.subregion
        if subregion in rows or subregion not in grouped:
            continue
        members = grouped[subregion]
        rows[subregion] = SubregionRow(
            subregion=subregion,
            continent=topic.geo.continent,
            n=len(members),
            mean_correct=float(np.mean([evaluation.n_correct for evaluation in members])),
            mean_hallucinated=float(np.mean([evaluation.n_hallucinated for evaluation in members])),
            mean_score=float(np.mean([evaluation.score for evaluation in members])),
        )
    return rows


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """The Pearson correlation of two equally long vectors, clipped to
    `[-1, 1]`.

    Raises
    ------

    ValueError:
        The vectors differ in length, or hold fewer than two values.
    DegeneratePair:
        One of the vectors has no variance.
    """
    if len(x) != len(y):
        msg = "Vectors must be of equal length"
        raise ValueError(msg)
    if len(x) < 2:
        msg = "At least two values are needed for a correlation"
        raise ValueError(msg)

    dx = np.asarray(x, dtype=float) - np.mean(x)
    dy = np.asarray(y, dtype=float) - np.mean(y)
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        msg = "Correlation is undefined for a vector with no variance"
        raise DegeneratePair(msg)
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def correlation_matrix(
    evals: Iterable[Evaluation], languages: Optional[Sequence[Language]] = None
) -> CorrelationMatrix:
    """Pearson correlations of the per-country scores between every pair of
    languages.

    Each pair uses only the countries with a defined score in both languages.
    The diagonal is 1.0; pairs that are degenerate (fewer than two common
    countries, or no variance) are `None`.
    """
    evals = list(evals)
    chosen = tuple(Language.parse(language) for language in languages) if languages else ALL_LANGUAGES
    scores = {
        language: {evaluation.topic_id: evaluation.score for evaluation in _scored(evals, language)}
        for language in chosen
    }

    size = len(chosen)
    r: list[list[Optional[float]]] = [[None] * size for _ in range(size)]
    n = [[0] * size for _ in range(size)]
    for i, a in enumerate(chosen):
        r[i][i] = 1.0
        n[i][i] = len(scores[a])
        for j in range(i + 1, size):
            b = chosen[j]
            common = sorted(set(scores[a]) & set(scores[b]))
            n[i][j] = n[j][i] = len(common)
            if len(common) < 2:
                continue
            try:
                value = pearson([scores[a][t] for t in common], [scores[b][t] for t in common])
            except DegeneratePair:
                logger.info("Correlation of %s and %s is undefined (no variance)", a.value, b.value)
                continue
            r[i][j] = r[j][i] = value

    return CorrelationMatrix(chosen, tuple(map(tuple, r)), tuple(map(tuple, n)))


def heatmap_export(evals: Iterable[Evaluation], roster: Roster, language: Language) -> list[HeatmapRow]:
    """One row per roster country, in roster order, with its score in
    `language` (`None` when undefined or missing)."""
    scores = {evaluation.topic_id: evaluation.score for evaluation in _for_language(evals, language)}
    return [HeatmapRow(topic.id, topic.country, topic.iso_code, scores.get(topic.id)) for topic in roster]


def score_distribution(
    evals: Iterable[Evaluation], language: Language, bins: int = DEFAULT_BINS
) -> Histogram:
    """Histogram of the defined scores of `language` over `[0, 1]`."""
    values = [evaluation.score for evaluation in _scored(evals, language)]
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=(0.0, 1.0))
    return Histogram(tuple(float(edge) for edge in edges), tuple(int(count) for count in counts))


def score_set_error(
    system: Mapping[str, Optional[float]], reference: Mapping[str, Optional[float]]
) -> SummaryStat:
    """Mean and population standard deviation of `system - reference`, over the
    identifiers scored in both sets.

    Raises
    ------

    NoOverlap:
        No identifier has a defined score in both sets.
    """
    common = sorted(
        key for key in set(system) & set(reference) if system[key] is not None and reference[key] is not None
    )
    if not common:
        msg = "The two score sets share no scored identifier"
        raise NoOverlap(msg)

    summary = SummaryStat.of([system[key] - reference[key] for key in common])  # type: ignore[operator]
    assert summary is not None
    return summary


def compare_runs(
    system_evals: Iterable[Evaluation],
    reference_evals: Iterable[Evaluation],
    language: Optional[Language] = None,
) -> SummaryStat:
    """The score-set error between two evaluation sets, aligned by unit, and
    optionally restricted to one language.

    Raises
    ------

    NoOverlap:
        The two sets share no scored unit.
    """
    wanted = Language.parse(language) if language is not None else None

    def keyed(evals: Iterable[Evaluation]) -> dict[str, Optional[float]]:
        return {
            f"{topic_id}/{unit_language.value}": evaluation.score
            for (topic_id, unit_language), evaluation in latest(evals).items()
            if wanted is None or unit_language is wanted
        }

    return score_set_error(keyed(system_evals), keyed(reference_evals))
