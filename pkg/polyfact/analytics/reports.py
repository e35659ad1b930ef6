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
"""Write the analytics of a run as CSV and JSON report files.

Each report is fully determined by the evaluations and the roster: running
[`write_reports`][polyfact.analytics.reports.write_reports] twice over the
same run gives byte-identical files. Every file names the manifest it was
computed from, as a first comment line in the CSV files

````
# manifest: <sha256 of manifest.json>; std: population
````

and as a `manifest` key in the JSON files. Undefined values are written as
empty CSV cells and as JSON `null`.

| File                         | Content                                              |
|------------------------------|------------------------------------------------------|
| `language_summary.csv`       | score, fact counts, exclusions, refusal rate         |
| `continent_table.csv`        | mean score per continent, best and second-best       |
| `topk_distribution.json`     | continents of the top-k countries, per language      |
| `subregion_breakdown.csv`    | fact counts and score per sub-region                 |
| `correlation_matrix.csv`     | Pearson correlations between languages               |
| `correlation_pairs.csv`      | the same correlations, with the number of countries  |
| `heatmap.json`               | score of every country, per language                 |
| `score_distribution.json`    | histogram of the scores, per language                |
"""

import csv
import io
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import attrs

from polyfact.analytics.stats import (
    DEFAULT_BINS,
    DEFAULT_TOP_K,
    continent_table,
    correlation_matrix,
    heatmap_export,
    language_summary,
    present_languages,
    score_distribution,
    subregion_breakdown,
    topk_continent_distribution,
)
from polyfact.core.roster import Roster
from polyfact.core.types import BiographyEvaluation, Continent
from polyfact.errors import ConfigError, InsufficientData
from polyfact.helpers.files import atomic_write_text, read_jsonl, sha256_hex
from polyfact.pipeline.runner import EVALUATIONS, MANIFEST

logger = logging.getLogger(__name__)

LANGUAGE_SUMMARY = "language_summary.csv"
CONTINENT_TABLE = "continent_table.csv"
TOPK_DISTRIBUTION = "topk_distribution.json"
SUBREGION_BREAKDOWN = "subregion_breakdown.csv"
CORRELATION_MATRIX = "correlation_matrix.csv"
CORRELATION_PAIRS = "correlation_pairs.csv"
HEATMAP = "heatmap.json"
SCORE_DISTRIBUTION = "score_distribution.json"

REPORT_FILES = (
    LANGUAGE_SUMMARY,
    CONTINENT_TABLE,
    TOPK_DISTRIBUTION,
    SUBREGION_BREAKDOWN,
    CORRELATION_MATRIX,
    CORRELATION_PAIRS,
    HEATMAP,
    SCORE_DISTRIBUTION,
)

###
### Loading
###


@attrs.frozen
class RunEvaluations:
    """The evaluations of a run, with the digest of its manifest."""

    evaluations: tuple[BiographyEvaluation, ...]
    manifest_hash: str


def load_evaluations(source: Union[str, Path]) -> RunEvaluations:
    """Read the evaluations of a run, keeping the last line of each unit.

    `source` is either a run directory, or an `evaluations.jsonl` file (whose
    directory is then taken to be the run directory).

    Raises
    ------

    ConfigError:
        No evaluations file was found.
    """
    source = Path(source)
    run_dir, path = (source.parent, source) if source.is_file() else (source, source / EVALUATIONS)
    if not path.is_file():
        msg = f"No {EVALUATIONS} in {run_dir}"
        raise ConfigError(msg)

    latest = {}
    for record in read_jsonl(path):
        evaluation = BiographyEvaluation.from_dict(record)
        latest[evaluation.key] = evaluation

    manifest = run_dir / MANIFEST
    manifest_hash = sha256_hex(manifest.read_bytes()) if manifest.is_file() else ""
    return RunEvaluations(tuple(latest.values()), manifest_hash)


###
### Formatting
###


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def _csv(manifest_hash: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# manifest: {manifest_hash}; std: population\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def _json(manifest_hash: str, payload: dict) -> str:
    text = json.dumps({"manifest": manifest_hash, **payload}, ensure_ascii=False, sort_keys=True, indent=2)
    return text + "\n"


###
### Report Writer
###


@attrs.frozen
class ReportSet:
    """Files written by `write_reports`, and the warnings raised on the way."""

    out_dir: Path
    files: tuple[str, ...]
    warnings: tuple[str, ...] = ()


def write_reports(
    evals: Sequence[BiographyEvaluation],
    roster: Roster,
    out_dir: Union[str, Path],
    *,
    manifest_hash: str = "",
    k: int = DEFAULT_TOP_K,
    bins: int = DEFAULT_BINS,
) -> ReportSet:
    """Compute every report over `evals` and write them to `out_dir`.

    Languages with fewer than `k` defined scores get no top-k distribution; a
    warning is recorded for them instead, and the other reports are written as
    usual.

    Parameters
    ----------

    evals: Sequence[BiographyEvaluation]
        The evaluations of the run.
    roster: Roster
        The roster the run was evaluated on.
    out_dir: Path
        Destination directory; created if needed.
    manifest_hash: str
        Digest of the run manifest, recorded in every file.
    k: int
        Size of the top-k distribution.
    bins: int
        Number of bins of the score histograms.
    """
    out_dir = Path(out_dir)
    evals = list(evals)
    languages = present_languages(evals)
    warnings: list[str] = []

    def write(name: str, text: str) -> None:
        atomic_write_text(out_dir / name, text)
        logger.debug("Wrote %s", out_dir / name)

    summary = language_summary(evals)
    write(
        LANGUAGE_SUMMARY,
        _csv(
            manifest_hash,
            [
                "language",
                "n",
                "mean",
                "std",
                "excluded_n",
                "mean_correct",
                "mean_hallucinated",
                "refusal_rate",
            ],
            [
                [
                    row.language,
                    row.score.n if row.score else 0,
                    row.score.mean if row.score else None,
                    row.score.std if row.score else None,
                    row.excluded_n,
                    row.mean_correct,
                    row.mean_hallucinated,
                    row.refusal_rate,
                ]
                for row in summary.values()
            ],
        ),
    )

    table = continent_table(evals, roster)
    write(
        CONTINENT_TABLE,
        _csv(
            manifest_hash,
            ["language", *(continent.value for continent in Continent), "mean", "std", "n", "best", "second"],
            [
                [
                    row.language,
                    *(row.means[continent] for continent in Continent),
                    row.overall.mean if row.overall else None,
                    row.overall.std if row.overall else None,
                    row.overall.n if row.overall else 0,
                    row.best,
                    row.second,
                ]
                for row in table.values()
            ],
        ),
    )

    distribution: dict[str, Optional[dict[str, int]]] = {}
    for language in languages:
        try:
            counts = topk_continent_distribution(evals, roster, language, k)
        except InsufficientData as exc:
            warnings.append(str(exc))
            logger.warning("No top-%d distribution: %s", k, exc)
            distribution[language.value] = None
            continue
        distribution[language.value] = {continent.value: count for continent, count in counts.items()}
    write(TOPK_DISTRIBUTION, _json(manifest_hash, {"k": k, "distribution": distribution}))

    subregion_rows = []
    for language in languages:
        for row in subregion_breakdown(evals, roster, language).values():
            subregion_rows.append(
                [
                    language,
                    row.continent,
                    row.subregion,
                    row.n,
                    row.mean_correct,
                    row.mean_hallucinated,
                    row.mean_score,
                ]
            )
    write(
        SUBREGION_BREAKDOWN,
        _csv(
            manifest_hash,
            ["language", "continent", "subregion", "n", "mean_correct", "mean_hallucinated", "mean_score"],
            subregion_rows,
        ),
    )

    matrix = correlation_matrix(evals, languages)
    write(
        CORRELATION_MATRIX,
        _csv(
            manifest_hash,
            ["language", *(language.value for language in matrix.languages)],
            [[language, *matrix.r[i]] for i, language in enumerate(matrix.languages)],
        ),
    )
    write(
        CORRELATION_PAIRS,
        _csv(manifest_hash, ["language_a", "language_b", "r", "n"], [list(pair) for pair in matrix.pairs()]),
    )

    heatmap = {
        language.value: [row.as_dict() for row in heatmap_export(evals, roster, language)]
        for language in languages
    }
    write(HEATMAP, _json(manifest_hash, {"languages": heatmap}))

    histograms = {
        language.value: score_distribution(evals, language, bins).as_dict() for language in languages
    }
    write(SCORE_DISTRIBUTION, _json(manifest_hash, {"bins": bins, "languages": histograms}))

    return ReportSet(out_dir, REPORT_FILES, tuple(warnings))


def report_run(
    run_dir: Union[str, Path], roster: Roster, out_dir: Union[str, Path], *, k: int = DEFAULT_TOP_K
) -> ReportSet:
    """Load the evaluations of `run_dir` and write its reports to `out_dir`."""
    run = load_evaluations(run_dir)
    return write_reports(run.evaluations, roster, out_dir, manifest_hash=run.manifest_hash, k=k)
