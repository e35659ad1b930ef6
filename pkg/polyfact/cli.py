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
"""Command line driver for `polyfact`.

````
polyfact [-v] [--json] config init PATH [--mock] [--force]
polyfact [-v] [--json] kb fetch [--roster FILE] [--cache-dir DIR] [--config FILE]
polyfact [-v] [--json] run [--config FILE] [--run-dir DIR | --resume DIR] [--languages en,de]
                           [--topics id,...] [--max-units N]
polyfact [-v] [--json] report --run DIR --out DIR [--k 20] [--roster FILE]
polyfact [-v] [--json] compare --system RUN --reference RUN [--language xx]
````

Exit Status
-----------

| Code | Meaning                                                               |
|------|-----------------------------------------------------------------------|
| 0    | success                                                               |
| 1    | runtime failure: a unit failed, a fetch failed, the run was stopped   |
| 2    | usage or configuration error; nothing was done                        |

The driver is single-threaded: the parallel evaluation of the grid happens
inside [`run_evaluation`][polyfact.pipeline.runner.run_evaluation]. Tables and
progress go to `stderr`; with `--json`, one JSON object per unit (and a final
summary object) is written to `stdout` instead.
"""

import json
import logging
from pathlib import Path
from typing import Any, Iterator, Optional, Sequence

import click
import requests
from rich.progress import Progress
from rich.table import Table

from polyfact.analytics.reports import REPORT_FILES, load_evaluations, write_reports
from polyfact.analytics.stats import DEFAULT_TOP_K, compare_runs, language_summary, present_languages
from polyfact.config import Config, default_config, dump_config, load_config, mock_config
from polyfact.core.roster import Roster, load_roster
from polyfact.core.types import BiographyEvaluation, Language
from polyfact.errors import ConfigError, KnowledgeError, NoOverlap, PolyfactError, RosterError
from polyfact.helpers.console import configure_logging, console
from polyfact.pipeline.evaluate import EvaluationContext, UnitResult, build_knowledge_base
from polyfact.pipeline.runner import RunStore, run_evaluation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

###
### Helpers
###


class UsageProblem(click.ClickException):
    """A usage or configuration error, reported with exit status 2."""

    exit_code = EXIT_USAGE


class RuntimeFailure(click.ClickException):
    exit_code = EXIT_FAILURE


def _json_mode() -> bool:
    ctx = click.get_current_context()
    return bool(ctx.find_root().obj and ctx.find_root().obj.get("json"))


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload, ensure_ascii=False, sort_keys=True))


def _split(value: Optional[str]) -> Optional[list[str]]:
    if value is None:
        return None
    return [item.strip() for item in value.split(",") if item.strip()]


def _load_config(path: Optional[Path]) -> Config:
    try:
        return load_config(path) if path is not None else default_config()
    except ConfigError as exc:
        raise UsageProblem(str(exc)) from exc


def _load_roster(path: Optional[Any], topics: Optional[Sequence[str]] = None) -> Roster:
    try:
        roster = load_roster(path)
        return roster.subset(topics) if topics else roster
    except RosterError as exc:
        raise UsageProblem(str(exc)) from exc


def _recorded_roster(run_dir: Path) -> Roster:
    """The roster a run was evaluated on, as named by its manifest. Runs
    without a manifest fall back to the bundled roster."""
    run_dir = run_dir.parent if run_dir.is_file() else run_dir
    try:
        manifest = RunStore(run_dir).read_manifest()
    except (OSError, ValueError, TypeError) as exc:
        raise UsageProblem(f"Cannot read the manifest of {run_dir}: {exc}") from exc
    if manifest is None:
        logger.warning("%s holds no manifest; using the bundled roster", run_dir)
        return _load_roster(None)

    roster = _load_roster(manifest.config.get("paths", {}).get("roster"), manifest.topics)
    if roster.digest() != manifest.roster_hash:
        logger.warning("The roster of %s has changed since the run was recorded", run_dir)
    return roster


def _parse_languages(codes: Sequence[str]) -> list[Language]:
    try:
        return [Language.parse(code) for code in codes]
    except ValueError as exc:
        raise UsageProblem(str(exc)) from exc


def _format(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def _summary_table(evals: Sequence[BiographyEvaluation]) -> Table:
    table = Table(title="FActScore by language")
    for column in ("language", "n", "mean", "std", "excluded", "correct", "hallucinated", "refusals"):
        table.add_column(column, justify="left" if column == "language" else "right")
    for row in language_summary(evals).values():
        table.add_row(
            row.language.english_name,
            str(row.score.n if row.score else 0),
            _format(row.score.mean if row.score else None),
            _format(row.score.std if row.score else None),
            str(row.excluded_n),
            _format(row.mean_correct),
            _format(row.mean_hallucinated),
            _format(row.refusal_rate),
        )
    return table


###
### Command Group
###


@click.group()
@click.option("-v", "--verbose", count=True, help="Log more detail; repeat for debug output.")
@click.option("--json", "json_mode", is_flag=True, help="Write machine-readable JSON lines to stdout.")
@click.version_option(package_name="polyfact")
@click.pass_context
def main(ctx: click.Context, verbose: int, json_mode: bool) -> None:
    """Evaluate the factuality of biographies generated in nine languages."""
    configure_logging(verbose, json_mode=json_mode)
    ctx.obj = {"json": json_mode}


###
### config
###


@main.group("config")
def config_group() -> None:
    """Manage configuration files."""


@config_group.command("init")
@click.argument("path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--mock", is_flag=True, help="Use the offline mock backend and synthetic articles.")
@click.option("--force", is_flag=True, help="Overwrite an existing file.")
def config_init(path: Path, mock: bool, force: bool) -> None:
    """Write the default configuration to PATH.

    The file is YAML with the sections `backends`, `knowledge`,
    `verification`, `run`, `refusal`, `analytics`, `mock` and `paths`.
    Credentials are never stored: each backend names the environment
    variable holding its key.
    """
    if path.exists() and not force:
        raise UsageProblem(f"{path} already exists; use --force to overwrite it")
    dump_config(mock_config() if mock else default_config(), path)
    console.print(f"Wrote configuration to {path}")


###
### kb
###


@main.group()
def kb() -> None:
    """Manage the knowledge base of Wikipedia articles."""


@kb.command("fetch")
@click.option(
    "--roster",
    "roster_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Roster file (JSONL); the bundled roster by default.",
)
@click.option("--cache-dir", type=click.Path(file_okay=False, path_type=Path), help="Cache directory.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def kb_fetch(roster_path: Optional[Path], cache_dir: Optional[Path], config_path: Optional[Path]) -> None:
    """Fetch, cache and index the article of every roster topic.

    Articles already cached are not downloaded again, so the command can be
    repeated until every fetch succeeds. The articles are stored as JSON under
    `CACHE_DIR/articles`, their passage indexes under `CACHE_DIR/indexes`.
    """
    config = _load_config(config_path)
    if cache_dir is not None:
        config = config.evolve(paths={"cache_dir": str(cache_dir)})
    roster = _load_roster(roster_path or config.paths.roster)

    failures = []
    with requests.Session() as session, Progress(console=console, disable=_json_mode()) as progress:
        knowledge = build_knowledge_base(config, session=session)
        task = progress.add_task("Fetching articles", total=len(roster))
        for topic in roster:
            status: dict[str, Any] = {"topic_id": topic.id, "title": topic.wikipedia_title}
            try:
                index = knowledge.index_for(topic)
            except (KnowledgeError, ValueError) as exc:
                failures.append((topic, str(exc)))
                logger.warning("Cannot index '%s': %s", topic.wikipedia_title, exc)
                status.update(ok=False, error=str(exc))
            else:
                status.update(ok=True, passages=len(index))
            if _json_mode():
                _emit(status)
            progress.advance(task)

    console.print(f"Indexed {len(roster) - len(failures)} of {len(roster)} articles")
    if failures:
        table = Table(title="Failed fetches")
        table.add_column("topic")
        table.add_column("title")
        table.add_column("error")
        for topic, error in failures:
            table.add_row(topic.id, topic.wikipedia_title, error)
        console.print(table)
        raise RuntimeFailure(f"{len(failures)} article(s) could not be fetched")


###
### run
###


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--run-dir",
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory of a new run; RUNS_DIR/<config hash> by default.",
)
@click.option(
    "--resume", type=click.Path(exists=True, file_okay=False, path_type=Path), help="Run directory to resume."
)
@click.option("--languages", help="Comma separated language codes, e.g. 'en,zh'.")
@click.option("--topics", help="Comma separated topic ids.")
@click.option("--max-units", type=click.IntRange(min=0), help="Evaluate at most N new units.")
def run(
    config_path: Optional[Path],
    run_dir: Optional[Path],
    resume: Optional[Path],
    languages: Optional[str],
    topics: Optional[str],
    max_units: Optional[int],
) -> None:
    """Generate, translate, decompose and verify biographies over the grid.

    The run directory holds `manifest.json` and one JSONL file per record
    kind (`generations`, `translations`, `facts`, `verdicts`, `evaluations`).
    A resumed run must use the same configuration, roster, templates and grid
    as the recorded one; the languages and topics default to those recorded.
    """
    if run_dir is not None and resume is not None:
        raise UsageProblem("--run-dir and --resume cannot be combined")

    config = _load_config(config_path)
    language_codes = _split(languages)
    topic_ids = _split(topics)

    if resume is not None:
        manifest = RunStore(resume).read_manifest()
        if manifest is None:
            raise UsageProblem(f"{resume} holds no run manifest")
        language_codes = language_codes or list(manifest.languages)
        topic_ids = topic_ids or list(manifest.topics)
        run_dir = resume

    grid_languages = _parse_languages(language_codes) if language_codes else list(config.run.languages)
    roster = _load_roster(config.paths.roster, topic_ids)
    run_dir = run_dir or Path(config.paths.runs_dir) / config.config_hash()[:12]

    try:
        context = EvaluationContext.from_config(config)
    except (ConfigError, ValueError) as exc:
        raise UsageProblem(str(exc)) from exc

    with Progress(console=console, disable=_json_mode()) as progress:
        task = progress.add_task("Evaluating", total=len(roster) * len(grid_languages))

        def on_unit(result: UnitResult) -> None:
            evaluation = result.evaluation
            if _json_mode():
                _emit({"event": "unit", **evaluation.as_dict()})
            progress.advance(task)

        try:
            summary = run_evaluation(
                roster,
                grid_languages,
                config,
                run_dir,
                resume=resume is not None,
                max_units=max_units,
                context=context,
                on_unit=on_unit,
            )
        except ConfigError as exc:
            raise UsageProblem(str(exc)) from exc
        except PolyfactError as exc:
            raise RuntimeFailure(str(exc)) from exc
        finally:
            context.close()

    evals = RunStore(summary.run_dir).evaluations()
    if _json_mode():
        _emit(
            {
                "event": "summary",
                "run_dir": str(summary.run_dir),
                "computed": summary.computed,
                "skipped": summary.skipped,
                "remaining": summary.remaining,
                "outcomes": summary.outcomes,
                "aborted": summary.aborted,
            }
        )
    else:
        console.print(_summary_table(evals))
        console.print(
            f"Run {summary.run_dir}: {summary.computed} units evaluated, {summary.skipped} already done,"
            f" {summary.remaining} remaining"
        )

    if summary.aborted is not None:
        raise RuntimeFailure(f"Run stopped: {summary.aborted}")
    if summary.failed:
        raise RuntimeFailure(f"{summary.failed} unit(s) failed; resume the run to retry them")


###
### report
###


@main.command()
@click.option("--run", "run_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--k", type=click.IntRange(min=1), default=DEFAULT_TOP_K, show_default=True, help="Top-k size.")
@click.option(
    "--roster",
    "roster_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Roster file (JSONL); the roster recorded in the run manifest by default.",
)
def report(run_dir: Path, out_dir: Path, k: int, roster_path: Optional[Path]) -> None:
    """Write the analytics reports of a run to OUT.

    CSV files start with a `# manifest: <hash>; std: population` line; JSON
    files carry the same hash under `manifest`. Languages with fewer than K
    scored countries get no top-k distribution, and a warning.
    """
    try:
        loaded = load_evaluations(run_dir)
    except ConfigError as exc:
        raise UsageProblem(str(exc)) from exc
    roster = _load_roster(roster_path) if roster_path is not None else _recorded_roster(run_dir)

    reports = write_reports(loaded.evaluations, roster, out_dir, manifest_hash=loaded.manifest_hash, k=k)
    for warning in reports.warnings:
        console.print(f"[yellow]Warning:[/yellow] {warning}")
    if _json_mode():
        warnings = list(reports.warnings)
        _emit({"event": "report", "out_dir": str(out_dir), "files": list(REPORT_FILES), "warnings": warnings})
    else:
        console.print(f"Wrote {len(reports.files)} reports to {out_dir}")


###
### compare
###


def _comparisons(
    system: Sequence[BiographyEvaluation], reference: Sequence[BiographyEvaluation], language: Optional[str]
) -> Iterator[tuple[str, Any]]:
    if language is not None:
        yield language, compare_runs(system, reference, _parse_languages([language])[0])
        return

    yield "all", compare_runs(system, reference)
    for code in present_languages(system):
        try:
            yield code.value, compare_runs(system, reference, code)
        except NoOverlap:
            continue


@main.command()
@click.option("--system", "system_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--reference", "reference_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--language", help="Restrict the comparison to one language.")
def compare(system_path: Path, reference_path: Path, language: Optional[str]) -> None:
    """Compare the scores of two runs: the mean and population standard
    deviation of (system - reference), over the units scored in both.

    SYSTEM and REFERENCE are run directories or `evaluations.jsonl` files.
    """
    try:
        system = load_evaluations(system_path).evaluations
        reference = load_evaluations(reference_path).evaluations
    except ConfigError as exc:
        raise UsageProblem(str(exc)) from exc

    table = Table(title="Score error (system - reference)")
    for column in ("language", "n", "mean", "std"):
        table.add_column(column, justify="left" if column == "language" else "right")
    try:
        for name, error in _comparisons(system, reference, language):
            if _json_mode():
                _emit({"language": name, "n": error.n, "mean": error.mean, "std": error.std})
            table.add_row(name, str(error.n), _format(error.mean), _format(error.std))
    except NoOverlap as exc:
        raise RuntimeFailure(str(exc)) from exc

    if not _json_mode():
        console.print(table)

