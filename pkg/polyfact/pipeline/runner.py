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
"""Resumable evaluation of the full (topic x language) grid.

Run Directory
-------------

Each run lives in its own directory:

| File                | Content                                                   |
|---------------------|-----------------------------------------------------------|
| `manifest.json`     | config, roster and template hashes; model ids; the grid   |
| `generations.jsonl` | one `GenerationRecord` per unit                           |
| `translations.jsonl`| one `TranslationRecord` per unit that was not refused     |
| `facts.jsonl`       | one line per atomic fact                                  |
| `verdicts.jsonl`    | one line per verdict                                      |
| `evaluations.jsonl` | one `BiographyEvaluation` per unit                        |

Every line carries the `topic_id` and `language` of its unit.

Units are evaluated by a bounded pool of worker threads, but only the main
thread writes: as each unit completes, all of its lines are appended at once,
with the evaluation line written last. A unit therefore counts as done once its
evaluation line is on disk, and an interrupted run can always be resumed:

* the manifest of the earlier run is checked against the current config,
  roster and templates, and a mismatch raises
  [`ConfigDrift`][polyfact.errors.ConfigDrift];
* lines of units with no evaluation, or with a `failed` evaluation, are
  dropped, and those units are evaluated again;
* all other units are skipped.

When an invocation ends the files are put in canonical form: one line per
record, sorted in grid order (roster order, then language order). A run which
was interrupted and resumed thus ends with the same `evaluations.jsonl` as an
uninterrupted run.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, Union

import attrs

from polyfact.config import Config
from polyfact.core.roster import Roster
from polyfact.core.types import BiographyEvaluation, Language, Outcome, Topic, utc_now
from polyfact.errors import ConfigDrift, ConfigError
from polyfact.gateway.templates import TemplateRegistry, load_templates
from polyfact.helpers.files import atomic_write_text, has_torn_tail, read_jsonl
from polyfact.pipeline.evaluate import EvaluationContext, UnitResult, evaluate_unit

logger = logging.getLogger(__name__)

MANIFEST_FORMAT_VERSION = 1

MANIFEST = "manifest.json"
GENERATIONS = "generations.jsonl"
TRANSLATIONS = "translations.jsonl"
FACTS = "facts.jsonl"
VERDICTS = "verdicts.jsonl"
EVALUATIONS = "evaluations.jsonl"

RUN_FILES = (GENERATIONS, TRANSLATIONS, FACTS, VERDICTS, EVALUATIONS)
"""The JSON Lines files of a run, in the order a unit's lines are written."""

UnitKey = tuple[str, str]

###
### Manifest
###


@attrs.frozen
class RunManifest:
    """What a run directory was produced from.

    Attributes
    ----------

    config_hash: str
        Hash of the content-affecting configuration.
    roster_hash: str
        Hash of the evaluated roster.
    template_hashes: dict[str, str]
        Hash of every prompt template.
    model_ids: dict[str, str]
        The model bound to each pipeline role.
    languages: tuple[str, ...]
        Language codes of the grid, in grid order.
    topics: tuple[str, ...]
        Topic ids of the grid, in roster order.
    created_at: str
        When the run was first started.
    config: dict
        The full configuration, for audit.
    """

    config_hash: str
    roster_hash: str
    template_hashes: dict[str, str]
    model_ids: dict[str, str]
    languages: tuple[str, ...] = attrs.field(converter=tuple)
    topics: tuple[str, ...] = attrs.field(converter=tuple)
    created_at: str = attrs.field(factory=lambda: utc_now().isoformat())
    config: dict = attrs.field(factory=dict, eq=False)
    format_version: int = MANIFEST_FORMAT_VERSION

    def as_dict(self) -> dict:
        data = attrs.asdict(self)
        data["languages"] = list(self.languages)
        data["topics"] = list(self.topics)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        known = {field.name for field in attrs.fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})

    def drift_from(self, other: "RunManifest") -> list[str]:
        """The names of the fields on which `other` differs from this manifest."""
        fields = ("format_version", "config_hash", "roster_hash", "template_hashes", "languages", "topics")
        return [name for name in fields if getattr(self, name) != getattr(other, name)]


def build_manifest(
    config: Config,
    roster: Roster,
    languages: Sequence[Language],
    model_ids: dict[str, str],
    templates: Optional[TemplateRegistry] = None,
) -> RunManifest:
    return RunManifest(
        config_hash=config.config_hash(),
        roster_hash=roster.digest(),
        template_hashes=(templates or load_templates()).hashes(),
        model_ids=model_ids,
        languages=tuple(Language.parse(language).value for language in languages),
        topics=roster.ids,
        config=config.to_dict(),
    )


###
### Run Store
###


def _unit_key(record: dict) -> UnitKey:
    return (record["topic_id"], record["language"])


def _record_key(record: dict) -> tuple:
    return (record["topic_id"], record["language"], record.get("fact_id", -1))


class RunStore:
    """Reads and writes the files of one run directory.

    Only one thread may write to a store at a time.
    """

    def __init__(self, run_dir: Union[str, Path]) -> None:
        self.run_dir = Path(run_dir)

    def path(self, name: str) -> Path:
        return self.run_dir / name

    @property
    def manifest_path(self) -> Path:
        return self.path(MANIFEST)

    def read_manifest(self) -> Optional[RunManifest]:
        if not self.manifest_path.is_file():
            return None
        return RunManifest.from_dict(json.loads(self.manifest_path.read_text(encoding="utf-8")))

    def write_manifest(self, manifest: RunManifest) -> None:
        text = json.dumps(manifest.as_dict(), ensure_ascii=False, sort_keys=True, indent=2)
        atomic_write_text(self.manifest_path, text + "\n")

    def records(self, name: str) -> list[dict]:
        return list(read_jsonl(self.path(name)))

    def evaluations(self) -> list[BiographyEvaluation]:
        """The evaluations on disk, keeping the last line written for each
        unit."""
        latest = {_unit_key(record): record for record in self.records(EVALUATIONS)}
        return [BiographyEvaluation.from_dict(record) for record in latest.values()]

    def completed_units(self) -> set[UnitKey]:
        """Units whose latest evaluation did not fail."""
        return {
            (evaluation.topic_id, evaluation.language.value)
            for evaluation in self.evaluations()
            if evaluation.outcome is not Outcome.FAILED
        }

    def append_unit(self, result: UnitResult) -> None:
        """Append every line of `result`, the evaluation line last."""
        evaluation = result.evaluation
        unit = {"topic_id": evaluation.topic_id, "language": evaluation.language.value}

        lines: dict[str, list[dict]] = {name: [] for name in RUN_FILES}
        if result.generation is not None:
            lines[GENERATIONS].append(result.generation.as_dict())
        if result.translation is not None:
            lines[TRANSLATIONS].append(result.translation.as_dict())
        lines[FACTS].extend({**unit, **fact.as_dict()} for fact in result.facts)
        lines[VERDICTS].extend({**unit, **verdict.as_dict()} for verdict in result.verdicts)
        lines[EVALUATIONS].append(evaluation.as_dict())

        self.run_dir.mkdir(parents=True, exist_ok=True)
        for name in RUN_FILES:
            if not lines[name]:
                continue
            with self.path(name).open("a", encoding="utf-8", newline="\n") as handle:
                handle.writelines(json.dumps(line, ensure_ascii=False) + "\n" for line in lines[name])
                handle.flush()

    def _rewrite(self, name: str, records: Iterable[dict]) -> None:
        text = "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in records)
        atomic_write_text(self.path(name), text)

    def discard_incomplete(self) -> int:
        """Drop the lines of every unit that has no successful evaluation.

        A file which ends part way through a line is always rewritten, so
        that later appends start on a fresh line.

        Returns
        -------

        int
            The number of lines dropped.
        """
        keep = self.completed_units()
        dropped = 0
        for name in RUN_FILES:
            if not self.path(name).exists():
                continue
            records = self.records(name)
            kept = [record for record in records if _unit_key(record) in keep]
            torn = has_torn_tail(self.path(name))
            if torn or len(kept) != len(records):
                dropped += len(records) - len(kept) + int(torn)
                self._rewrite(name, kept)
        if dropped:
            logger.info("Dropped %d lines of incomplete units from %s", dropped, self.run_dir)
        return dropped

    def finalise(self, topics: Sequence[str], languages: Sequence[str]) -> None:
        """Rewrite every file in canonical form: the last line written for
        each record, in grid order."""
        topic_order = {topic_id: position for position, topic_id in enumerate(topics)}
        language_order = {code: position for position, code in enumerate(languages)}

        def grid_order(record: dict) -> tuple:
            topic_id, language, fact_id = _record_key(record)
            return (
                topic_order.get(topic_id, len(topic_order)),
                topic_id,
                language_order.get(language, len(language_order)),
                language,
                fact_id,
            )

        for name in RUN_FILES:
            if not self.path(name).exists():
                continue
            latest = {_record_key(record): record for record in self.records(name)}
            self._rewrite(name, sorted(latest.values(), key=grid_order))


###
### Runner
###


@attrs.frozen
class RunSummary:
    """The outcome of one invocation of `run_evaluation`.

    Attributes
    ----------

    run_dir: Path
        The run directory.
    computed: int
        Units evaluated by this invocation.
    skipped: int
        Units already complete from an earlier invocation.
    remaining: int
        Units still to do (after a `max_units` limit or an abort).
    outcomes: dict[str, int]
        Count of this invocation's units by outcome.
    aborted: str, optional
        Message of the error which stopped the scheduling of units.
    """

    run_dir: Path
    computed: int
    skipped: int
    remaining: int
    outcomes: dict[str, int]
    aborted: Optional[str] = None

    @property
    def failed(self) -> int:
        return self.outcomes.get(Outcome.FAILED.value, 0)

    @property
    def complete(self) -> bool:
        return self.remaining == 0 and self.failed == 0 and self.aborted is None


def _check_manifest(store: RunStore, manifest: RunManifest, *, resume: bool) -> RunManifest:
    existing = store.read_manifest()
    if existing is None:
        if store.path(EVALUATIONS).exists():
            msg = f"{store.run_dir} holds run files but no manifest"
            raise ConfigError(msg)
        store.write_manifest(manifest)
        return manifest

    if not resume:
        msg = f"{store.run_dir} already holds a run: resume it, or choose another directory"
        raise ConfigError(msg)

    drift = existing.drift_from(manifest)
    if drift:
        msg = f"Cannot resume {store.run_dir}: {', '.join(drift)} differ from the recorded run"
        raise ConfigDrift(msg)
    return existing


def _evaluate_contained(topic: Topic, language: Language, context: EvaluationContext) -> UnitResult:
    """Evaluate one unit, recording any unexpected error as a `failed`
    evaluation so that the rest of the grid still runs."""
    try:
        return evaluate_unit(topic, language, context)
    except Exception as exc:
        logger.exception("Unexpected error evaluating %s/%s", topic.id, language.value)
        evaluation = BiographyEvaluation(
            topic.id, language, outcome=Outcome.FAILED, error=f"{type(exc).__name__}: {exc}"
        )
        return UnitResult(evaluation)


def run_evaluation(
    roster: Roster,
    languages: Sequence[Language],
    config: Config,
    run_dir: Union[str, Path],
    *,
    resume: bool = False,
    max_units: Optional[int] = None,
    context: Optional[EvaluationContext] = None,
    on_unit: Optional[Callable[[UnitResult], Any]] = None,
) -> RunSummary:
    """Evaluate every (topic, language) unit of the grid into `run_dir`.

    Parameters
    ----------

    roster: Roster
        Topics of the grid, in grid order.
    languages: Sequence[Language]
        Languages of the grid, in grid order.
    config: Config
        The run configuration.
    run_dir: Path
        The run directory; created if needed.
    resume: bool
        Continue the run already in `run_dir`.
    max_units: int, optional
        Evaluate at most this many new units in this invocation.
    context: EvaluationContext, optional
        Clients and knowledge base to use; built from `config` by default.
    on_unit: Callable, optional
        Called in the main thread after each unit is written.

    Raises
    ------

    ConfigDrift:
        Resuming with a configuration, roster, template set or grid which
        differs from the recorded one.
    ConfigError:
        `run_dir` already holds a run and `resume` is not set.
    """
    languages = [Language.parse(language) for language in languages]
    owned = context is None
    if owned:
        context = EvaluationContext.from_config(config)
    try:
        store = RunStore(run_dir)

        manifest = build_manifest(config, roster, languages, context.model_ids(), context.templates)
        manifest = _check_manifest(store, manifest, resume=resume)

        if resume:
            store.discard_incomplete()
        done = store.completed_units()

        grid = [(topic, language) for topic in roster for language in languages]
        pending = [(topic, language) for topic, language in grid if (topic.id, language.value) not in done]
        skipped = len(grid) - len(pending)
        if max_units is not None:
            pending = pending[: max(max_units, 0)]
        logger.info("Run %s: %d units to evaluate, %d already complete", store.run_dir, len(pending), skipped)

        outcomes: dict[str, int] = {}
        computed = 0
        aborted = None
        with ThreadPoolExecutor(max_workers=config.run.concurrency) as executor:
            futures = [
                executor.submit(_evaluate_contained, topic, language, context) for topic, language in pending
            ]
            for future in as_completed(futures):
                if future.cancelled():
                    continue
                result = future.result()
                store.append_unit(result)
                computed += 1
                outcome = result.evaluation.outcome.value
                outcomes[outcome] = outcomes.get(outcome, 0) + 1
                if on_unit is not None:
                    on_unit(result)

                if result.fatal and aborted is None:
                    aborted = result.evaluation.error
                    logger.error("Stopping the run: %s", aborted)
                    for other in futures:
                        other.cancel()

        store.finalise(manifest.topics, manifest.languages)
        remaining = len(grid) - len(store.completed_units())
        return RunSummary(store.run_dir, computed, skipped, remaining, outcomes, aborted)
    finally:
        if owned:
            context.close()
