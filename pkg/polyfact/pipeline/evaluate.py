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
"""Evaluation of one (topic, language) unit of the grid.

[`evaluate_unit`][polyfact.pipeline.evaluate.evaluate_unit] runs the stages in
order:

````
generate --> [refusal?] --> translate --> decompose --> [no facts?] --> verify each fact --> score
````

and returns every record produced along the way in a
[`UnitResult`][polyfact.pipeline.evaluate.UnitResult], for the run store to
write. The unit always ends with a
[`BiographyEvaluation`][polyfact.core.types.BiographyEvaluation]:

| Outcome   | When                                           | Score       |
|-----------|------------------------------------------------|-------------|
| `scored`  | at least one fact was verified                 | correct / facts |
| `refused` | the generation was detected as a refusal       | undefined   |
| `empty`   | the biography decomposed to no atomic facts    | undefined   |
| `failed`  | a stage raised a library error                 | undefined   |

Failures are contained to their unit, so that one unreachable article or one
malformed reply never stops the evaluation of the other units.

The shared, read-only state of a run (the backend clients, the knowledge base,
the templates) is held in an
[`EvaluationContext`][polyfact.pipeline.evaluate.EvaluationContext].
"""

import logging
from typing import Optional

import attrs
import requests

from polyfact.config import Config, KnowledgeSource
from polyfact.core.scoring import fact_counts
from polyfact.core.types import (
    AtomicFact,
    BiographyEvaluation,
    GenerationRecord,
    Language,
    Outcome,
    Topic,
    TranslationRecord,
    Verdict,
)
from polyfact.errors import AuthError, BudgetExceeded, ConfigError, PolyfactError
from polyfact.gateway.backends import BackendKind, CallBudget, LLMClient, ResponseCache
from polyfact.gateway.mock import MockBackend, synthetic_article
from polyfact.gateway.templates import TemplateRegistry, load_templates
from polyfact.knowledge.base import KnowledgeBase, wikipedia_loader
from polyfact.knowledge.wikipedia import ArticleCache, WikipediaClient
from polyfact.pipeline.stages import (
    decompose,
    generate_biography,
    load_refusal_markers,
    translate_to_english,
    verify_fact,
)

logger = logging.getLogger(__name__)

FATAL_ERRORS = (AuthError, BudgetExceeded, ConfigError)
"""Errors which stop the scheduling of further units: every later unit would
fail in the same way."""


def build_knowledge_base(config: Config, *, session: Optional[requests.Session] = None) -> KnowledgeBase:
    """The knowledge base described by the `knowledge` section of `config`.

    Synthetic articles are built in memory; Wikipedia articles and their
    indexes are cached under `paths.cache_dir`.
    """
    knowledge = config.knowledge
    if knowledge.source is KnowledgeSource.SYNTHETIC:
        return KnowledgeBase(
            lambda topic: synthetic_article(topic, config.mock, config.run.seed),
            window=knowledge.window,
            stride=knowledge.stride,
        )

    wiki = WikipediaClient(
        api_url=knowledge.api_url,
        user_agent=knowledge.user_agent,
        max_retries=knowledge.max_retries,
        backoff=knowledge.backoff,
        session=session or requests.Session(),
    )
    return KnowledgeBase(
        wikipedia_loader(ArticleCache(config.paths.articles_dir), wiki, offline=knowledge.offline),
        window=knowledge.window,
        stride=knowledge.stride,
        index_dir=config.paths.indexes_dir,
    )


###
### Classes
###


@attrs.define
class EvaluationContext:
    """Everything a unit evaluation needs, shared by all the worker threads.

    Attributes
    ----------

    config: Config
        The run configuration.
    knowledge: KnowledgeBase
        Article indexes, built on first use.
    generator, translator, decomposer, judge: LLMClient
        One client per pipeline role.
    templates: TemplateRegistry
        The prompt templates.
    markers: dict
        Refusal markers: the bundled set, with the configured additions.
    budget: CallBudget
        The call ceiling shared by the four clients.
    sessions: list
        HTTP sessions opened by [`from_config`]
        [polyfact.pipeline.evaluate.EvaluationContext.from_config], and released
        by [`close`][polyfact.pipeline.evaluate.EvaluationContext.close].
    """

    config: Config
    knowledge: KnowledgeBase
    generator: LLMClient
    translator: LLMClient
    decomposer: LLMClient
    judge: LLMClient
    templates: TemplateRegistry = attrs.field(factory=load_templates)
    markers: dict = attrs.field(factory=dict)
    budget: CallBudget = attrs.field(factory=CallBudget)
    sessions: list = attrs.field(factory=list, repr=False)

    @classmethod
    def from_config(
        cls,
        config: Config,
        *,
        session: Optional[requests.Session] = None,
        wiki_session: Optional[requests.Session] = None,
    ) -> "EvaluationContext":
        """Build the clients, caches and knowledge base described by `config`.

        Parameters
        ----------

        config: Config
            The run configuration.
        session: requests.Session, optional
            HTTP session for the `http_chat` backends.
        wiki_session: requests.Session, optional
            HTTP session for Wikipedia.

        Sessions which are not given are opened here, shared by every client,
        and closed by [`close`][polyfact.pipeline.evaluate.EvaluationContext.close].
        """
        paths = config.paths
        opened: list[requests.Session] = []
        if session is None and any(
            spec.backend_kind is not BackendKind.MOCK for spec in config.backends.roles().values()
        ):
            session = requests.Session()
            opened.append(session)
        if wiki_session is None and config.knowledge.source is KnowledgeSource.WIKIPEDIA:
            wiki_session = requests.Session()
            opened.append(wiki_session)

        cache = ResponseCache(paths.responses_dir)
        budget = CallBudget(config.run.budget)
        mock = MockBackend(config.mock)

        def client(role: str) -> LLMClient:
            spec = config.backends.roles()[role]
            return LLMClient(spec, cache=cache, budget=budget, session=session, mock=mock)

        knowledge = build_knowledge_base(config, session=wiki_session)
        markers = {language: list(found) for language, found in load_refusal_markers().items()}
        for code, extra in config.refusal.markers.items():
            markers.setdefault(Language.parse(code), []).extend(extra)

        return cls(
            config=config,
            knowledge=knowledge,
            generator=client("generation"),
            translator=client("translation"),
            decomposer=client("decomposition"),
            judge=client("verification"),
            markers=markers,
            budget=budget,
            sessions=opened,
        )

    def model_ids(self) -> dict[str, str]:
        return {
            "generation": self.generator.model_id,
            "translation": self.translator.model_id,
            "decomposition": self.decomposer.model_id,
            "verification": self.judge.model_id,
        }

    def close(self) -> None:
        """Close the HTTP sessions opened for this context, and those the
        clients opened for themselves."""
        for client in (self.generator, self.translator, self.decomposer, self.judge):
            client.close()
        while self.sessions:
            self.sessions.pop().close()


@attrs.frozen
class UnitResult:
    """Everything produced while evaluating one unit.

    Attributes
    ----------

    evaluation: BiographyEvaluation
        The final record of the unit; always present.
    generation: GenerationRecord, optional
        The biography, unless generation itself failed.
    translation: TranslationRecord, optional
        The English text, for units that were not refused.
    facts: tuple[AtomicFact, ...]
        The atomic facts.
    verdicts: tuple[Verdict, ...]
        One verdict per fact, for scored units.
    fatal: bool
        The unit failed with an error which would fail every later unit too.
    """

    evaluation: BiographyEvaluation
    generation: Optional[GenerationRecord] = None
    translation: Optional[TranslationRecord] = None
    facts: tuple[AtomicFact, ...] = ()
    verdicts: tuple[Verdict, ...] = ()
    fatal: bool = False


###
### Functions
###


def evaluate_unit(topic: Topic, language: Language, context: EvaluationContext) -> UnitResult:
    """Run the full pipeline for `topic` in `language`.

    Library errors raised by a stage are caught, and reported as a `failed`
    evaluation carrying the error message; whatever was produced before the
    failure is kept in the result.
    """
    language = Language.parse(language)
    config = context.config
    run = config.run
    aux = {"temperature": run.aux_temperature, "seed": run.seed, "max_tokens": run.max_tokens}

    generation = None
    translation = None
    facts: list[AtomicFact] = []
    try:
        generation = generate_biography(
            topic,
            language,
            context.generator,
            temperature=run.temperature,
            seed=run.seed,
            max_tokens=run.max_tokens,
            templates=context.templates,
            markers=context.markers,
            min_length=config.refusal.min_length,
        )
        if generation.refusal:
            evaluation = BiographyEvaluation(topic.id, language, outcome=Outcome.REFUSED)
            return UnitResult(evaluation, generation)

        translation = translate_to_english(generation, context.translator, templates=context.templates, **aux)
        facts = decompose(translation.english_text, context.decomposer, templates=context.templates, **aux)
        if not facts:
            evaluation = BiographyEvaluation(topic.id, language, outcome=Outcome.EMPTY)
            return UnitResult(evaluation, generation, translation)

        index = context.knowledge.index_for(topic)
        verdicts = [
            verify_fact(
                fact,
                topic,
                index,
                context.judge,
                config.verification.npm_threshold,
                k=config.knowledge.k,
                ensemble=config.verification.ensemble,
                templates=context.templates,
                **aux,
            )
            for fact in facts
        ]
    except (PolyfactError, ValueError) as exc:
        logger.warning("Evaluation of %s/%s failed: %s", topic.id, language.value, exc)
        evaluation = BiographyEvaluation(
            topic.id, language, outcome=Outcome.FAILED, error=f"{type(exc).__name__}: {exc}"
        )
        return UnitResult(
            evaluation, generation, translation, tuple(facts), fatal=isinstance(exc, FATAL_ERRORS)
        )

    n_correct, n_hallucinated = fact_counts(verdicts)
    evaluation = BiographyEvaluation(topic.id, language, n_correct, n_hallucinated, Outcome.SCORED)
    logger.info(
        "Evaluated %s/%s: %d of %d facts supported", topic.id, language.value, n_correct, evaluation.n_facts
    )
    return UnitResult(evaluation, generation, translation, tuple(facts), tuple(verdicts))


def evaluate_topic(topic: Topic, language: Language, context: EvaluationContext) -> BiographyEvaluation:
    """The [`BiographyEvaluation`][polyfact.core.types.BiographyEvaluation] of
    `topic` in `language`; see [`evaluate_unit`][polyfact.pipeline.evaluate.evaluate_unit]."""
    return evaluate_unit(topic, language, context).evaluation
