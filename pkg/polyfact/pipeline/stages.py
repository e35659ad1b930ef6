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
"""The individual stages of the evaluation of one biography.

1. [`generate_biography`][polyfact.pipeline.stages.generate_biography] asks the
   generation model for a biography in the target language, and flags refusals
   with [`detect_refusal`][polyfact.pipeline.stages.detect_refusal].
2. [`translate_to_english`][polyfact.pipeline.stages.translate_to_english]
   translates the whole biography in a single request, so that names and the
   gender of the subject stay consistent.
3. [`decompose`][polyfact.pipeline.stages.decompose] splits the English text
   into sentences, and each sentence into atomic facts.
4. [`verify_fact`][polyfact.pipeline.stages.verify_fact] retrieves evidence
   passages for a fact, and combines the judgement of the verification model
   with a lexical support score.

Lexical Support
---------------

The lexical support score of a fact is the share of the fact's content tokens
(its analysed terms, less English stop-words) which also occur in the best
retrieved passage, the best passage being the one sharing the most content
tokens with the fact. Under the default `conjunction` ensemble a fact is
`Supported` only when the judge agrees *and* the lexical score reaches the
threshold (0.3 by default). A threshold of zero reduces the label to the
judge's decision.
"""

import logging
from functools import lru_cache
from importlib import resources
from typing import Mapping, Optional, Sequence

import yaml

from polyfact.core.types import (
    AtomicFact,
    Ensemble,
    GenerationRecord,
    Label,
    Language,
    Topic,
    TranslationRecord,
    Verdict,
)
from polyfact.errors import SkippedRefusal
from polyfact.gateway.backends import CompletionRequest, LLMClient, parse_judge_answer
from polyfact.gateway.templates import TemplateId, TemplateRegistry, load_templates
from polyfact.knowledge.documents import Passage
from polyfact.knowledge.index import RetrievalIndex, retrieve
from polyfact.knowledge.text import content_tokens, normalise
from polyfact.pipeline.segmenter import split_sentences

logger = logging.getLogger(__name__)

IDENTITY_TRANSLATOR = "identity"
"""Translator recorded for English generations, which are copied verbatim."""

DEFAULT_MIN_LENGTH = 20
"""Generations shorter than this many characters are treated as refusals."""

DEFAULT_NPM_THRESHOLD = 0.3
DEFAULT_TOP_K = 5

_BULLETS = ("- ", "* ", "• ")

###
### Refusal Detection
###


@lru_cache(maxsize=1)
def load_refusal_markers() -> dict[Language, tuple[str, ...]]:
    """The bundled refusal markers, normalised, keyed by language."""
    data = resources.files("polyfact.pipeline.data").joinpath("refusal_markers.yaml")
    text = data.read_text(encoding="utf-8")
    data = yaml.safe_load(text) or {}
    return {
        Language.parse(code): tuple(normalise(marker) for marker in markers)
        for code, markers in (data.get("markers") or {}).items()
    }


def detect_refusal(
    text: str,
    language: Language,
    *,
    markers: Optional[Mapping[Language, Sequence[str]]] = None,
    min_length: int = DEFAULT_MIN_LENGTH,
) -> bool:
    """Decide whether `text` declines to give the requested biography.

    Parameters
    ----------

    text: str
        The generation.
    language: Language
        The language of the generation. Its markers, and the English markers,
        are checked.
    markers: Mapping[Language, Sequence[str]], optional
        Markers to use instead of the bundled set.
    min_length: int
        Generations with fewer (stripped) characters are refusals.

    Returns
    -------

    bool
        `True` if the text is too short, or contains a marker after
        normalisation.
    """
    stripped = text.strip()
    if len(stripped) < min_length:
        return True

    table = load_refusal_markers() if markers is None else markers
    language = Language.parse(language)
    normalised = normalise(stripped)
    candidates = list(table.get(language, ()))
    if language is not Language.EN:
        candidates.extend(table.get(Language.EN, ()))
    return any(normalise(marker) in normalised for marker in candidates)


###
### Generation and Translation
###


def generate_biography(
    topic: Topic,
    language: Language,
    client: LLMClient,
    *,
    temperature: float = 1.0,
    seed: int = 0,
    max_tokens: int = 1024,
    templates: Optional[TemplateRegistry] = None,
    markers: Optional[Mapping[Language, Sequence[str]]] = None,
    min_length: int = DEFAULT_MIN_LENGTH,
) -> GenerationRecord:
    """Ask for the biography of `topic` in `language`.

    The prompt is the frozen biography template of `language`, bound to the
    leader's name as written in that language.
    """
    language = Language.parse(language)
    templates = templates or load_templates()
    prompt = templates.render(TemplateId.BIOGRAPHY, language, {"name": topic.name_in(language)})
    result = client.complete(CompletionRequest(prompt, temperature, max_tokens, seed))

    refusal = detect_refusal(result.text, language, markers=markers, min_length=min_length)
    if refusal:
        logger.info("Generation for %s/%s is a refusal", topic.id, language.value)

    return GenerationRecord(
        topic_id=topic.id,
        language=language,
        refusal=refusal,
        text=result.text.strip(),
        model_id=result.model_id,
        temperature=temperature,
    )


def translate_to_english(
    record: GenerationRecord,
    client: LLMClient,
    *,
    temperature: float = 0.0,
    seed: int = 0,
    max_tokens: int = 1024,
    templates: Optional[TemplateRegistry] = None,
) -> TranslationRecord:
    """Translate a generation into English, in one request.

    English generations are copied without calling the backend, and the
    translator is recorded as `"identity"`.

    Raises
    ------

    SkippedRefusal:
        `record` is a refusal.
    """
    if record.refusal:
        unit = f"{record.topic_id}/{record.language.value}"
        msg = f"Generation {unit} is a refusal, and has nothing to translate"
        raise SkippedRefusal(msg)

    if record.language is Language.EN:
        return TranslationRecord(record.topic_id, record.language, record.text, IDENTITY_TRANSLATOR)

    prompt = (templates or load_templates()).render(
        TemplateId.TRANSLATE,
        Language.EN,
        {"source_language": record.language.english_name, "text": record.text},
    )
    result = client.complete(CompletionRequest(prompt, temperature, max_tokens, seed))
    return TranslationRecord(record.topic_id, record.language, result.text.strip(), result.model_id)


###
### Decomposition
###


def parse_fact_lines(reply: str) -> list[str]:
    """Extract the facts from a decomposition reply.

    Bulleted (`- `, `* `, `• `) lines are the facts. A reply with no bullet
    at all is read as one fact per non-blank line.
    """
    lines = [line.strip() for line in reply.splitlines() if line.strip()]
    bulleted = [line for line in lines if line.startswith(_BULLETS)]
    if bulleted:
        return [line[2:].strip() for line in bulleted if line[2:].strip()]
    return lines


def decompose(
    english_text: str,
    client: LLMClient,
    *,
    temperature: float = 0.0,
    seed: int = 0,
    max_tokens: int = 1024,
    templates: Optional[TemplateRegistry] = None,
) -> list[AtomicFact]:
    """Break `english_text` into atomic facts, one decomposition request per
    sentence.

    Returns
    -------

    list[AtomicFact]
        The facts, numbered from zero in order, each carrying the index of its
        source sentence. A sentence may yield no facts.

    Raises
    ------

    ValueError:
        `english_text` is empty.
    """
    if not english_text.strip():
        msg = "Cannot decompose an empty text"
        raise ValueError(msg)

    registry = templates or load_templates()
    facts: list[AtomicFact] = []
    for sentence_index, sentence in enumerate(split_sentences(english_text)):
        prompt = registry.render(TemplateId.DECOMPOSE, Language.EN, {"sentence": sentence})
        reply = client.complete(CompletionRequest(prompt, temperature, max_tokens, seed)).text
        for text in parse_fact_lines(reply):
            facts.append(AtomicFact(len(facts), text, sentence_index))
    return facts


###
### Verification
###


def lexical_support(fact_text: str, passages: Sequence[Passage]) -> float:
    """The share of the content tokens of `fact_text` found in a single
    passage of `passages`.

    Every passage given is scored, and the passage sharing most content tokens
    with the fact counts; it need not be the passage ranked first by
    retrieval, and the order of `passages` has no effect. Tokens are not
    pooled across passages. A fact with no content tokens has no support.
    """
    wanted = content_tokens(fact_text)
    if not wanted or not passages:
        return 0.0
    best = max(len(wanted & content_tokens(passage.text)) for passage in passages)
    return best / len(wanted)


def format_evidence(passages: Sequence[Passage]) -> str:
    """Lay out passages for the verification prompt, best passage last."""
    return "\n\n".join(f"Title: {passage.title}\nText: {passage.text}" for passage in reversed(passages))


def verify_fact(
    fact: AtomicFact,
    topic: Topic,
    index: RetrievalIndex,
    client: LLMClient,
    npm_threshold: float = DEFAULT_NPM_THRESHOLD,
    *,
    k: int = DEFAULT_TOP_K,
    ensemble: Ensemble = Ensemble.CONJUNCTION,
    temperature: float = 0.0,
    seed: int = 0,
    max_tokens: int = 1024,
    templates: Optional[TemplateRegistry] = None,
) -> Verdict:
    """Judge whether `fact` is supported by `topic`'s article.

    Raises
    ------

    EmptyCorpus:
        The index holds no passages.
    """
    hits = retrieve(index, fact.text, k)
    passages = [index.passage(passage_id) for passage_id, _ in hits]

    prompt = (templates or load_templates()).render(
        TemplateId.VERIFY,
        Language.EN,
        {"topic": topic.leader_name, "evidence": format_evidence(passages), "fact": fact.text},
    )
    answer = client.complete(CompletionRequest(prompt, temperature, max_tokens, seed)).text
    judged = parse_judge_answer(answer)
    lexical = lexical_support(fact.text, passages)

    supported = judged and (Ensemble(ensemble) is Ensemble.JUDGE_ONLY or lexical >= npm_threshold)
    return Verdict(
        fact_id=fact.fact_id,
        label=Label.SUPPORTED if supported else Label.NOT_SUPPORTED,
        judge_score=1.0 if judged else 0.0,
        lexical_score=lexical,
        evidence_passage_ids=tuple(passage.passage_id for passage in passages),
    )
