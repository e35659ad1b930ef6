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
"""Value types shared by every stage of the evaluation pipeline.

All of the classes defined here are frozen `attrs` classes: once constructed
they cannot be modified, and so can be shared between worker threads without
any locking. Each record type also knows how to convert itself to and from the
plain dictionaries stored in the run directory (`as_dict` and `from_dict`).

## Languages and Geography

The nine supported languages are held in the [`Language`]
[polyfact.core.types.Language] enumeration, and the continent in
[`Continent`][polyfact.core.types.Continent]. Sub-regions follow the UN
geoscheme, with one exception: 'Australia and New Zealand' is recorded as
'Oceania', and (as in the topic roster) Oceania is grouped with America.

| Continent | Sub-regions                                                                   |
|-----------|-------------------------------------------------------------------------------|
| Africa    | Eastern Africa, Middle Africa, Northern Africa, Southern Africa, Western Africa |
| America   | Caribbean, Central America, Northern America, Oceania, South America          |
| Asia      | Central Asia, Eastern Asia, South-Eastern Asia, Southern Asia, Western Asia   |
| Europe    | Eastern Europe, Northern Europe, Southern Europe, Western Europe              |
"""

from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping, Optional

import attrs

from polyfact.errors import UnknownLanguage

###
### Enumerations
###


class Language(str, Enum):
    """The nine languages used for generation. The value of each member is the
    ISO 639-1 code used in configuration files and records."""

    EN = "en"
    DE = "de"
    FR = "fr"
    ES = "es"
    AR = "ar"
    SW = "sw"
    ZH = "zh"
    KO = "ko"
    BN = "bn"

    @classmethod
    def parse(cls, code: Any) -> "Language":
        """Return the `Language` for `code`, accepting either a member or its
        string value (case-insensitive).

        Raises
        ------

        UnknownLanguage:
            `code` is not one of the nine supported language codes.
        """
        if isinstance(code, Language):
            return code
        try:
            return cls(str(code).strip().lower())
        except ValueError:
            msg = f"Unknown language code '{code}': expected one of {', '.join(LANGUAGE_CODES)}"
            raise UnknownLanguage(msg) from None

    @property
    def english_name(self) -> str:
        """The English name of the language, as used in translation prompts."""
        return _ENGLISH_NAMES[self]


_ENGLISH_NAMES = {
    Language.EN: "English",
    Language.DE: "German",
    Language.FR: "French",
    Language.ES: "Spanish",
    Language.AR: "Arabic",
    Language.SW: "Swahili",
    Language.ZH: "Chinese",
    Language.KO: "Korean",
    Language.BN: "Bengali",
}

ALL_LANGUAGES = tuple(Language)
"""All nine languages, in canonical (grid) order."""

LANGUAGE_CODES = tuple(language.value for language in Language)
"""The nine language codes, in canonical order."""


class Continent(str, Enum):
    """Continents used to group the topic roster."""

    AFRICA = "Africa"
    AMERICA = "America"
    ASIA = "Asia"
    EUROPE = "Europe"


SUBREGIONS: Mapping[Continent, tuple[str, ...]] = {
    Continent.AFRICA: (
        "Eastern Africa",
        "Middle Africa",
        "Northern Africa",
        "Southern Africa",
        "Western Africa",
    ),
    Continent.AMERICA: (
        "Caribbean",
        "Central America",
        "Northern America",
        "Oceania",
        "South America",
    ),
    Continent.ASIA: (
        "Central Asia",
        "Eastern Asia",
        "South-Eastern Asia",
        "Southern Asia",
        "Western Asia",
    ),
    Continent.EUROPE: (
        "Eastern Europe",
        "Northern Europe",
        "Southern Europe",
        "Western Europe",
    ),
}
"""The sub-regions recognised for each continent."""

SUBREGION_ALIASES = {"Australia and New Zealand": "Oceania"}
"""UN geoscheme names which are stored under a different sub-region."""


class Label(str, Enum):
    """The verdict on a single atomic fact."""

    SUPPORTED = "Supported"
    NOT_SUPPORTED = "NotSupported"


class Ensemble(str, Enum):
    """How the judge and the lexical support score are combined into a label."""

    CONJUNCTION = "conjunction"
    """Supported only if the judge agrees and the lexical score passes the
    threshold."""
    JUDGE_ONLY = "judge_only"
    """Supported whenever the judge agrees."""


class Outcome(str, Enum):
    """How the evaluation of one (topic, language) unit ended."""

    SCORED = "scored"
    """At least one atomic fact was verified: the score is defined."""
    REFUSED = "refused"
    """The model declined to write the biography: the score is undefined."""
    EMPTY = "empty"
    """The biography decomposed to no atomic facts: the score is undefined."""
    FAILED = "failed"
    """A stage raised an error: the unit is retried when the run is resumed."""


###
### Helpers
###


def utc_now() -> datetime:
    """The current time, as a timezone-aware UTC timestamp."""
    return datetime.now(timezone.utc)


def _normalise_subregion(value: str) -> str:
    value = str(value).strip()
    return SUBREGION_ALIASES.get(value, value)


def _check_subregion(instance: "GeoTag", attribute: attrs.Attribute, value: str) -> None:
    if value not in SUBREGIONS[instance.continent]:
        msg = f"Sub-region '{value}' does not belong to continent '{instance.continent.value}'"
        raise ValueError(msg)


def _check_names(instance: "Topic", attribute: attrs.Attribute, value: Mapping[Language, str]) -> None:
    missing = [language.value for language in Language if not value.get(language)]
    if missing:
        msg = f"Topic '{instance.id}' has no name for: {', '.join(missing)}"
        raise ValueError(msg)


def _to_names(value: Mapping[Any, str]) -> dict[Language, str]:
    return {Language.parse(code): str(name) for code, name in value.items()}


def _non_empty(instance: Any, attribute: attrs.Attribute, value: str) -> None:
    if not str(value).strip():
        msg = f"'{attribute.name}' must not be empty"
        raise ValueError(msg)


###
### Classes
###


@attrs.frozen(order=True)
class PassageId:
    """Identifies one passage of a knowledge document, as the article `title`
    and the `ordinal` of the passage within it. Ordering is by title and then
    ordinal, which is the tie-break order used by retrieval.

    The string form, `"<title>#<ordinal>"`, is used in the run files.
    """

    title: str
    ordinal: int

    def __str__(self) -> str:
        return f"{self.title}#{self.ordinal}"

    @classmethod
    def parse(cls, text: str) -> "PassageId":
        """Parse the `"<title>#<ordinal>"` form produced by `str()`."""
        title, _, ordinal = str(text).rpartition("#")
        return cls(title, int(ordinal))


@attrs.frozen
class GeoTag:
    """The continent and UN sub-region of a topic's country.

    Attributes
    ----------

    continent: Continent
        One of Africa, America, Asia or Europe.
    subregion: str
        A sub-region belonging to `continent` (see the module table).
        'Australia and New Zealand' is converted to 'Oceania'.
    """

    continent: Continent = attrs.field(converter=Continent)
    subregion: str = attrs.field(converter=_normalise_subregion, validator=_check_subregion)

    def as_dict(self) -> dict:
        return {"continent": self.continent.value, "subregion": self.subregion}


@attrs.frozen
class Topic:
    """One roster entry: a country and its 2015 head of state.

    Attributes
    ----------

    id: str
        A stable slug, unique within the roster.
    country: str
        The country name, in English.
    leader_name: str
        Canonical English name of the leader.
    name_by_language: dict[Language, str]
        The transliterated name of the leader in each of the nine languages.
    geo: GeoTag
        Continent and sub-region of the country.
    wikipedia_title: str
        Title of the leader's English Wikipedia article.
    iso_code: str
        ISO 3166-1 alpha-3 code of the country, used by the heatmap export.
    """

    id: str = attrs.field(validator=_non_empty)
    country: str
    leader_name: str = attrs.field(validator=_non_empty)
    name_by_language: dict[Language, str] = attrs.field(converter=_to_names, validator=_check_names)
    geo: GeoTag
    wikipedia_title: str = attrs.field(validator=_non_empty)
    iso_code: str = ""

    def name_in(self, language: Language) -> str:
        """The leader's name as written in `language`."""
        return self.name_by_language[Language.parse(language)]

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "country": self.country,
            "leader_name": self.leader_name,
            "name_by_language": {language.value: self.name_by_language[language] for language in Language},
            "geo": self.geo.as_dict(),
            "wikipedia_title": self.wikipedia_title,
            "iso_code": self.iso_code,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Topic":
        geo = data["geo"]
        return cls(
            id=data["id"],
            country=data["country"],
            leader_name=data["leader_name"],
            name_by_language=data["name_by_language"],
            geo=GeoTag(geo["continent"], geo["subregion"]),
            wikipedia_title=data["wikipedia_title"],
            iso_code=data.get("iso_code", ""),
        )


def _check_refusal_text(instance: "GenerationRecord", attribute: attrs.Attribute, value: str) -> None:
    if not value and not instance.refusal:
        msg = "A generation may only be empty when it is a refusal"
        raise ValueError(msg)


@attrs.frozen
class GenerationRecord:
    """The raw biography produced for one (topic, language) unit.

    The `text` may only be empty if `refusal` is set.
    """

    topic_id: str
    language: Language = attrs.field(converter=Language.parse)
    refusal: bool
    text: str = attrs.field(validator=_check_refusal_text)
    model_id: str
    temperature: float
    created_at: datetime = attrs.field(factory=utc_now)

    def as_dict(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "language": self.language.value,
            "text": self.text,
            "model_id": self.model_id,
            "temperature": self.temperature,
            "refusal": self.refusal,
            "created_at": self.created_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GenerationRecord":
        return cls(
            topic_id=data["topic_id"],
            language=data["language"],
            refusal=bool(data["refusal"]),
            text=data["text"],
            model_id=data["model_id"],
            temperature=float(data["temperature"]),
            created_at=datetime.fromisoformat(data["created_at"]),
        )


@attrs.frozen
class TranslationRecord:
    """The English rendering of a generation. For English generations the text
    is copied verbatim, and the translator is recorded as `"identity"`."""

    topic_id: str
    source_language: Language = attrs.field(converter=Language.parse)
    english_text: str
    translator_model_id: str

    def as_dict(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "language": self.source_language.value,
            "source_language": self.source_language.value,
            "english_text": self.english_text,
            "translator_model_id": self.translator_model_id,
        }


@attrs.frozen
class AtomicFact:
    """A short English sentence carrying a single verifiable claim.

    Attributes
    ----------

    fact_id: int
        Ordinal of the fact within its biography, contiguous from zero.
    text: str
        The claim itself.
    source_sentence_index: int
        Index of the biography sentence the fact was decomposed from.
    """

    fact_id: int = attrs.field(validator=attrs.validators.ge(0))
    text: str = attrs.field(validator=_non_empty)
    source_sentence_index: int = attrs.field(validator=attrs.validators.ge(0))

    def as_dict(self) -> dict:
        return {
            "fact_id": self.fact_id,
            "text": self.text,
            "source_sentence_index": self.source_sentence_index,
        }


def _check_evidence(instance: "Verdict", attribute: attrs.Attribute, value: tuple) -> None:
    if instance.label is Label.SUPPORTED and not value:
        msg = f"Fact {instance.fact_id} is Supported but has no evidence passages"
        raise ValueError(msg)


_unit_interval = attrs.validators.and_(attrs.validators.ge(0.0), attrs.validators.le(1.0))


@attrs.frozen
class Verdict:
    """The supported / not-supported judgement on one atomic fact.

    Attributes
    ----------

    fact_id: int
        The fact being judged.
    label: Label
        The final decision of the verifier ensemble.
    judge_score: float
        1.0 when the LLM judge answered 'supported', otherwise 0.0.
    lexical_score: float
        Share of the fact's content tokens found in the best evidence passage.
    evidence_passage_ids: tuple[PassageId, ...]
        The passages retrieved for the fact; never empty for a `Supported`
        label.
    """

    fact_id: int
    label: Label = attrs.field(converter=Label)
    judge_score: float = attrs.field(validator=_unit_interval)
    lexical_score: float = attrs.field(validator=_unit_interval)
    evidence_passage_ids: tuple[PassageId, ...] = attrs.field(converter=tuple, validator=_check_evidence)

    @property
    def supported(self) -> bool:
        return self.label is Label.SUPPORTED

    def as_dict(self) -> dict:
        return {
            "fact_id": self.fact_id,
            "label": self.label.value,
            "judge_score": self.judge_score,
            "lexical_score": self.lexical_score,
            "evidence_passage_ids": [str(passage_id) for passage_id in self.evidence_passage_ids],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Verdict":
        return cls(
            fact_id=int(data["fact_id"]),
            label=data["label"],
            judge_score=float(data["judge_score"]),
            lexical_score=float(data["lexical_score"]),
            evidence_passage_ids=tuple(PassageId.parse(text) for text in data["evidence_passage_ids"]),
        )


@attrs.frozen
class BiographyEvaluation:
    """The FActScore of one (topic, language) unit.

    The `score` is derived from the counts, so that `score == n_correct /
    n_facts` holds by construction. It is `None` (undefined) when there are no
    facts, and such units are left out of every aggregate.

    Attributes
    ----------

    topic_id: str
        The topic evaluated.
    language: Language
        The generation language.
    n_correct: int
        Number of `Supported` facts.
    n_hallucinated: int
        Number of `NotSupported` facts.
    outcome: Outcome
        How the evaluation ended (scored, refused, empty or failed).
    error: str, optional
        The error message of a failed unit.
    """

    topic_id: str
    language: Language = attrs.field(converter=Language.parse)
    n_correct: int = attrs.field(default=0, validator=attrs.validators.ge(0))
    n_hallucinated: int = attrs.field(default=0, validator=attrs.validators.ge(0))
    outcome: Outcome = attrs.field(default=Outcome.SCORED, converter=Outcome)
    error: Optional[str] = None

    @property
    def n_facts(self) -> int:
        return self.n_correct + self.n_hallucinated

    @property
    def score(self) -> Optional[float]:
        """The FActScore, or `None` when no facts were verified."""
        if self.n_facts == 0:
            return None
        return self.n_correct / self.n_facts

    @property
    def key(self) -> tuple[str, Language]:
        return (self.topic_id, self.language)

    def as_dict(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "language": self.language.value,
            "outcome": self.outcome.value,
            "score": self.score,
            "n_correct": self.n_correct,
            "n_hallucinated": self.n_hallucinated,
            "n_facts": self.n_facts,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BiographyEvaluation":
        return cls(
            topic_id=data["topic_id"],
            language=data["language"],
            n_correct=int(data.get("n_correct", 0)),
            n_hallucinated=int(data.get("n_hallucinated", 0)),
            outcome=data.get("outcome", Outcome.SCORED.value),
            error=data.get("error"),
        )
