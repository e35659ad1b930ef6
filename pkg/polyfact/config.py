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
"""The configuration of an evaluation run.

A run is configured by one YAML file, mapped onto the frozen `attrs` classes of
this module. Every section, and every key within a section, is optional: the
defaults reproduce the published set-up (temperature 1.0 for generation, a
lexical threshold of 0.3, the top 20 countries for the continental
distribution). Unknown keys, and values which break a validator, are reported
as a [`ConfigError`][polyfact.errors.ConfigError].

````yaml
backends:
  generation:
    backend_kind: http_chat
    model_id: gpt-4-1106-preview
    endpoint_url: https://api.openai.com/v1/chat/completions
    credentials_env_var: OPENAI_API_KEY
  translation: {backend_kind: mock, model_id: mock-translator}
knowledge: {source: wikipedia, window: 256, stride: 128, k: 5}
verification: {npm_threshold: 0.3, ensemble: conjunction}
run: {languages: [en, ko], temperature: 1.0, concurrency: 4, budget: 5000}
paths: {cache_dir: cache, runs_dir: runs}
````

Secrets never appear in the file: an `http_chat` backend names the
*environment variable* holding its key in `credentials_env_var`.

Relative paths are resolved against the working directory of the process.

Hashing
-------

[`Config.config_hash`][polyfact.config.Config.config_hash] is the SHA-256 of
the canonical JSON form of the settings which can change the content of a run.
Operational settings (concurrency, call budget, retries, time-outs, rate
limits, the offline switch, paths, the language selection, and the analytics
section) are left out, so that a run may be resumed with, say, a higher
budget.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, TypeVar, Union

import attrs
import yaml

from polyfact.core.types import ALL_LANGUAGES, Ensemble, Language
from polyfact.errors import ConfigError
from polyfact.gateway.backends import BackendKind, BackendSpec
from polyfact.gateway.mock import MockOptions
from polyfact.helpers.files import atomic_write_text, sha256_hex, stable_json
from polyfact.knowledge.wikipedia import DEFAULT_API_URL, DEFAULT_USER_AGENT

logger = logging.getLogger(__name__)

T = TypeVar("T")

OPENAI_CHAT_URL = "https://api.openai.com/v1/chat/completions"
LOCAL_CHAT_URL = "http://localhost:8000/v1/chat/completions"

###
### Enumerations
###


class KnowledgeSource(str, Enum):
    """Where the knowledge documents come from."""

    WIKIPEDIA = "wikipedia"
    """English Wikipedia, through the article cache."""
    SYNTHETIC = "synthetic"
    """The synthetic articles matching the mock backend's biographies."""


###
### Helpers
###


def _section(cls: type[T]) -> Callable[[Any], T]:
    """A converter building `cls` from a mapping, rejecting unknown keys."""

    def convert(value: Any) -> T:
        if isinstance(value, cls):
            return value
        if value is None:
            return cls()
        if not isinstance(value, Mapping):
            msg = f"Expected a mapping for {cls.__name__}, found {type(value).__name__}"
            raise ConfigError(msg)

        known = {field.name for field in attrs.fields(cls) if field.init}
        unknown = sorted(set(value) - known)
        if unknown:
            msg = f"Unknown key(s) for {cls.__name__}: {', '.join(map(str, unknown))}"
            raise ConfigError(msg)
        return cls(**value)

    return convert


def _languages(value: Any) -> tuple[Language, ...]:
    if isinstance(value, str):
        value = [value]
    languages = tuple(Language.parse(code) for code in value)
    if not languages:
        msg = "At least one language must be selected"
        raise ValueError(msg)
    return tuple(dict.fromkeys(languages))


def _markers(value: Any) -> dict[str, tuple[str, ...]]:
    markers = {}
    for code, found in value.items():
        markers[Language.parse(code).value] = tuple(str(marker) for marker in found)
    return markers


def _optional_path(value: Any) -> Optional[str]:
    return None if value is None else str(value)


def _check_stride(instance: "KnowledgeConfig", attribute: attrs.Attribute, value: int) -> None:
    if not 0 < value <= instance.window:
        msg = f"stride must satisfy 0 < stride <= window (got stride={value}, window={instance.window})"
        raise ValueError(msg)


_unit_interval = attrs.validators.and_(attrs.validators.ge(0.0), attrs.validators.le(1.0))


def _plain(instance: Any, attribute: Any, value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    return value


###
### Sections
###


def _default_backends() -> dict[str, BackendSpec]:
    return {
        "generation": BackendSpec(
            BackendKind.HTTP_CHAT, "gpt-4-1106-preview", OPENAI_CHAT_URL, credentials_env_var="OPENAI_API_KEY"
        ),
        "translation": BackendSpec(
            BackendKind.HTTP_CHAT, "gpt-3.5-turbo-0125", OPENAI_CHAT_URL, credentials_env_var="OPENAI_API_KEY"
        ),
        "decomposition": BackendSpec(BackendKind.HTTP_CHAT, "mistral-7b-instruct", LOCAL_CHAT_URL),
        "verification": BackendSpec(BackendKind.HTTP_CHAT, "mistral-7b-instruct", LOCAL_CHAT_URL),
    }


@attrs.frozen
class BackendsConfig:
    """One backend per pipeline role."""

    generation: BackendSpec = attrs.field(
        factory=lambda: _default_backends()["generation"], converter=_section(BackendSpec)
    )
    translation: BackendSpec = attrs.field(
        factory=lambda: _default_backends()["translation"], converter=_section(BackendSpec)
    )
    decomposition: BackendSpec = attrs.field(
        factory=lambda: _default_backends()["decomposition"], converter=_section(BackendSpec)
    )
    verification: BackendSpec = attrs.field(
        factory=lambda: _default_backends()["verification"], converter=_section(BackendSpec)
    )

    def roles(self) -> dict[str, BackendSpec]:
        return {
            "generation": self.generation,
            "translation": self.translation,
            "decomposition": self.decomposition,
            "verification": self.verification,
        }

    @classmethod
    def all_mock(cls) -> "BackendsConfig":
        roles = ("generator", "translator", "decomposer", "judge")
        return cls(*(BackendSpec.mock(f"mock-{role}") for role in roles))


@attrs.frozen
class KnowledgeConfig:
    """Article acquisition, passage chunking and retrieval."""

    source: KnowledgeSource = attrs.field(default=KnowledgeSource.WIKIPEDIA, converter=KnowledgeSource)
    window: int = attrs.field(default=256, validator=attrs.validators.gt(0))
    stride: int = attrs.field(default=128, validator=_check_stride)
    k: int = attrs.field(default=5, validator=attrs.validators.ge(1))
    api_url: str = DEFAULT_API_URL
    user_agent: str = DEFAULT_USER_AGENT
    max_retries: int = attrs.field(default=3, validator=attrs.validators.ge(0))
    backoff: float = attrs.field(default=1.0, validator=attrs.validators.ge(0.0))
    offline: bool = False


@attrs.frozen
class VerificationConfig:
    npm_threshold: float = attrs.field(default=0.3, converter=float, validator=_unit_interval)
    ensemble: Ensemble = attrs.field(default=Ensemble.CONJUNCTION, converter=Ensemble)


@attrs.frozen
class RunConfig:
    """The evaluation grid and the sampling settings.

    Attributes
    ----------

    languages: tuple[Language, ...]
        Languages of the grid; all nine by default.
    temperature: float
        Sampling temperature of the generation model.
    aux_temperature: float
        Sampling temperature of translation, decomposition and verification.
    concurrency: int
        Number of grid units evaluated at once.
    budget: int, optional
        Ceiling on uncached backend calls per invocation.
    seed: int
        Seed sent with every request.
    max_tokens: int
        Reply length bound for every request.
    """

    languages: tuple[Language, ...] = attrs.field(default=ALL_LANGUAGES, converter=_languages)
    temperature: float = attrs.field(default=1.0, converter=float, validator=attrs.validators.ge(0.0))
    aux_temperature: float = attrs.field(default=0.0, converter=float, validator=attrs.validators.ge(0.0))
    concurrency: int = attrs.field(default=4, validator=attrs.validators.ge(1))
    budget: Optional[int] = attrs.field(
        default=None, validator=attrs.validators.optional(attrs.validators.ge(0))
    )
    seed: int = 0
    max_tokens: int = attrs.field(default=1024, validator=attrs.validators.ge(1))


@attrs.frozen
class RefusalConfig:
    """Refusal detection. `markers` adds to the bundled markers."""

    min_length: int = attrs.field(default=20, validator=attrs.validators.ge(0))
    markers: dict[str, tuple[str, ...]] = attrs.field(factory=dict, converter=_markers)


@attrs.frozen
class AnalyticsConfig:
    top_k: int = attrs.field(default=20, validator=attrs.validators.ge(1))


@attrs.frozen
class PathsConfig:
    """File locations. A `roster` of `None` selects the bundled roster."""

    roster: Optional[str] = attrs.field(default=None, converter=_optional_path)
    cache_dir: str = attrs.field(default="cache", converter=str)
    runs_dir: str = attrs.field(default="runs", converter=str)

    @property
    def articles_dir(self) -> Path:
        return Path(self.cache_dir) / "articles"

    @property
    def indexes_dir(self) -> Path:
        return Path(self.cache_dir) / "indexes"

    @property
    def responses_dir(self) -> Path:
        return Path(self.cache_dir) / "responses"


###
### Configuration
###

_OPERATIONAL = {
    "backends": ("max_retries", "timeout", "backoff", "requests_per_second", "max_in_flight"),
    "knowledge": ("max_retries", "backoff", "offline", "user_agent"),
    "run": ("concurrency", "budget", "languages"),
}
_OPERATIONAL_SECTIONS = ("analytics", "paths")


@attrs.frozen
class Config:
    """The complete configuration of a run."""

    backends: BackendsConfig = attrs.field(factory=BackendsConfig, converter=_section(BackendsConfig))
    knowledge: KnowledgeConfig = attrs.field(factory=KnowledgeConfig, converter=_section(KnowledgeConfig))
    verification: VerificationConfig = attrs.field(
        factory=VerificationConfig, converter=_section(VerificationConfig)
    )
    run: RunConfig = attrs.field(factory=RunConfig, converter=_section(RunConfig))
    refusal: RefusalConfig = attrs.field(factory=RefusalConfig, converter=_section(RefusalConfig))
    analytics: AnalyticsConfig = attrs.field(factory=AnalyticsConfig, converter=_section(AnalyticsConfig))
    mock: MockOptions = attrs.field(factory=MockOptions, converter=_section(MockOptions))
    paths: PathsConfig = attrs.field(factory=PathsConfig, converter=_section(PathsConfig))

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "Config":
        """Build a configuration from plain (parsed YAML) data.

        Raises
        ------

        ConfigError:
            A key is unknown, or a value is invalid.
        """
        try:
            return _section(cls)(data)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            msg = f"Invalid configuration: {exc}"
            raise ConfigError(msg) from exc

    @classmethod
    def from_yaml(cls, text: str) -> "Config":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            msg = f"Configuration is not valid YAML: {exc}"
            raise ConfigError(msg) from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        """The canonical plain form of the configuration; `from_dict` of the
        result gives back an equal configuration."""
        data = attrs.asdict(self, value_serializer=_plain)
        data["mock"] = self.mock.as_dict()
        return data

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)

    def hashed_dict(self) -> dict:
        """The settings covered by `config_hash`."""
        data = self.to_dict()
        for section in _OPERATIONAL_SECTIONS:
            data.pop(section)
        for role in data["backends"].values():
            for key in _OPERATIONAL["backends"]:
                role.pop(key)
        for section in ("knowledge", "run"):
            for key in _OPERATIONAL[section]:
                data[section].pop(key)
        return data

    def config_hash(self) -> str:
        return sha256_hex(stable_json(self.hashed_dict()))

    def evolve(self, **sections: Any) -> "Config":
        """A copy with some sections replaced, e.g. `config.evolve(run={...})`.
        Mapping values are merged into the current section."""
        changes = {}
        for name, value in sections.items():
            if isinstance(value, Mapping):
                value = attrs.evolve(getattr(self, name), **value)
            changes[name] = value
        return attrs.evolve(self, **changes)


def default_config() -> Config:
    return Config()


def mock_config(**sections: Any) -> Config:
    """A configuration running entirely on the mock backend and synthetic
    articles, for tests and demonstrations."""
    config = Config(
        backends=BackendsConfig.all_mock(), knowledge=KnowledgeConfig(source=KnowledgeSource.SYNTHETIC)
    )
    return config.evolve(**sections) if sections else config


def load_config(path: Union[str, Path]) -> Config:
    """Read a YAML configuration file.

    Raises
    ------

    ConfigError:
        The file cannot be read, or is not a valid configuration.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        msg = f"Cannot read configuration file {path}: {exc}"
        raise ConfigError(msg) from exc

    config = Config.from_yaml(text)
    logger.debug("Loaded configuration %s (hash %s)", path, config.config_hash()[:12])
    return config


def dump_config(config: Config, path: Union[str, Path]) -> None:
    atomic_write_text(Path(path), config.to_yaml())
