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
"""Exceptions raised by the `polyfact` library. All library errors derive from
[`PolyfactError`][polyfact.errors.PolyfactError], so callers who only want to
separate 'our' failures from programming errors can catch that single class.
The sub-classes are grouped by the part of the library which raises them.

| Group          | Exceptions                                                                 |
|----------------|----------------------------------------------------------------------------|
| Configuration  | `ConfigError`, `ConfigDrift`, `RosterError`, `UnknownLanguage`             |
| Scoring        | `EmptyFactList`                                                            |
| Knowledge      | `ArticleNotFound`, `NetworkError`, `EmptyCorpus`                           |
| Gateway        | `MissingTemplate`, `UnboundPlaceholder`, `BackendUnavailable`, `AuthError`, |
|                | `BudgetExceeded`                                                           |
| Pipeline       | `SkippedRefusal`                                                           |
| Analytics      | `InsufficientData`, `DegeneratePair`, `NoOverlap`                          |

Plain precondition violations on arguments (an empty title, a negative window)
are reported with the standard `ValueError` instead.
"""

###
### Base Class
###


class PolyfactError(Exception):
    """Base class for all errors raised by the library."""


###
### Configuration
###


class ConfigError(PolyfactError):
    """The configuration file, or a value within it, is invalid."""


class ConfigDrift(ConfigError):
    """A resumed run was started with a configuration, roster or template set
    that differs from the one recorded in the run manifest."""


class RosterError(PolyfactError):
    """The topic roster could not be parsed, or breaks a roster invariant."""


class UnknownLanguage(PolyfactError, ValueError):
    """A language code outside the nine supported languages was requested."""


###
### Scoring
###


class EmptyFactList(PolyfactError):
    """A FActScore was requested for a biography with no atomic facts.

    The caller must treat the score as undefined.
    """


###
### Knowledge Store
###


class KnowledgeError(PolyfactError):
    """Base class for failures in the knowledge store."""


class ArticleNotFound(KnowledgeError):
    """The requested Wikipedia title has no page."""


class NetworkError(KnowledgeError):
    """Wikipedia could not be reached, even after retries."""


class EmptyCorpus(KnowledgeError):
    """An index was requested over (or a query issued against) no passages."""


###
### LLM Gateway
###


class GatewayError(PolyfactError):
    """Base class for failures in the LLM gateway."""


class MissingTemplate(GatewayError):
    """No prompt template exists for the requested (template, language)."""


class UnboundPlaceholder(GatewayError):
    """A prompt template was rendered without a value for one of its
    placeholders."""


class BackendUnavailable(GatewayError):
    """The backend failed with transient errors on every retry."""


class AuthError(GatewayError):
    """The backend rejected the credentials, or no credentials were found."""


class BudgetExceeded(GatewayError):
    """The configured ceiling on (uncached) backend calls has been reached."""


###
### Pipeline
###


class PipelineError(PolyfactError):
    """Base class for failures inside a pipeline stage."""


class SkippedRefusal(PipelineError):
    """A refused generation was passed to a stage that needs a biography."""


###
### Analytics
###


class AnalyticsError(PolyfactError):
    """Base class for failures in the analytics reports."""


class InsufficientData(AnalyticsError):
    """Fewer defined scores are available than the report requires."""


class DegeneratePair(AnalyticsError):
    """A correlation was requested over a vector with zero variance."""


class NoOverlap(AnalyticsError):
    """Two score sets share no common identifiers."""
