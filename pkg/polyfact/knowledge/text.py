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
"""Tokenisation used by the index and by the lexical support score.

The same analyser is used everywhere, so that index terms and query terms
always agree:

1. Unicode NFC normalisation;
2. lower-casing;
3. every run of Unicode punctuation (`\\p{P}`) is replaced by a space;
4. splitting on whitespace.

No stemming is done, which keeps the index identical across implementations.
"""

import unicodedata

import regex

_PUNCTUATION = regex.compile(r"\p{P}+")

STOPWORDS = frozenset(
    """
    a about above after again against all also am an and any are as at be because been before being
    below between both but by can could did do does doing down during each few for from further had
    has have having he her here hers herself him himself his how i if in into is it its itself just
    me more most my myself no nor not of off on once only or other our ours ourselves out over own
    same she should so some such than that the their theirs them themselves then there these they
    this those through to too under until up very was we were what when where which while who whom
    why will with would you your yours yourself yourselves
    """.split()
)
"""English function words ignored by the lexical support score."""


def normalise(text: str) -> str:
    """Apply NFC normalisation and lower-casing to `text`."""
    return unicodedata.normalize("NFC", text).lower()


def tokenize(text: str) -> list[str]:
    """Split `text` into index terms.

    Example
    -------

    ````python
    tokenize("Obama's second term, 2013–2017.")
    # ['obama', 's', 'second', 'term', '2013', '2017']
    ````
    """
    return _PUNCTUATION.sub(" ", normalise(text)).split()


def content_tokens(text: str) -> set[str]:
    """The distinct index terms of `text`, less the English stop-words."""
    return {token for token in tokenize(text) if token not in STOPWORDS}
