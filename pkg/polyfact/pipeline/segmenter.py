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
"""A frozen, rule-based sentence segmenter for English text.

Decomposition into atomic facts is done one sentence at a time, so the
granularity of the facts depends on where the sentences end. A rule-based
segmenter keeps that granularity identical whichever backend is used.

A sentence ends at a run of terminal punctuation (`.`, `!`, `?`, or the
full-width `。`, `！`, `？`), optionally followed by closing quotes or brackets,
when the next character is whitespace or the end of the text. Line breaks
always end a sentence. A full stop does *not* end a sentence after

* a known abbreviation (`Dr.`, `Jan.`, `U.S.`, ...);
* a single letter (an initial, as in `John F. Kennedy`);
* a number followed by a lower-case word (`No. 3 in the list`).

Example
-------

````python
split_sentences("Obama was born in Honolulu. He served two terms.")
# ['Obama was born in Honolulu.', 'He served two terms.']
````
"""

import regex

ABBREVIATIONS = frozenset(
    """
    mr mrs ms dr prof sr jr st mt ft gen col lt sgt capt cmdr adm gov sen rep pres rev hon
    jan feb mar apr jun jul aug sep sept oct nov dec
    no nos vol pp ed eds est approx vs etc al inc ltd co corp dept univ
    e.g i.e u.s u.k u.n u.s.a a.d b.c
    """.split()
)
"""Lower-case abbreviations (without their final full stop) after which a full
stop does not end the sentence."""

_TERMINAL = ".!?。！？"
_CLOSERS = "\"')]}»”’"

_BOUNDARY = regex.compile(rf"[{regex.escape(_TERMINAL)}]+[{regex.escape(_CLOSERS)}]*(?=\s|$)")
_LAST_WORD = regex.compile(r"(\S+)$")
_NEXT_WORD = regex.compile(r"\s*(\S)")


def _is_abbreviation(before: str) -> bool:
    found = _LAST_WORD.search(before)
    if found is None:
        return False
    word = found.group(1).lstrip("(\"'").lower()
    if word in ABBREVIATIONS:
        return True
    return len(word) == 1 and word.isalpha()


def _split_line(line: str) -> list[str]:
    sentences = []
    start = 0
    for boundary in _BOUNDARY.finditer(line):
        mark = boundary.group(0)
        if mark.startswith(".") and len(mark.rstrip(_CLOSERS)) == 1:
            if _is_abbreviation(line[start : boundary.start()]):
                continue
            following = _NEXT_WORD.match(line, boundary.end())
            after_digit = line[boundary.start() - 1 : boundary.start()].isdigit()
            if after_digit and following is not None and following.group(1).islower():
                continue
        sentence = line[start : boundary.end()].strip()
        if sentence:
            sentences.append(sentence)
        start = boundary.end()

    tail = line[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def split_sentences(text: str) -> list[str]:
    """Split `text` into sentences, in order. Blank input gives no sentences."""
    sentences: list[str] = []
    for line in text.splitlines():
        sentences.extend(_split_line(line))
    return sentences
