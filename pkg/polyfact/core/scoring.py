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
"""The FActScore arithmetic.

For a response `M` whose atomic facts are `A`, and a knowledge source `C`, the
FActScore is the share of the facts in `A` which are supported by `C`:

````
FActScore(M) = (1 / |A|) * sum over a in A of [a is supported by C]
````

The per-fact indicator is summed over all facts, and divided by the number of
facts. The ratio is formed exactly (as a `fractions.Fraction`) and only then
converted to a float, so two lists with the same counts always give the same
score to the last bit.

A response with no facts has no score: [`factscore`]
[polyfact.core.scoring.factscore] raises [`EmptyFactList`]
[polyfact.errors.EmptyFactList] and the caller records the score as undefined.
"""

import math
from fractions import Fraction
from typing import Iterable, Sequence

from polyfact.core.types import Verdict
from polyfact.errors import EmptyFactList

DEFAULT_GAMMA = 10
"""Fact count below which the length penalty applies."""


def fact_counts(verdicts: Iterable[Verdict]) -> tuple[int, int]:
    """Count the correct (`Supported`) and hallucinated (`NotSupported`) facts.

    Returns
    -------

    tuple[int, int]
        `(n_correct, n_hallucinated)`, summing to the number of verdicts.
    """
    n_correct = 0
    n_hallucinated = 0
    for verdict in verdicts:
        if verdict.supported:
            n_correct += 1
        else:
            n_hallucinated += 1
    return n_correct, n_hallucinated


def exact_factscore(verdicts: Sequence[Verdict]) -> Fraction:
    """The FActScore of `verdicts` as an exact fraction.

    Raises
    ------

    EmptyFactList:
        `verdicts` is empty.
    """
    if not verdicts:
        msg = "Cannot score a biography with no atomic facts"
        raise EmptyFactList(msg)

    n_correct, _ = fact_counts(verdicts)
    return Fraction(n_correct, len(verdicts))


def factscore(verdicts: Sequence[Verdict]) -> float:
    """The share of `verdicts` labelled `Supported`, in `[0, 1]`.

    Example
    -------

    Five verdicts of which three are `Supported` score `0.6`.

    Raises
    ------

    EmptyFactList:
        `verdicts` is empty.
    """
    return float(exact_factscore(verdicts))


def length_penalised_score(verdicts: Sequence[Verdict], gamma: int = DEFAULT_GAMMA) -> float:
    """The FActScore multiplied by the length penalty of the original FActScore
    method, which discounts responses carrying fewer than `gamma` facts.

    The penalty is `1` when there are more than `gamma` facts, and `exp(1 -
    gamma / n)` otherwise. A `gamma` of zero disables the penalty.

    Raises
    ------

    EmptyFactList:
        `verdicts` is empty.
    ValueError:
        `gamma` is negative.
    """
    if gamma < 0:
        msg = "gamma must not be negative"
        raise ValueError(msg)

    score = factscore(verdicts)
    n_facts = len(verdicts)
    if gamma == 0 or n_facts > gamma:
        return score
    return score * math.exp(1 - gamma / n_facts)
