"""The 13-criterion acceptance gate.

Each criterion is run once (results cached for the session) and reported as
its own test case, printing one pass/fail line per criterion.  Run with
``pytest -s tests/test_acceptance.py`` to see the lines as they complete;
the same suite backs ``sflab verify``.
"""

import pytest

from sflab import acceptance

_RESULTS = {}


def _get(index):
    if index not in _RESULTS:
        _RESULTS[index] = acceptance.CRITERIA[index](acceptance.DEFAULT_SEED)
    return _RESULTS[index]


@pytest.mark.parametrize("index", range(len(acceptance.CRITERIA)),
                         ids=[fn.__name__.replace("criterion_", "c%02d_" % (i + 1))
                              for i, fn in enumerate(acceptance.CRITERIA)])
def test_acceptance_criterion(index):
    res = _get(index)
    line = acceptance.format_result(res)
    print(line, flush=True)
    assert res.passed, line
