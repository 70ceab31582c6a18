"""Acceptance criteria, one test per criterion.

Each criterion runs at its stated grid sizes and tolerances and prints one
line with its measured values; `robinlab selftest` executes the same
functions from the installed package.
"""

import pytest

from robinlab import acceptance


@pytest.mark.parametrize("name,fn", acceptance.CRITERIA,
                         ids=[name.replace(" ", "_")
                              for name, _ in acceptance.CRITERIA])
def test_criterion(name, fn, capsys):
    detail = fn()
    with capsys.disabled():
        print(f"\nPASS criterion {name}: {detail}")
