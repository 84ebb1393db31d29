"""Every acceptance criterion at its stated tolerance, one summary line each.

Criterion 10 is the long-running covariance check; a miss there is reported
as a warning rather than a failure.
"""

import pytest

from heavyrmt.acceptance import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(cid, capsys):
    result = run_criterion(cid)
    with capsys.disabled():
        print(f"\n{result.line()} ({result.seconds:.1f} s)")
    allowed = ("pass", "warn") if cid == 10 else ("pass",)
    assert result.status in allowed, result.detail
