import warnings

import pytest


@pytest.fixture
def quiet_unreachable():
    """Silence the advisory about peers that leave joint histories unreachable.

    Several tests sweep over peers that stop early on purpose; the warning
    is correct but would drown the report.
    """
    with warnings.catch_warnings():
        warnings.filterwarnings(
            "ignore", message="peer policy makes some joint histories unreachable"
        )
        yield
