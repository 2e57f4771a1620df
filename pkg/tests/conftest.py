import time

import pytest

from somplab import low_coherence_frame


class _Frames(list):
    """Frame list that remembers how long construction took."""

    build_seconds: float = 0.0


@pytest.fixture(scope="session")
def frames():
    """Five optimized 20 x 25 unit-column frames, built once per session.

    Shared by the harness and acceptance tests; construction takes a few
    seconds total, and the elapsed time is kept so acceptance timing can
    charge for it.
    """
    start = time.perf_counter()
    fs = _Frames(low_coherence_frame(20, 25, seed=s) for s in range(5))
    fs.build_seconds = time.perf_counter() - start
    return fs
