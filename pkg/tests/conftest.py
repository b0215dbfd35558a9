import numpy as np
import pytest

from mpcore import MultiplexAdjacency


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def single_edge():
    return MultiplexAdjacency.from_edges(2, [[(0, 1)]])


@pytest.fixture
def star():
    return MultiplexAdjacency.from_edges(5, [[(0, i) for i in range(1, 5)]])


_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line: ``verdict(ok, detail)`` or ``verdict.not_run(why)``.

    The criterion number comes from the test's ``criterion`` marker; a test
    that errors before reaching its check is reported as FAIL.
    """
    store = request.config.stash.setdefault(_VERDICTS, {})
    num = tuple(request.node.get_closest_marker("criterion").args)
    store[num] = ("FAIL", "did not complete (error before the check)")

    class Recorder:
        def __call__(self, ok, detail):
            store[num] = ("PASS" if ok else "FAIL", detail)
            assert ok, f"criterion {num[0]}: {detail}"

        def not_run(self, reason):
            store[num] = ("NOT RUN", reason)
            pytest.skip(reason)

    return Recorder()


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_VERDICTS, None)
    if store is None:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(store):
        status, detail = store[num]
        label = " ".join(str(part) for part in num)
        terminalreporter.write_line(f"criterion {label}: {status:<7} {detail}")
