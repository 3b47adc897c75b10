from pathlib import Path

import pytest

from urlsem.langid import shipped_profiles
from urlsem.pipeline import default_stoplist_path
from urlsem.tokens import StopList

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def profiles():
    return shipped_profiles()


@pytest.fixture(scope="session")
def stoplist():
    return StopList.load(default_stoplist_path())


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion."""
    from contextlib import contextmanager
    from time import perf_counter

    results = request.config.stash.setdefault(_RESULTS, {})

    @contextmanager
    def run(number, title):
        info = {}
        t0 = perf_counter()
        try:
            yield info
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            results[number] = (False, title, f"{msg[:160]} ({perf_counter() - t0:.2f}s)")
            raise
        detail = ", ".join(f"{k}={v}" for k, v in info.items())
        results[number] = (True, title, f"{detail} ({perf_counter() - t0:.2f}s)")

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title, detail = results[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}")
