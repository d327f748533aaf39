import contextlib

import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Context manager recording one acceptance criterion as PASS, FAIL or SKIP."""
    results = request.config.stash[_RESULTS]

    @contextlib.contextmanager
    def check(number, title):
        notes = []
        try:
            yield notes.append
        except pytest.skip.Exception as exc:
            results.append((number, "SKIP", title, str(exc.msg)))
            raise
        except BaseException as exc:
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            results.append((number, "FAIL", title, "; ".join([*notes, reason])))
            raise
        results.append((number, "PASS", title, "; ".join(notes)))

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title, detail in sorted(results, key=lambda r: r[0]):
        line = f"criterion {number}: {status} - {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
