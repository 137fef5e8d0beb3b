import pytest

from acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture(scope="session")
def record():
    """Store one PASS/FAIL outcome per acceptance criterion."""

    def _record(n, ok, detail=""):
        prev = RESULTS.get(n)
        if prev is not None:
            ok = ok and prev[0]
            detail = f"{prev[1]}; {detail}" if detail else prev[1]
        RESULTS[n] = (bool(ok), detail)

    return _record
