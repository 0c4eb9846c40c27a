import time
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[list]()


class CriterionLog:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self, lines: list):
        self.lines = lines

    @contextmanager
    def check(self, number: int, title: str, budget: float):
        details: dict = {}
        start = time.perf_counter()
        try:
            yield details
            elapsed = time.perf_counter() - start
            assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"
        except BaseException as exc:
            self._add(number, title, "FAIL", time.perf_counter() - start, details, str(exc).splitlines()[:1])
            raise
        self._add(number, title, "PASS", elapsed, details, [])

    def _add(self, number, title, verdict, elapsed, details, reason):
        extra = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in details.items())
        line = f"criterion {number:2d} {verdict}  {title} ({elapsed:.2f}s{', ' + extra if extra else ''})"
        if reason:
            line += f" :: {reason[0][:120]}"
        self.lines.append((number, line))
        print(line)


@pytest.fixture
def criterion(request):
    return CriterionLog(request.config.stash.setdefault(_RESULTS, []))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
