import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("default")

_CRITERIA: dict[int, str] = {}


def record_criterion(number: int, line: str) -> None:
    _CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
