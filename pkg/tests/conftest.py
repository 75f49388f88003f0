import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

import acceptance_log  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance_log.LINES):
        terminalreporter.write_line(acceptance_log.LINES[number])
