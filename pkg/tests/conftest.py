from datetime import timedelta

from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=timedelta(seconds=5))
settings.load_profile("default")

# (criterion number, title, passed, detail) appended by test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
