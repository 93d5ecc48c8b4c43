"""Shared test plumbing: the acceptance-criteria result board.

Acceptance tests register one verdict per criterion before asserting, so
the terminal summary always shows a pass/fail line per criterion even
when a criterion's assertion fires.
"""

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_criterion(num: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[num] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[num]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {num}] {status} - {detail}")
