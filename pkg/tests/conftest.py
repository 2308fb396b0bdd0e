"""Shared pytest plumbing for the acceptance report.

Criterion tests register a one-line verdict here; the lines are echoed in
the terminal summary so every run shows one pass/fail line per criterion.
"""

ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
