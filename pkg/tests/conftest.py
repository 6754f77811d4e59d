"""Shared pytest plumbing: collect acceptance-criterion verdict lines and
echo them in the terminal summary so each criterion reports one visible
pass/fail line even under output capture."""

ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
