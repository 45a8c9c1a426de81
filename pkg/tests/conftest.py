"""Shared pytest hooks: the acceptance module records one verdict line per
criterion, echoed in the terminal summary so they appear in plain ``-v`` runs."""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
