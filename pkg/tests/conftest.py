"""Pytest hooks: print the acceptance-criteria scoreboard after the run."""

ACCEPTANCE_RESULTS: list[tuple[int, str, bool]] = []
ACCEPTANCE_NOTES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num:2d}: {name}")
    for line in ACCEPTANCE_NOTES:
        terminalreporter.write_line(line)
