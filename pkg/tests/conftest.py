"""Shared pytest hooks: echo the acceptance summary after the run."""

import sys


def pytest_terminal_summary(terminalreporter):
    lines = []
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] == "test_acceptance":
            lines = getattr(module, "ACCEPTANCE_LINES", [])
            break
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.line(line)
