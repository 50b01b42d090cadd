"""Shared pytest plumbing for the test suite.

The acceptance tests print one verdict line per criterion.  Under default
output capture those lines vanish for passing tests, so they are also
collected here and replayed in the terminal summary.
"""

_criterion_lines = []


def record_criterion_line(line):
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.line(line)
