"""Shared pytest plumbing.

The acceptance tests register one verdict line each; the terminal-summary
hook prints them after the run so they stay visible under output capture.
"""

_verdicts = {}


def record_verdict(n, ok, detail):
    _verdicts[n] = f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        terminalreporter.write_line(_verdicts[n])
