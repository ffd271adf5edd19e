"""Collects the one-line verdicts that acceptance tests attach via ``record_property``."""

_verdicts: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "acceptance":
            label, detail = value
            _verdicts.append((label, "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict, detail in sorted(_verdicts):
        terminalreporter.write_line(f"{verdict} {label}: {detail}")
