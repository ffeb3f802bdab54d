"""Collects one verdict line per acceptance criterion and prints them after the run."""

VERDICTS: list[tuple[int, str, bool, str]] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    VERDICTS.append((number, title, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(VERDICTS):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  "
                                    f"{title}: {detail}")
