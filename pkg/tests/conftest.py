import pytest

_acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.fspath.basename == "test_acceptance.py":
        doc = item.function.__doc__
        title = doc.strip().splitlines()[0] if doc else item.name
        _acceptance_results.append((title, rep.outcome, rep.capstdout))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for title, outcome, captured in _acceptance_results:
        label = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}  {title}")
        for line in captured.strip().splitlines():
            terminalreporter.write_line(f"      {line}")
