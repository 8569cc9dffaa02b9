import gate


def pytest_terminal_summary(terminalreporter):
    if not gate.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(gate.RESULTS):
        terminalreporter.write_line(gate.RESULTS[n])
