import _suite


def pytest_terminal_summary(terminalreporter):
    if not _suite.ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(_suite.ACCEPTANCE):
        terminalreporter.write_line(_suite.ACCEPTANCE[k])
