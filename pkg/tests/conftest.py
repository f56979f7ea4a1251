def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance") \
        or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
