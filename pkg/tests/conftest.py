import pytest

ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome; the summary prints a line per criterion."""
    rec = {}

    def report(number: int, title: str, passed: bool, detail: str = ""):
        rec.update(number=number, title=title, passed=bool(passed), detail=detail)
        ACCEPTANCE[number] = dict(rec)
        print(f"criterion {number} ({title}): {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    yield report
    if rec and request.node.rep_call.failed and ACCEPTANCE[rec["number"]]["passed"]:
        ACCEPTANCE[rec["number"]]["passed"] = False


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        r = ACCEPTANCE[k]
        terminalreporter.write_line(
            f"criterion {k:2d} {'PASS' if r['passed'] else 'FAIL'}  {r['title']}: {r['detail']}")
