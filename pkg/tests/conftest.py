import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``criterion(number, title, detail_fn)``; the line is written
    after the test body finishes, PASS only when the body did not fail.
    """
    slot = {}

    def register(number, title, detail=""):
        slot.update(number=number, title=title, detail=detail)
        return slot

    yield register
    if slot:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        detail = slot["detail"]() if callable(slot["detail"]) else slot["detail"]
        CRITERIA[slot["number"]] = f"{'PASS' if ok else 'FAIL'}  [{slot['number']:2d}] {slot['title']}" + \
            (f"  ({detail})" if detail else "")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
