import pytest

ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    class Verdict:
        def __init__(self):
            self.label = None
            self.detail = ""

        def __call__(self, label, detail=""):
            self.label, self.detail = label, detail

    v = Verdict()
    yield v
    if v.label is None:
        return
    failed = getattr(request.node, "rep_call", None)
    status = "FAIL" if failed is None or failed.failed else "PASS"
    line = f"{status}  {v.label}" + (f"  [{v.detail}]" if v.detail else "")
    lines.append(line)
    print("\n" + line)


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    if rep.when == "call":
        item.rep_call = rep
    return rep


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
