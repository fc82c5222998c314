import pytest

from collapse_spectra.rates import CollapseModel

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def csl():
    return CollapseModel.csl()


@pytest.fixture
def dp():
    return CollapseModel.dp()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, check, passed, detail)`` for the end-of-run summary."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(criterion, check, passed, detail=""):
        store.setdefault(criterion, []).append((check, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(store):
        checks = store[criterion]
        ok = all(passed for _, passed, _ in checks)
        failed = [f"{name} ({detail})" for name, passed, detail in checks if not passed]
        suffix = "" if ok else " -- failed: " + "; ".join(failed)
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}{suffix}")
