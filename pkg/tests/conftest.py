"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""
import collections

import pytest

ACCEPTANCE = collections.OrderedDict()


@pytest.fixture
def criterion():
    """``criterion(k, name, ok, detail)`` records one acceptance check."""

    def record(k, name, ok, detail=""):
        ACCEPTANCE.setdefault(k, []).append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[k]
        ok = all(c[1] for c in checks)
        tr.write_line("%s criterion %d: %d/%d checks" % ("PASS" if ok else "FAIL", k, sum(c[1] for c in checks), len(checks)))
        for name, good, detail in checks:
            tr.write_line("    %s %s %s" % ("ok  " if good else "FAIL", name, detail))
