import sys

import pytest

from upcoding_rmtl.catalog import load_catalog
from upcoding_rmtl.simulate import load_cooccurrence


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def table(catalog):
    return load_cooccurrence(catalog=catalog)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    outcomes = getattr(module, "OUTCOMES", None)
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(outcomes, key=lambda k: (int(str(k).split("-")[0]), str(k))):
        terminalreporter.write_line(outcomes[key])
