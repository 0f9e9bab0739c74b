from pathlib import Path

import pytest

from schemalink.dataio import load_annotations, load_questions, load_schemas

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def schemas():
    return load_schemas(DATA / "tables.json")


@pytest.fixture(scope="session")
def questions():
    return load_questions(DATA / "dev.json")


@pytest.fixture(scope="session")
def appendix_examples(questions):
    return load_annotations(DATA / "appendix_e.jsonl", questions)


# --- acceptance criterion reporting ----------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion this test belongs to")


def pytest_runtest_logreport(report):
    name = getattr(report, "criterion", None)
    if name is None:
        return
    outcomes = _CRITERIA.setdefault(name, [])
    if report.when == "call" or report.outcome != "passed":
        outcomes.append("skipped" if report.skipped else report.outcome)



@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcomes in sorted(_CRITERIA.items()):
        if "failed" in outcomes:
            status = "FAIL"
        elif outcomes and all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] {name}  ({len(outcomes)} check(s))")
