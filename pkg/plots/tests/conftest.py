import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden() -> pathlib.Path:
    """Frozen sweep CSV crossing all five axes; see data/make_golden.py."""
    return DATA / "golden.csv"


@pytest.fixture()
def golden_rows(golden):
    import csv

    with open(golden, newline="") as fh:
        return list(csv.DictReader(fh))
