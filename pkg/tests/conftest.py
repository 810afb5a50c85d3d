import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent

from tracelinks.parser import parse_term
from tracelinks.runtime import load_db


@pytest.fixture(scope="session")
def tours_db():
    return load_db(str(ROOT / "fixtures" / "tours.json"))


@pytest.fixture(scope="session")
def boattours():
    return parse_term((ROOT / "examples" / "boattours.lt").read_text())


@pytest.fixture(scope="session")
def root():
    return ROOT
