import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from impsem.parser import parse_assertion, parse_program  # noqa: E402

settings.register_profile(
    "default", max_examples=150, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

EUCLID = "r := a; q := 0; while b < r+1 do r := r - b; q := q + 1 done"
EUCLID_P = "a >= 0 && b > 0"
EUCLID_I = "r >= 0 && b > 0 && a = b * q + r"
EUCLID_Q = "q = a / b"


@pytest.fixture
def euclid():
    return parse_program(EUCLID)


@pytest.fixture
def euclid_annotated():
    src = f"r := a; q := 0; while b < r+1 invariant {{ {EUCLID_I} }} do r := r - b; q := q + 1 done"
    return parse_assertion(EUCLID_P), parse_program(src), parse_assertion(EUCLID_Q)
