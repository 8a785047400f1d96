import hypothesis
import numpy as np
import pytest

from tdadjust import enumerate_def2_sets, load_dag

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def ex1():
    return load_dag("example1")


@pytest.fixture(scope="session")
def ex2():
    return load_dag("example2")


@pytest.fixture(scope="session")
def sets1(ex1):
    return enumerate_def2_sets(ex1)


@pytest.fixture(scope="session")
def sets2(ex2):
    return enumerate_def2_sets(ex2)


def by_number(sets, number):
    return next(s.z for s in sets if s.number == number)
