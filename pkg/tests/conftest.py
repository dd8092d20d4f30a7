import numpy as np
import pytest
from hypothesis import settings

from convexcert import (SampleCloud, make_least_squares, make_negative_phi0, make_phi0,
                        make_quadratic, make_quartic_1d)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def quad14():
    return make_quadratic(np.diag([1.0, 4.0]))


@pytest.fixture
def phi0():
    return make_phi0(2)


@pytest.fixture
def neg_phi0():
    return make_negative_phi0(2)


@pytest.fixture
def quartic():
    return make_quartic_1d()


@pytest.fixture
def ls_rank1():
    return make_least_squares([[1.0, 0.0], [0.0, 0.0]], [1.0, 0.0])


@pytest.fixture
def cloud7():
    return SampleCloud.default(2, seed=7, pairs=2000)


def catalog():
    """Every catalog family at a few parameter settings."""
    rng = np.random.default_rng(3)
    B = rng.normal(size=(3, 3))
    return [
        make_phi0(2),
        make_phi0(3),
        make_quadratic(np.diag([1.0, 4.0])),
        make_quadratic(B @ B.T + 0.5 * np.eye(3), b=[1.0, -2.0, 0.5]),
        make_least_squares([[1.0, 0.0], [0.0, 0.0]], [1.0, 0.0]),
        make_least_squares(rng.normal(size=(4, 2)), rng.normal(size=4)),
        make_quartic_1d(),
        make_negative_phi0(2),
    ]
