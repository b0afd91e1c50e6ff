import math

import numpy as np
import pytest

from slmaslov import slp


@pytest.fixture(scope="session")
def free1d():
    return slp.SLProblem(n=1, T=math.pi,
                         P=slp.constant([[1.0]]), Q=slp.constant([[0.0]]),
                         R=slp.constant([[0.0]]), D=slp.constant([[1.0]])).validate()


@pytest.fixture(scope="session")
def free1d_2pi():
    return slp.SLProblem(n=1, T=2 * math.pi,
                         P=slp.constant([[1.0]]), Q=slp.constant([[0.0]]),
                         R=slp.constant([[0.0]]), D=slp.constant([[1.0]])).validate()


@pytest.fixture(scope="session")
def pot1d():
    coeffs = [[[1.0]], [[0.0]], [[-0.5]], [[0.0]], [[1.0 / 24]], [[0.0]],
              [[-1.0 / 720]]]
    return slp.SLProblem(n=1, T=math.pi,
                         P=slp.constant([[1.0]]), Q=slp.constant([[0.0]]),
                         R=slp.polynomial(coeffs), D=slp.constant([[1.0]])).validate()


@pytest.fixture(scope="session")
def decoupled2():
    z = np.zeros((2, 2))
    return slp.SLProblem(n=2, T=math.pi, P=slp.constant(np.eye(2)),
                         Q=slp.constant(z), R=slp.constant(z),
                         D=slp.constant(np.eye(2))).validate()


@pytest.fixture(scope="session")
def coupled2():
    return slp.SLProblem(n=2, T=math.pi,
                         P=slp.constant([[2.0, 0.3], [0.3, 1.0]]),
                         Q=slp.constant([[0.1, -0.2], [0.05, 0.15]]),
                         R=slp.constant([[0.5, 0.4], [0.4, -0.3]]),
                         D=slp.constant(np.eye(2))).validate()
