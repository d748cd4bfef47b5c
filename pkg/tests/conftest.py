import numpy as np
import pytest

from symdom.domains import DomainSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20_240_817)


@pytest.fixture(params=["ball1", "ball2", "polydisc2", "matrixball22"])
def any_domain(request):
    return {
        "ball1": DomainSpec.ball(1),
        "ball2": DomainSpec.ball(2),
        "polydisc2": DomainSpec.polydisc(2),
        "matrixball22": DomainSpec.matrix_ball(2, 2),
    }[request.param]
