import math

import pytest

from eprsim import TEST_ANGLES, s1, s2
from eprsim.zoo import ZOO

GRID_PAIRS = tuple((s1(x), s2(y)) for x in TEST_ANGLES for y in TEST_ANGLES)

OPTIMAL = (s1(0.0), s1(math.pi / 2), s2(math.pi / 4), s2(3 * math.pi / 4))


@pytest.fixture(params=sorted(ZOO), ids=sorted(ZOO))
def zoo_name(request):
    return request.param
