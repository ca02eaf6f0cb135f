import pytest

from freewalk.groups import FreeProduct, LatticeFactor, cyclic_factor
from freewalk.walks import uniform_on_generators


@pytest.fixture(scope="session")
def f2():
    return FreeProduct(
        [LatticeFactor(1, "a"), LatticeFactor(1, "b")], name="F2"
    )


@pytest.fixture(scope="session")
def f2_srw(f2):
    return uniform_on_generators(f2)


@pytest.fixture(scope="session")
def z2z3():
    return FreeProduct([cyclic_factor(2), cyclic_factor(3)], name="Z2*Z3")


@pytest.fixture(scope="session")
def z2z3_srw(z2z3):
    return uniform_on_generators(z2z3)


@pytest.fixture(scope="session")
def z2cubed():
    return FreeProduct([cyclic_factor(2)] * 3, name="Z2*Z2*Z2")


@pytest.fixture(scope="session")
def z2cubed_srw(z2cubed):
    return uniform_on_generators(z2cubed)
