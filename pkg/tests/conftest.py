from __future__ import annotations

import pytest

from supercoset.cli import Builder
from supercoset.dsl import iter_corpus, parse_model
from supercoset.superalg import ChartSignature, SuperPolynomial

CORPUS = dict(iter_corpus())


def builder(stem: str) -> Builder:
    return Builder(parse_model(CORPUS[stem]))


@pytest.fixture(scope="session")
def gl11_model():
    return builder("GL11")


@pytest.fixture(scope="session")
def gl11(gl11_model):
    return gl11_model.group("GL11")


@pytest.fixture(scope="session")
def gl11_H(gl11_model):
    return gl11_model.subgroup("H", 4)


@pytest.fixture(scope="session")
def std(gl11_model):
    return gl11_model.action("Std")


@pytest.fixture(scope="session")
def c11():
    return builder("translation").group("C11")


@pytest.fixture(scope="session")
def aff():
    return builder("affine").group("Aff")


@pytest.fixture(scope="session")
def gl2():
    return builder("P1").group("GL2")


@pytest.fixture(scope="session")
def broken():
    return builder("broken").group("Broken")


def coords(sig: ChartSignature):
    """Coordinate functions of a chart, by name."""
    return {n: SuperPolynomial.coordinate(sig, n) for n in sig.names}


def shifted(sig: ChartSignature):
    return {n: SuperPolynomial.shifted(sig, n) for n in sig.names}
