import functools

import pytest

from trajectoid import corpus
from trajectoid.solver import compute_bounds, solve


@functools.lru_cache(maxsize=None)
def corpus_path(name):
    return {p.name: p for p in corpus.corpus()}[name]


CORPUS_NAMES = ("sine", "zigzag", "meander", "random-7")


@functools.lru_cache(maxsize=None)
def bounds_for(name):
    return compute_bounds(corpus_path(name))


@functools.lru_cache(maxsize=None)
def solved(name, n):
    return solve(corpus_path(name), n, bounds_for(name))


@pytest.fixture(scope="session")
def sine():
    return corpus_path("sine")


@pytest.fixture(scope="session")
def sine_n3():
    return solved("sine", 3)
