import random

import numpy as np
import pytest

from siren.crypto.primes import is_probable_prime, nearest_prime

LIMIT = 10**6


def sieve(n: int) -> np.ndarray:
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, int(n**0.5) + 1):
        if is_p[i]:
            is_p[i * i::i] = False
    return is_p


@pytest.fixture(scope="module")
def prime_table():
    return sieve(LIMIT + 200)


def brute_nearest(v: int, table: np.ndarray) -> int:
    if v <= 2:
        return 2
    d = 0
    while True:
        if table[v + d]:
            return v + d  # larger side wins ties
        if table[v - d]:
            return v - d
        d += 1


def test_examples():
    assert nearest_prime(20) == 19
    assert nearest_prime(21) == 23
    assert nearest_prime(2) == 2
    assert nearest_prime(0) == 2 and nearest_prime(1) == 2
    assert nearest_prime(7300) == 7297


def test_negative_rejected():
    with pytest.raises(ValueError):
        nearest_prime(-1)


def test_is_probable_prime_matches_sieve(prime_table):
    for n in range(0, 200_000):
        assert is_probable_prime(n) == bool(prime_table[n]), n


@pytest.mark.parametrize("n", [561, 1105, 1729, 2465, 2821, 6601, 8911, 3215031751, 3825123056546413051,
                               318665857834031151167461])
def test_pseudoprimes_rejected(n):
    assert not is_probable_prime(n)


@pytest.mark.parametrize("p", [2**61 - 1, 2**89 - 1, 2**127 - 1, 1_000_000_007, 998_244_353,
                               2**107 - 1])
def test_large_primes(p):
    assert is_probable_prime(p)
    assert is_probable_prime(p, rng=random.Random(0))


def test_large_composites():
    assert not is_probable_prime((2**61 - 1) * (2**31 - 1))
    assert not is_probable_prime(2**128 + 1)


@pytest.mark.slow
def test_nearest_prime_all_v_up_to_1e6(prime_table):
    is_p = prime_table
    n = len(is_p)
    idx = np.arange(n)
    prev = np.where(is_p, idx, -1)
    prev = np.maximum.accumulate(prev)
    nxt = np.where(is_p, idx, n + 10**9)
    nxt = np.minimum.accumulate(nxt[::-1])[::-1]
    v = np.arange(3, LIMIT + 1)
    expected = np.where(nxt[v] - v <= v - prev[v], nxt[v], prev[v])
    for value, exp in zip(v.tolist(), expected.tolist()):
        assert nearest_prime(value) == exp, value
    assert all(nearest_prime(x) == 2 for x in range(3))
    for x in (3, 20, 21, 7300, 999_983, 1_000_000):
        assert brute_nearest(x, prime_table) == nearest_prime(x)
