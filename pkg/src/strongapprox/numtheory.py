"""Elementary number theory: primes, factorization, CRT, square roots mod p.

Factorization is trial division up to ``TRIAL_LIMIT`` followed by a
Miller-Rabin test and Brent's variant of Pollard rho.  The Miller-Rabin bases
used are a proof of primality below ``MR_DETERMINISTIC_BOUND``; above it the
test is probabilistic and :func:`factorize` reports that in its certificate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd, isqrt, prod

import numpy as np

from .errors import FactorizationError

TRIAL_LIMIT = 10**6
MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
MR_DETERMINISTIC_BOUND = 3_317_044_064_679_887_385_961_981


@lru_cache(maxsize=8)
def _sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit, dtype=bool)
    flags[:2] = False
    for p in range(2, isqrt(limit - 1) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags)


def primes_below(n: float) -> list[int]:
    """All primes ``p < n``."""
    n = math.ceil(n)
    if n <= 2:
        return []
    limit = 1 << max(10, (n - 1).bit_length())
    ps = _sieve(limit)
    return [int(p) for p in ps[: np.searchsorted(ps, n)]]


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_prime(n: int) -> bool:
    """Deterministic below ``MR_DETERMINISTIC_BOUND``."""
    return is_probable_prime(n)


def _brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g


@dataclass
class Factorization:
    n: int
    factors: dict[int, int] = field(default_factory=dict)
    proven: bool = True

    def primes(self) -> list[int]:
        return sorted(self.factors)

    def product(self) -> int:
        return prod(p**e for p, e in self.factors.items())

    def to_json(self) -> list[dict]:
        return [{"p": str(p), "e": e} for p, e in sorted(self.factors.items())]


def factorize(n: int, seed: int = 0, max_rho_iterations: int = 64) -> Factorization:
    """Factor ``|n|`` completely; ``n = 0`` is rejected."""
    n = abs(int(n))
    if n == 0:
        raise FactorizationError("cannot factor 0")
    out: dict[int, int] = {}
    m = n
    for p in primes_below(min(TRIAL_LIMIT, isqrt(m) + 2)):
        if p * p > m:
            break
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
    proven = True
    rng = random.Random(seed)
    stack = [m] if m > 1 else []
    splits = 0
    while stack:
        q = stack.pop()
        if q < TRIAL_LIMIT * TRIAL_LIMIT or is_probable_prime(q):
            if q >= TRIAL_LIMIT * TRIAL_LIMIT and q >= MR_DETERMINISTIC_BOUND:
                proven = False
            out[q] = out.get(q, 0) + 1
            continue
        r = isqrt(q)
        if r * r == q:
            stack.extend([r, r])
            continue
        splits += 1
        if splits > max_rho_iterations * 64:
            raise FactorizationError(f"Pollard rho budget exhausted on {q}")
        d = _brent(q, rng)
        stack.extend([d, q // d])
    fz = Factorization(n, dict(sorted(out.items())), proven)
    if fz.product() != n or not all(is_prime(p) for p in fz.factors):
        raise FactorizationError(f"factorization of {n} failed its recheck")
    return fz


def prime_factors(n: int) -> list[int]:
    return factorize(n).primes()


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """``(g, s, t)`` with ``a*s + b*t = g = gcd(a, b) >= 0``."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        return -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    g, s, _ = egcd(m1, m2)
    if g != 1:
        raise ValueError(f"moduli {m1} and {m2} are not coprime")
    m = m1 * m2
    return (r1 + (r2 - r1) * s % m2 * m1) % m, m


def crt(residues, moduli) -> tuple[int, int]:
    r, m = 0, 1
    for ri, mi in zip(residues, moduli):
        r, m = crt_pair(r, m, ri, mi)
    return r, m


def prime_power_decomposition(n: int) -> list[tuple[int, int]]:
    """``[(p, e), ...]`` for ``n >= 1``."""
    return sorted(factorize(n).factors.items()) if n > 1 else []


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in prime_power_decomposition(n))


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def mobius(n: int) -> int:
    fz = prime_power_decomposition(n)
    if any(e > 1 for _, e in fz):
        return 0
    return -1 if len(fz) % 2 else 1


def sqrt_table(p: int) -> np.ndarray:
    """``root[v]`` is some square root of ``v`` mod ``p`` or ``-1``."""
    root = np.full(p, -1, dtype=np.int64)
    xs = np.arange(p, dtype=np.int64)
    root[(xs * xs) % p] = xs
    return root
