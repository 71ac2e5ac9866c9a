"""Pell tori, their orders mod p, bad places and orbit selection avoiding a subset."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadReductionError,
    CertificationNeededError,
    InvalidTorusError,
    PigeonholeViolationError,
    PipelineViolationError,
)
from .finite import solutions_mod
from .groups import GroupElement, GroupSpec, Model, identity_coords, mul_arrays
from .numtheory import factorize, is_prime, is_square, legendre, prime_factors, primes_below
from .polynomial import MAX_INT64_MODULUS, RegularFunction


def pell_fundamental(d: int) -> tuple[int, int]:
    """Least solution ``u^2 - d v^2 = 1`` with ``v >= 1``, via the continued fraction of ``sqrt d``."""
    if d < 2 or is_square(d):
        raise InvalidTorusError(f"Pell equation needs a nonsquare d >= 2, got {d}")
    a0 = math.isqrt(d)
    m, den, a = 0, 1, a0
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    while h * h - d * k * k != 1:
        m = den * a - m
        den = (d - m * m) // den
        a = (a0 + m) // den
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    return h, k


def pell_scan(d: int, v_max: int = 10**6) -> tuple[int, int] | None:
    """Oracle: scan ``v = 1, 2, ...`` for ``1 + d v^2`` a perfect square."""
    for v in range(1, v_max + 1):
        t = 1 + d * v * v
        u = math.isqrt(t)
        if u * u == t:
            return u, v
    return None


# -- the torus ------------------------------------------------------------------

def _pair_mul(x, y, d: int, m: int | None = None):
    u = x[0] * y[0] + d * x[1] * y[1]
    v = x[0] * y[1] + x[1] * y[0]
    if m is not None:
        return u % m, v % m
    return u, v


def pair_pow(x, k: int, d: int, m: int | None = None):
    out = (1, 0)
    base = x
    while k:
        if k & 1:
            out = _pair_mul(out, base, d, m)
        base = _pair_mul(base, base, d, m)
        k >>= 1
    return out


@dataclass(frozen=True)
class TorusSpec:
    """The norm-one torus of ``Q(sqrt d)`` sitting inside the group as ``u + v*i``.

    ``Q = (u, v)`` is the fundamental Pell unit raised to ``power``.
    """

    spec: GroupSpec
    d: int
    u: int
    v: int
    power: int = 1

    def __post_init__(self):
        if self.spec.model is not Model.QUAT:
            raise InvalidTorusError("the Pell torus is only modelled inside a quaternion group")
        if self.d != self.spec.a:
            raise InvalidTorusError(f"torus parameter {self.d} must equal a = {self.spec.a}")
        if self.u * self.u - self.d * self.v * self.v != 1:
            raise InvalidTorusError(f"({self.u}, {self.v}) is not a norm-one unit for d = {self.d}")
        if self.v == 0:
            raise InvalidTorusError("Q = +-1 has finite order")

    @classmethod
    def fundamental(cls, spec: GroupSpec, d: int | None = None, modulus: int = 1) -> "TorusSpec":
        """Smallest power of the fundamental unit that is the identity mod ``modulus``."""
        d = spec.a if d is None else d
        u0, v0 = pell_fundamental(d)
        k, cur = 1, (u0, v0)
        while (cur[0] - 1) % modulus or cur[1] % modulus:
            k += 1
            cur = _pair_mul(cur, (u0, v0), d)
            if k > 4 * modulus**2 + 8:
                raise InvalidTorusError(f"no power of the Pell unit is trivial mod {modulus}")
        return cls(spec, d, cur[0], cur[1], k)

    @property
    def Q(self) -> GroupElement:
        return GroupElement(self.spec, (self.u, self.v, 0, 0))

    def Q_pow(self, l: int) -> GroupElement:
        u, v = pair_pow((self.u, self.v), l, self.d)
        return GroupElement(self.spec, (u, v, 0, 0))

    def bad_primes(self) -> frozenset[int]:
        return frozenset(prime_factors(2 * abs(self.d)))

    def to_json(self) -> dict:
        return {"d": self.d, "u": str(self.u), "v": str(self.v), "power": self.power}


def _check_good(ts: TorusSpec, p: int) -> None:
    if not is_prime(p):
        raise BadReductionError(f"{p} is not prime")
    if (2 * ts.d) % p == 0:
        raise BadReductionError(f"the torus has bad reduction at {p}")


def _divisors(n: int) -> list[int]:
    out = [1]
    for p, e in factorize(n).factors.items():
        out = [x * p**k for x in out for k in range(e + 1)]
    return sorted(out)


def torus_order_mod(ts: TorusSpec, p: int) -> int:
    """Order of ``Q mod p``; the torus group has ``p - (d/p)`` elements, so test its divisors."""
    _check_good(ts, p)
    n = p - legendre(ts.d, p)
    x = (ts.u % p, ts.v % p)
    for k in _divisors(n):
        if pair_pow(x, k, ts.d, p) == (1, 0):
            return k
    raise PipelineViolationError(f"order of Q mod {p} does not divide {n}")


def torus_order_bruteforce(ts: TorusSpec, p: int) -> int:
    """Oracle: multiply until the identity reappears."""
    _check_good(ts, p)
    x = (ts.u % p, ts.v % p)
    cur, k = x, 1
    while cur != (1, 0):
        cur = _pair_mul(cur, x, ts.d, p)
        k += 1
        if k > 2 * p + 2:
            raise PipelineViolationError(f"no finite order found mod {p}")
    return k


@dataclass
class ThresholdReport:
    M: int
    L: int
    small_order_primes: dict[int, int]
    prime_bound: int

    def to_json(self) -> dict:
        return {
            "M": str(self.M),
            "orbit_size": self.L,
            "small_order_primes": {str(p): o for p, o in sorted(self.small_order_primes.items())},
            "prime_bound": self.prime_bound,
        }


def threshold_M(ts: TorusSpec, r: int, N_fiber: int, prime_bound: int = 1000) -> ThresholdReport:
    """Least ``M`` such that every good prime above ``M`` gives ``Q`` order ``> r*N_fiber + 1``.

    A prime of order ``j`` divides ``gcd(u_j - 1, v_j)`` where ``Q^j = u_j + v_j i``;
    collecting those primes for ``j <= r*N_fiber + 1`` gives the finite exceptional
    set.  The exhaustive scan up to ``prime_bound`` cross-checks it.
    """
    if r < 0 or N_fiber < 0 or prime_bound < 2:
        raise ValueError("bounds must be positive")
    L = r * N_fiber + 1
    bad = ts.bad_primes()
    exceptional: dict[int, int] = {}
    for j in range(1, L + 1):
        u, v = pair_pow((ts.u, ts.v), j, ts.d)
        g = math.gcd(u - 1, v)
        if g == 0:
            raise PipelineViolationError("Q has finite order")
        for p in prime_factors(g) if g > 1 else []:
            if p not in bad:
                exceptional.setdefault(p, torus_order_mod(ts, p))
    exceptional = {p: o for p, o in exceptional.items() if o <= L}
    scanned = {p: o for p in primes_below(prime_bound + 1) if p not in bad and (o := torus_order_mod(ts, p)) <= L}
    missing = {p for p in scanned if p not in exceptional}
    if missing:
        raise CertificationNeededError(f"primes {sorted(missing)} of small order escaped the gcd criterion")
    M = max(exceptional, default=1)
    return ThresholdReport(M, L, exceptional, prime_bound)


# -- bad places ---------------------------------------------------------------------

def bad_places(factors: Iterable[int], S: Iterable[int], alphaN: int, M: int) -> list[int]:
    """Prime factors outside ``S`` and ``alpha*N``; each must exceed ``M``."""
    S = set(S)
    out = sorted({int(p) for p in factors if p not in S and alphaN % p != 0})
    low = [p for p in out if p <= M]
    if low:
        raise PipelineViolationError(f"bad places {low} do not exceed M = {M}")
    return out


# -- torus points mod p and fibres ----------------------------------------------------

def _powmod_array(x: np.ndarray, e: int, p: int) -> np.ndarray:
    out = np.ones_like(x)
    base = x % p
    while e:
        if e & 1:
            out = out * base % p
        base = base * base % p
        e >>= 1
    return out


def torus_points_mod(d: int, p: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Points ``(x, y)`` of ``x^2 - d y^2 = 1`` over ``F_p`` from slopes ``s`` in ``[start, stop)``.

    Each point other than ``(-1, 0)`` lies on exactly one line of slope ``s``
    through ``(-1, 0)``; that point is emitted with ``start == 0``.
    """
    if p > MAX_INT64_MODULUS:
        raise BadReductionError(f"{p} is too large for vectorised arithmetic")
    stop = p if stop is None else min(stop, p)
    s = np.arange(start, stop, dtype=np.int64)
    den = (1 - (d % p) * (s * s % p)) % p
    ok = den != 0
    s, den = s[ok], den[ok]
    inv = _powmod_array(den, p - 2, p)
    x = (1 + (d % p) * (s * s % p)) % p * inv % p
    y = 2 * s % p * inv % p
    pts = np.stack([x, y], axis=1)
    if start == 0:
        pts = np.concatenate([np.array([[(p - 1) % p, 0]], dtype=np.int64), pts])
    return pts


def _embed(spec: GroupSpec, tp: np.ndarray) -> np.ndarray:
    z = np.zeros(len(tp), dtype=np.int64)
    return np.stack([tp[:, 0], tp[:, 1], z, z], axis=1)


def _vanish(gens: Sequence[RegularFunction], arr: np.ndarray, p: int) -> np.ndarray:
    ok = np.ones(len(arr), dtype=bool)
    for g in gens:
        ok &= g.evaluate_mod(arr, p) == 0
    return ok


def fibre_points(spec: GroupSpec, d: int, gens: Sequence[RegularFunction], g: Sequence[int], p: int,
                 chunk: int = 1 << 18) -> list[tuple[int, int]]:
    """Torus points ``t`` mod ``p`` with ``t * g`` in the subset cut out by ``gens``."""
    base = np.array([[int(c) % p for c in g]], dtype=np.int64)
    out = []
    for lo in range(0, p, chunk):
        tp = torus_points_mod(d, p, lo, lo + chunk)
        prod = mul_arrays(spec, _embed(spec, tp), np.repeat(base, len(tp), axis=0), p)
        hit = _vanish(gens, prod, p)
        out += [tuple(int(x) for x in row) for row in tp[hit]]
    return sorted(out)


def fibre_count(spec: GroupSpec, d: int, gens: Sequence[RegularFunction], g: Sequence[int], p: int) -> int:
    return len(fibre_points(spec, d, gens, g, p))


def fibre_degree_max(spec: GroupSpec, d: int, gens: Sequence[RegularFunction], p: int) -> int:
    """Largest number of subset points in one torus coset, over all subset points mod ``p``."""
    pts = solutions_mod(spec, p)
    Dp = pts[_vanish(gens, pts, p)]
    if len(Dp) == 0:
        return 0
    tp = torus_points_mod(d, p)
    T = _embed(spec, tp)
    best = 0
    for g in Dp:
        prod = mul_arrays(spec, T, np.repeat(g[None, :], len(T), axis=0), p)
        best = max(best, int(_vanish(gens, prod, p).sum()))
    return best


# -- selection along the orbit ------------------------------------------------------

@dataclass
class AvoidanceState:
    torus: TorusSpec
    P_prime: GroupElement
    S0: list[int]
    N_fiber: int
    r0: int

    @property
    def L(self) -> int:
        return self.r0 * self.N_fiber + 1

    def theta(self) -> list[GroupElement]:
        out = [self.P_prime]
        Q = self.torus.Q
        for _ in range(self.L - 1):
            out.append(Q * out[-1])
        return out

    def to_json(self) -> dict:
        return {
            "group": self.torus.spec.to_json(),
            "torus": self.torus.to_json(),
            "P_prime": self.P_prime.to_json(),
            "S0": [str(p) for p in self.S0],
            "N_fiber": self.N_fiber,
            "r0": self.r0,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AvoidanceState":
        spec = GroupSpec.from_json(obj["group"])
        t = obj["torus"]
        ts = TorusSpec(spec, int(t["d"]), int(t["u"]), int(t["v"]), int(t.get("power", 1)))
        P = GroupElement(spec, tuple(int(c) for c in obj["P_prime"]))
        return cls(ts, P, [int(p) for p in obj["S0"]], int(obj["N_fiber"]), int(obj["r0"]))


@dataclass
class PrimeTranscript:
    p: int
    order: int
    orbit_distinct: int
    fibre_count: int
    bad_l: list[int]

    def to_json(self) -> dict:
        return {
            "p": str(self.p),
            "order": self.order,
            "orbit_distinct": self.orbit_distinct,
            "fibre_count": self.fibre_count,
            "bad_l": self.bad_l,
        }


@dataclass
class PigeonholeTranscript:
    L: int
    primes: list[PrimeTranscript] = field(default_factory=list)

    @property
    def product(self) -> int:
        return math.prod(t.fibre_count for t in self.primes)

    @property
    def product_ok(self) -> bool:
        return self.L > self.product

    @property
    def union_bound(self) -> int:
        return sum(t.fibre_count for t in self.primes)

    @property
    def union_ok(self) -> bool:
        return self.L > self.union_bound

    def to_json(self) -> dict:
        return {
            "orbit_size": self.L,
            "primes": [t.to_json() for t in self.primes],
            "product": self.product,
            "product_ok": self.product_ok,
            "union_bound": self.union_bound,
            "union_ok": self.union_ok,
        }


@dataclass
class Selection:
    l: int
    P_dprime: GroupElement
    transcript: PigeonholeTranscript


def pigeonhole_transcript(state: AvoidanceState, gens: Sequence[RegularFunction]) -> PigeonholeTranscript:
    spec = state.torus.spec
    theta = state.theta()
    tr = PigeonholeTranscript(state.L)
    for p in state.S0:
        order = torus_order_mod(state.torus, p)
        if order <= state.L:
            raise PipelineViolationError(f"Q has order {order} <= {state.L} mod {p}")
        red = np.array([[c % p for c in g.coords] for g in theta], dtype=np.int64)
        distinct = len({tuple(r) for r in red.tolist()})
        bad = np.flatnonzero(_vanish(gens, red, p)).tolist()
        cnt = fibre_count(spec, state.torus.d, gens, state.P_prime.coords, p)
        tr.primes.append(PrimeTranscript(p, order, distinct, cnt, bad))
    return tr


def select_avoiding(state: AvoidanceState, gens: Sequence[RegularFunction]) -> Selection:
    """First ``Q^l P'`` whose reduction at every bad place lies outside the subset."""
    tr = pigeonhole_transcript(state, gens)
    theta = state.theta()
    bad = set()
    for t in tr.primes:
        bad.update(t.bad_l)
    for l, g in enumerate(theta):
        if l not in bad:
            return Selection(l, g, tr)
    raise PigeonholeViolationError(
        "every orbit element meets the subset at some bad place",
        dump={"transcript": tr.to_json(), "orbit": [g.to_json() for g in theta]},
    )
