"""Reductions of the group and of zero loci modulo ``d``.

Solution sets mod ``d`` are ``(n, 4)`` int64 arrays sorted lexicographically.
Small moduli (``d <= SCAN_LIMIT``) are scanned directly; larger ones are built
prime power by prime power (odd primes by solving for the first coordinate,
higher powers by lifting) and glued with the CRT.  Counts use a separate
route, a convolution of the two binary forms the equation splits into, so
that Hensel's law is checked against an independent enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .enumeration import BallQuery, enumerate_array
from .errors import (
    BadReductionError,
    BudgetExceededError,
    CertificationNeededError,
    InsufficientDataError,
    InvalidModulusError,
    WorkbenchError,
)
from .groups import GroupSpec, Model, ResidueElement, gradient_coords, identity_coords, norm_arrays
from .numtheory import is_prime, prime_power_decomposition, primes_below, sqrt_table, valuation
from .polynomial import RegularFunction

SCAN_LIMIT = 13
DEFAULT_MAX_ELEMENTS = 4_000_000


@dataclass(frozen=True, eq=False)
class ResidueSet:
    spec: GroupSpec
    modulus: int
    coords: np.ndarray

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[ResidueElement]:
        for row in self.coords:
            yield ResidueElement(self.spec, self.modulus, tuple(int(x) for x in row))

    def as_tuples(self) -> set[tuple[int, ...]]:
        return {tuple(int(x) for x in row) for row in self.coords}

    def __contains__(self, item) -> bool:
        c = item.coords if isinstance(item, ResidueElement) else tuple(item)
        c = np.asarray([int(x) % self.modulus for x in c], dtype=np.int64)
        return bool((self.coords == c).all(axis=1).any()) if len(self.coords) else False

    def where_zero(self, f: RegularFunction) -> "ResidueSet":
        keep = f.evaluate_mod(self.coords, self.modulus) == 0
        return ResidueSet(self.spec, self.modulus, self.coords[keep])


def _sorted_unique(arr: np.ndarray) -> np.ndarray:
    if len(arr) == 0:
        return arr.reshape(0, 4)
    arr = np.unique(arr, axis=0)
    return arr[np.lexsort(arr.T[::-1])]


def scan_solutions(spec: GroupSpec, d: int) -> np.ndarray:
    """Every ``x`` in ``(Z/d)^4`` with ``norm(x) = 1``, by exhaustive scan."""
    if d < 1:
        raise InvalidModulusError(f"modulus must be positive, got {d}")
    if d == 1:
        return np.zeros((1, 4), dtype=np.int64)
    r = np.arange(d, dtype=np.int64)
    grid = np.stack(np.meshgrid(r, r, r, r, indexing="ij"), axis=-1).reshape(-1, 4)
    ok = norm_arrays(spec, grid, d) == 1 % d
    return grid[ok]


def _prime_points(spec: GroupSpec, p: int) -> np.ndarray:
    """``G(F_p)`` for a prime ``p`` by solving for one coordinate."""
    if p <= SCAN_LIMIT:
        return scan_solutions(spec, p)
    r = np.arange(p, dtype=np.int64)
    if spec.model is Model.SL2:
        rows = []
        # g11 != 0: g22 = (1 + g12 g21) / g11
        inv = np.array([0] + [pow(int(x), -1, p) for x in range(1, p)], dtype=np.int64)
        for a in range(1, p):
            B, C = np.meshgrid(r, r, indexing="ij")
            B, C = B.ravel(), C.ravel()
            D = ((1 + B * C) % p) * inv[a] % p
            rows.append(np.stack([np.full_like(B, a), B, C, D], axis=1))
        # g11 = 0: g12 g21 = -1, g22 free
        Bv = r[1:]
        Cv = (-inv[Bv]) % p
        Bg, Dg = np.meshgrid(Bv, r, indexing="ij")
        Cg = np.repeat(Cv, p)
        rows.append(np.stack([np.zeros(Bg.size, dtype=np.int64), Bg.ravel(), Cg, Dg.ravel()], axis=1))
        return _sorted_unique(np.concatenate(rows))
    # quaternion model, p odd: x^2 = 1 + a y^2 + b z^2 - ab w^2
    root = sqrt_table(p)
    a, b, ab = spec.a % p, spec.b % p, (spec.a * spec.b) % p
    rows = []
    for y in range(p):
        Z, W = np.meshgrid(r, r, indexing="ij")
        Z, W = Z.ravel(), W.ravel()
        rhs = (1 + a * y * y + b * (Z * Z % p) - ab * (W * W % p)) % p
        x = root[rhs]
        ok = x >= 0
        Z, W, x = Z[ok], W[ok], x[ok]
        Y = np.full_like(Z, y)
        rows.append(np.stack([x, Y, Z, W], axis=1))
        rows.append(np.stack([(p - x) % p, Y, Z, W], axis=1))
    return _sorted_unique(np.concatenate(rows))


def _lift(spec: GroupSpec, sols: np.ndarray, p: int, k: int, chunk: int = 1 << 20) -> np.ndarray:
    """Solutions mod ``p^(k+1)`` above the given solutions mod ``p^k``."""
    pk, pk1 = p**k, p ** (k + 1)
    r = np.arange(p, dtype=np.int64)
    t = np.stack(np.meshgrid(r, r, r, r, indexing="ij"), axis=-1).reshape(-1, 4) * pk
    per = max(1, chunk // len(t))
    out = []
    for i in range(0, len(sols), per):
        block = sols[i : i + per]
        cand = (block[:, None, :] + t[None, :, :]).reshape(-1, 4)
        ok = norm_arrays(spec, cand, pk1) == 1 % pk1
        out.append(cand[ok])
    return np.concatenate(out) if out else np.zeros((0, 4), dtype=np.int64)


@lru_cache(maxsize=64)
def _prime_power_solutions(spec: GroupSpec, p: int, e: int) -> np.ndarray:
    q = p**e
    if q <= SCAN_LIMIT:
        return _sorted_unique(scan_solutions(spec, q))
    sols = _prime_points(spec, p)
    for k in range(1, e):
        sols = _lift(spec, sols, p, k)
    return _sorted_unique(sols)


def crt_combine(A: np.ndarray, m1: int, B: np.ndarray, m2: int) -> np.ndarray:
    """All CRT combinations of rows of ``A`` (mod m1) and ``B`` (mod m2)."""
    if math.gcd(m1, m2) != 1:
        raise WorkbenchError(f"moduli {m1} and {m2} are not coprime")
    m = m1 * m2
    s = pow(m1, -1, m2) if m2 > 1 else 0
    a = np.repeat(A, len(B), axis=0)
    b = np.tile(B, (len(A), 1))
    return (a + ((b - a) % m2) * s % m2 * m1) % m


def count_solutions_mod(spec: GroupSpec, d: int) -> int:
    """``#{x mod d : norm(x) = 1}`` via a convolution of the two binary forms."""
    if d < 1:
        raise InvalidModulusError(f"modulus must be positive, got {d}")
    if d == 1:
        return 1
    r = np.arange(d, dtype=np.int64)
    P, Q = np.meshgrid(r, r, indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    if spec.model is Model.SL2:
        left = (P * Q) % d
        right = (-(P * Q)) % d
    else:
        a, b = spec.a % d, spec.b % d
        left = (P * P % d - a * (Q * Q % d)) % d
        right = (-b * ((P * P % d - a * (Q * Q % d)) % d)) % d
    cl = np.bincount(left, minlength=d)
    cr = np.bincount(right, minlength=d)
    need = (1 - r) % d
    return int(np.dot(cl.astype(object), cr[need].astype(object)))


def solutions_mod(spec: GroupSpec, d: int, max_elements: int = DEFAULT_MAX_ELEMENTS) -> np.ndarray:
    if d < 1:
        raise InvalidModulusError(f"modulus must be positive, got {d}")
    if d <= SCAN_LIMIT:
        return _sorted_unique(scan_solutions(spec, d))
    size = count_solutions_mod(spec, d)
    if size > max_elements:
        raise BudgetExceededError(f"#G(Z/{d}) = {size} exceeds the budget {max_elements}", limiting=d)
    arr, m = np.zeros((1, 4), dtype=np.int64), 1
    for p, e in prime_power_decomposition(d):
        arr = crt_combine(arr, m, _prime_power_solutions(spec, p, e), p**e)
        m *= p**e
    return _sorted_unique(arr)


def reduce_group(spec: GroupSpec, d: int, max_elements: int = DEFAULT_MAX_ELEMENTS) -> ResidueSet:
    """The full solution set of the defining equation modulo ``d``."""
    if d < 1:
        raise InvalidModulusError(f"modulus must be positive, got {d}")
    return ResidueSet(spec, d, solutions_mod(spec, d, max_elements))


# -- images of congruence subgroups ----------------------------------------------

def _valuations(arr: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Entrywise ``p``-adic valuation, capped at ``cap`` (zero maps to ``cap``)."""
    v = np.zeros(arr.shape, dtype=np.int64)
    for k in range(1, cap + 1):
        v += arr % p**k == 0
    return v


@lru_cache(maxsize=64)
def _local_image(spec: GroupSpec, alpha_v: int, p: int, e: int) -> np.ndarray:
    """Image mod ``p^e`` of integral ``p``-adic points congruent to 1 mod ``p^alpha_v``.

    A residue mod ``p^K`` whose gradient has valuation ``delta`` with
    ``2*delta < K`` lifts to a ``p``-adic point agreeing with it mod
    ``p^(K - delta)``; every ``p``-adic point has ``delta <= s`` with ``s`` the
    model's smoothness defect, so ``K = max(e, alpha_v, s + 1) + s`` suffices.
    """
    s = spec.smoothness_defect(p)
    K = max(e, alpha_v, s + 1) + s if s else max(e, alpha_v, 1)
    pK = p**K
    sols = _prime_power_solutions(spec, p, K)
    if alpha_v:
        pa = p**alpha_v
        ident = np.asarray(identity_coords(spec), dtype=np.int64)
        sols = sols[((sols - ident) % pa == 0).all(axis=1)]
    if s:
        grad = np.stack([g % pK for g in gradient_coords(spec, [sols[:, i] for i in range(4)])], axis=1)
        delta = _valuations(grad, p, K).min(axis=1)
        sols = sols[delta <= s]
    return _sorted_unique(sols % (p**e))


def congruence_image(spec: GroupSpec, alpha: int, q: int, max_elements: int = DEFAULT_MAX_ELEMENTS) -> ResidueSet:
    """The reduction mod ``q`` of the principal congruence subgroup of level ``alpha``."""
    if q < 1:
        raise InvalidModulusError(f"modulus must be positive, got {q}")
    arr, m = np.zeros((1, 4), dtype=np.int64), 1
    for p, e in prime_power_decomposition(q):
        local = _local_image(spec, valuation(alpha, p) if alpha % p == 0 else 0, p, e)
        if len(arr) * len(local) > max_elements:
            raise BudgetExceededError(f"image of level-{alpha} subgroup mod {q} exceeds the budget", limiting=q)
        arr = crt_combine(arr, m, local, p**e)
        m *= p**e
    return ResidueSet(spec, q, _sorted_unique(arr))


# -- Hensel ----------------------------------------------------------------------

@dataclass(frozen=True)
class HenselResult:
    p: int
    m: int
    count_p: int
    count_pm: int
    expected: int

    @property
    def holds(self) -> bool:
        return self.count_pm == self.expected


def hensel_check(spec: GroupSpec, p: int, m: int) -> HenselResult:
    if not is_prime(p):
        raise BadReductionError(f"{p} is not prime")
    if m < 1:
        raise WorkbenchError(f"exponent must be >= 1, got {m}")
    if p in spec.bad_primes:
        raise BadReductionError(f"p={p} divides 2ab={2 * spec.a * spec.b}: the model is not smooth there")
    cp = count_solutions_mod(spec, p)
    cpm = count_solutions_mod(spec, p**m)
    return HenselResult(p, m, cp, cpm, cp * p ** (3 * (m - 1)))


def fiber_zero_locus(spec: GroupSpec, f: RegularFunction, d: int, max_elements: int = DEFAULT_MAX_ELEMENTS) -> ResidueSet:
    return reduce_group(spec, d, max_elements).where_zero(f)


# -- the gcd N and local densities --------------------------------------------------

def evaluate_on_points(f: RegularFunction, pts: np.ndarray) -> list[int]:
    return f.evaluate_exact(pts)


@dataclass
class GcdCertificate:
    N: int
    alpha: int
    height_bound: int
    prime_bound: int
    sample_size: int
    divisor_checks: dict[int, bool] = field(default_factory=dict)
    nondivisor_witnesses: dict[int, tuple[int, ...]] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return all(self.divisor_checks.values())

    def to_json(self) -> dict:
        return {
            "N": str(self.N),
            "alpha": self.alpha,
            "height_bound": self.height_bound,
            "prime_bound": self.prime_bound,
            "sample_size": self.sample_size,
            "certified": self.certified,
            "divisor_checks": {str(q): v for q, v in sorted(self.divisor_checks.items())},
            "nondivisor_witnesses": {str(q): list(w) for q, w in sorted(self.nondivisor_witnesses.items())},
        }


def certify_gcd(
    spec: GroupSpec,
    f: RegularFunction,
    alpha: int,
    height_bound: int,
    prime_bound: int,
    workers: int = 1,
) -> GcdCertificate:
    """Empirical ``N = gcd f(Gamma_alpha)`` with a certificate for each side.

    * every ``p^v`` exactly dividing the sample gcd: ``f`` vanishes mod ``p^v``
      on the whole image of ``Gamma_alpha`` (so ``p^v`` divides the true gcd);
    * every prime power ``q <= prime_bound`` coprime to ``N*alpha``: a sample
      point with ``f`` nonzero mod ``q`` is recorded as the witness.
    """
    pts = enumerate_array(BallQuery.congruence_subgroup(spec, height_bound, alpha), workers)
    if len(pts) == 0:
        raise InsufficientDataError(f"no points of level {alpha} below height {height_bound}")
    if len(pts) < 100:
        raise InsufficientDataError(
            f"only {len(pts)} points of level {alpha} below height {height_bound}; need 100"
        )
    vals = evaluate_on_points(f, pts)
    N = 0
    for v in vals:
        N = math.gcd(N, v)
    if N == 0:
        raise InsufficientDataError("f vanishes on every sampled point")
    cert = GcdCertificate(N, alpha, height_bound, prime_bound, len(pts))
    for p, v in prime_power_decomposition(N):
        img = congruence_image(spec, alpha, p**v)
        cert.divisor_checks[p**v] = bool((f.evaluate_mod(img.coords, p**v) == 0).all())
    for p in primes_below(prime_bound + 1):
        if (N * alpha) % p == 0:
            continue
        q = p
        while q <= prime_bound:
            for row, val in zip(pts, vals):
                if val % q:
                    cert.nondivisor_witnesses[q] = tuple(int(x) for x in row)
                    break
            q *= p
    return cert


@dataclass(frozen=True)
class DensityRow:
    d: int
    count_group: int
    count_fiber: int
    rho: Fraction

    def csv_row(self) -> list[str]:
        return [str(self.d), str(self.count_group), str(self.count_fiber), str(self.rho.numerator), str(self.rho.denominator)]


@dataclass
class LocalDensityTable:
    N: int
    alpha: int
    rows: dict[int, DensityRow] = field(default_factory=dict)

    def rho(self, d: int) -> Fraction:
        return self.rows[d].rho


def local_density_row(
    spec: GroupSpec,
    f: RegularFunction,
    alpha: int,
    d: int,
    cert: GcdCertificate,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> DensityRow:
    if not cert.certified:
        raise CertificationNeededError(f"N = {cert.N} is not certified; rerun certify_gcd with more data")
    N = cert.N
    if math.gcd(d, N * alpha) != 1:
        return DensityRow(d, 0, 0, Fraction(0))
    img = congruence_image(spec, alpha, d * N, max_elements)
    zeros = int((f.evaluate_mod(img.coords, d * N) == 0).sum())
    return DensityRow(d, len(img), zeros, Fraction(d * zeros, len(img)))


def local_density(spec, f, alpha, d, cert, max_elements: int = DEFAULT_MAX_ELEMENTS) -> Fraction:
    """``rho_f(d) = d * #Gamma^f[dN] / #Gamma[dN]``; zero when ``gcd(d, N*alpha) > 1``."""
    return local_density_row(spec, f, alpha, d, cert, max_elements).rho


def density_table(spec, f, alpha, cert, ds: Iterable[int], max_elements: int = DEFAULT_MAX_ELEMENTS) -> LocalDensityTable:
    table = LocalDensityTable(cert.N, alpha)
    for d in ds:
        table.rows[d] = local_density_row(spec, f, alpha, d, cert, max_elements)
    return table


# -- Lang-Weil empirics -------------------------------------------------------------

@dataclass(frozen=True)
class LangWeilRow:
    p: int
    count_V: int
    count_G: int

    @property
    def observed_C(self) -> float:
        return self.count_V / self.p**2

    @property
    def ratio_times_p(self) -> Fraction:
        return Fraction(self.p * self.count_V, self.count_G)


@dataclass
class LangWeilReport:
    rows: list[LangWeilRow]

    @property
    def C(self) -> float:
        """Empirical Lang-Weil constant ``max #V(F_p) / p^2``."""
        return max((r.observed_C for r in self.rows), default=0.0)

    @property
    def C_sieve(self) -> Fraction:
        """``max p * #V(F_p) / #G(F_p)``, the bound on ``rho_f(p)`` used for the sieve."""
        return max((r.ratio_times_p for r in self.rows), default=Fraction(0))

    def running_max(self) -> list[float]:
        out, best = [], 0.0
        for r in self.rows:
            best = max(best, r.observed_C)
            out.append(best)
        return out


def langweil_report(spec: GroupSpec, f: RegularFunction, primes: Sequence[int]) -> LangWeilReport:
    rows = []
    for p in primes:
        if p in spec.bad_primes:
            raise BadReductionError(f"p={p} is a prime of bad reduction for {spec}")
        G = reduce_group(spec, p)
        rows.append(LangWeilRow(p, int((f.evaluate_mod(G.coords, p) == 0).sum()), len(G)))
    return LangWeilReport(rows)
