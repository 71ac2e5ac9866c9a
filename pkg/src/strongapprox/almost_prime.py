"""Saturation scans: group points whose f-value has only large prime factors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from typing import Iterable, Sequence

import numpy as np

from .enumeration import BallQuery, enumerate_array, height_schedule
from .errors import FactorizationError, InsufficientDataError, NotFoundError, PipelineViolationError
from .groups import GroupElement, GroupSpec, identity_coords
from .numtheory import Factorization, factorize, prime_factors, primes_below
from .polynomial import RegularFunction
from .sieve import PrimeSet, SieveProblem, sift


@dataclass(frozen=True)
class SaturationQuery:
    spec: GroupSpec
    f: RegularFunction
    alpha: int = 1
    S: frozenset[int] = frozenset()
    beta: Fraction = Fraction(1, 2)
    T: int = 64
    M: int = 1
    N: int = 1
    multiplier: int = 1

    def __post_init__(self):
        object.__setattr__(self, "S", frozenset(int(p) for p in self.S))
        object.__setattr__(self, "beta", Fraction(self.beta))
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.N < 1 or self.alpha < 1:
            raise ValueError("N and alpha must be positive")

    def excluded_primes(self) -> frozenset[int]:
        """S together with the primes of alpha*N; these never count as factors."""
        extra = prime_factors(self.alpha * self.N) if self.alpha * self.N > 1 else []
        return self.S | frozenset(extra)

    def admitted(self) -> PrimeSet:
        return PrimeSet.all_primes(self.excluded_primes())

    def level(self) -> float:
        return float(self.T) ** float(self.beta)


@dataclass
class AlmostPrimeHit:
    g: GroupElement
    value: int
    factorization: Factorization
    counted: list[int]

    @property
    def count(self) -> int:
        """Prime factors outside the excluded set, with multiplicity."""
        return sum(self.factorization.factors[p] for p in self.counted)

    def to_json(self) -> dict:
        return {
            "g": self.g.to_json(),
            "height": self.g.height,
            "value": str(self.value),
            "factors": self.factorization.to_json(),
            "counted": [str(p) for p in self.counted],
            "count": self.count,
        }


def make_hit(g: GroupElement, value: int, excluded: Iterable[int], seed: int = 0) -> AlmostPrimeHit:
    if value == 0:
        raise FactorizationError(f"f vanishes at {g}")
    try:
        fz = factorize(value, seed=seed)
    except FactorizationError as exc:
        raise FactorizationError(f"could not factor f({g}) = {value}: {exc}") from exc
    ex = set(excluded)
    return AlmostPrimeHit(g, value, fz, [p for p in fz.primes() if p not in ex])


def recheck_hit(hit: AlmostPrimeHit, f: RegularFunction, M: int, r: int, excluded: Iterable[int],
                constraints: Sequence[tuple[int, set]] = (), alpha: int = 1) -> list[str]:
    """Independent recheck of a hit; returns the list of violated properties."""
    problems = []
    coords = hit.g.coords
    if f(coords) != hit.value:
        problems.append("value")
    if hit.factorization.product() != abs(hit.value):
        problems.append("product")
    ex = set(excluded)
    counted = [p for p in hit.factorization.primes() if p not in ex]
    if counted != hit.counted:
        problems.append("counted primes")
    if any(p <= M for p in counted):
        problems.append("factor size")
    if sum(hit.factorization.factors[p] for p in counted) > r:
        problems.append("factor count")
    ident = identity_coords(hit.g.spec)
    if any((c - t) % alpha for c, t in zip(coords, ident)):
        problems.append("level")
    for m, allowed in constraints:
        if tuple(c % m for c in coords) not in allowed:
            problems.append(f"residue mod {m}")
    return problems


def report_r_formula(theta_fit: float, beta) -> int:
    """``floor(theta/beta) + 1``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return math.floor(Fraction(theta_fit) / Fraction(beta)) + 1


def measure_theta(spec: GroupSpec, f: RegularFunction, alpha: int, T: int, min_height: int = 2,
                  workers: int = 1) -> float:
    """``max log|f(g)| / log H(g)`` over enumerated ``g`` with ``min_height <= H(g) < T``."""
    pts = enumerate_array(BallQuery.congruence_subgroup(spec, T, alpha), workers)
    best = -math.inf
    for row, v in zip(pts, f.evaluate_exact(pts)):
        h = int(np.abs(row).max())
        if h < max(min_height, 2) or v == 0:
            continue
        best = max(best, math.log(abs(v)) / math.log(h))
    if best == -math.inf:
        raise InsufficientDataError(f"no points with nonzero value and height in [{min_height}, {T})")
    return best


# -- scans ---------------------------------------------------------------------------

@dataclass
class ScanResult:
    T: int
    count: int
    X: int
    zero_points: int
    hits: list[AlmostPrimeHit] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "count": self.count,
            "X": self.X,
            "zero_points": self.zero_points,
            "hits": [h.to_json() for h in self.hits],
        }


@dataclass
class TrendTable:
    rows: list[ScanResult]
    lam: float
    trend: list[float]

    def to_json(self) -> dict:
        return {
            "lambda_fit": self.lam,
            "rows": [
                {"T": r.T, "count": r.count, "X": r.X, "zero_points": r.zero_points, "trend": t}
                for r, t in zip(self.rows, self.trend)
            ],
        }


def _values(q: SaturationQuery, workers: int):
    pts = enumerate_array(BallQuery.congruence_subgroup(q.spec, q.T, q.alpha), workers)
    vals = [q.multiplier * v for v in q.f.evaluate_exact(pts)]
    return pts, vals


def induced_sequence(q: SaturationQuery, workers: int = 1) -> tuple[list[int], int]:
    """``A = {|f(g)|/N}`` over the ball, plus the number of excluded zeros."""
    _, vals = _values(q, workers)
    A = []
    zeros = 0
    for v in vals:
        if v == 0:
            zeros += 1
            continue
        if v % q.N:
            raise PipelineViolationError(f"N = {q.N} does not divide the value {v}")
        A.append(abs(v) // q.N)
    return A, zeros


def induced_problem(q: SaturationQuery, workers: int = 1) -> SieveProblem:
    A, _ = induced_sequence(q, workers)
    return SieveProblem(tuple(A), q.admitted(), {}, q.level())


def saturation_scan(q: SaturationQuery, workers: int = 1, sample: int = 10, seed: int = 0) -> ScanResult:
    """Count points of ``Gamma_alpha`` below height ``T`` whose reduced value is free of
    admitted primes below ``T^beta``."""
    pts, vals = _values(q, workers)
    Pz = math.prod(q.admitted().below(q.level()))
    ex = q.excluded_primes()
    count = 0
    zeros = 0
    X = 0
    hits = []
    order = sorted(range(len(pts)), key=lambda i: (int(np.abs(pts[i]).max()), tuple(int(x) for x in pts[i])))
    for i in order:
        v = vals[i]
        if v == 0:
            zeros += 1
            continue
        X += 1
        if v % q.N:
            raise PipelineViolationError(f"N = {q.N} does not divide the value {v}")
        if math.gcd(abs(v) // q.N, Pz) == 1:
            count += 1
            if len(hits) < sample:
                g = GroupElement(q.spec, tuple(int(x) for x in pts[i]))
                hits.append(make_hit(g, v, ex, seed))
    return ScanResult(q.T, count, X, zeros, hits)


def fit_lambda(rows: Sequence[ScanResult]) -> float:
    """Least-squares ``lambda`` in ``count ~ C X / (log X)^lambda``."""
    pts = [(math.log(math.log(r.X)), math.log(r.count / r.X)) for r in rows if r.count > 0 and r.X > 2]
    if len(pts) < 2:
        raise InsufficientDataError("need two grid points with positive counts")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(-coef[1])


def trend_table(q: SaturationQuery, T_grid: Sequence[int], workers: int = 1, sample: int = 0) -> TrendTable:
    rows = [saturation_scan(_with_T(q, T), workers, sample) for T in T_grid]
    lam = fit_lambda(rows)
    trend = [r.count * math.log(r.X) ** lam / r.X if r.X > 1 else 0.0 for r in rows]
    return TrendTable(rows, lam, trend)


def _with_T(q: SaturationQuery, T: int) -> SaturationQuery:
    return SaturationQuery(q.spec, q.f, q.alpha, q.S, q.beta, T, q.M, q.N, q.multiplier)


# -- locating a single point ------------------------------------------------------------

def _constraint_targets(spec: GroupSpec, alpha: int, constraints: Sequence[tuple[int, set]]):
    """Congruence targets covering ``Gamma_alpha`` intersected with the residue constraints.

    Constraint moduli coprime to ``alpha`` are merged by CRT; the others are
    applied as filters after enumeration.
    """
    from .numtheory import crt

    ident = identity_coords(spec)
    merged = [(alpha, [tuple(c % alpha for c in ident)])] if alpha > 1 else []
    filters = []
    for m, allowed in constraints:
        if math.gcd(m, alpha) == 1 and all(math.gcd(m, mm) == 1 for mm, _ in merged):
            merged.append((m, sorted(allowed)))
        else:
            filters.append((m, set(allowed)))
    targets = []
    for combo in cartesian(*[res for _, res in merged]):
        coords = []
        mod = 1
        for i in range(4):
            c, mod = crt([r[i] for r in combo], [m for m, _ in merged])
            coords.append(c)
        targets.append((mod, tuple(coords)))
    return targets, filters


def candidate_points(spec: GroupSpec, alpha: int, constraints: Sequence[tuple[int, set]], T_max: int,
                     workers: int = 1):
    """Yield constrained points of ``Gamma_alpha`` in increasing ``(height, lex)`` order."""
    targets, filters = _constraint_targets(spec, alpha, constraints)
    done = 0
    for T in height_schedule(T_max):
        parts = [enumerate_array(BallQuery(spec, T, t), workers) for t in targets]
        arr = np.concatenate(parts) if parts else np.zeros((0, 4), dtype=np.int64)
        h = np.abs(arr).max(axis=1) if len(arr) else np.zeros(0, dtype=np.int64)
        keep = h >= done
        for m, allowed in filters:
            red = arr % m
            keep &= np.array([tuple(int(x) for x in row) in allowed for row in red], dtype=bool)
        arr, h = arr[keep], h[keep]
        order = np.lexsort(np.column_stack([h, arr]).T[::-1])
        for row in arr[order]:
            yield GroupElement(spec, tuple(int(x) for x in row))
        done = T


def find_almost_prime_point(
    q: SaturationQuery,
    constraints: Sequence[tuple[int, set]] = (),
    r: int = 2,
    T_max: int | None = None,
    workers: int = 1,
    seed: int = 0,
    points: Iterable[GroupElement] | None = None,
    min_count: int = 0,
) -> AlmostPrimeHit:
    """First point by ``(height, lex)`` whose f-value is nonzero, with at most ``r`` prime
    factors outside the excluded set, all of them larger than ``M``.

    ``min_count`` can demand at least that many counted factors, which skips
    values that are units away from the excluded primes.
    """
    T_max = T_max or q.T
    ex = q.excluded_primes()
    small = math.prod(p for p in primes_below(min(q.M, 10**5) + 1) if p not in ex)
    source = points if points is not None else candidate_points(q.spec, q.alpha, constraints, T_max, workers)
    for g in source:
        v = q.multiplier * q.f(g.coords)
        if v == 0 or math.gcd(v, small) != 1:
            continue
        hit = make_hit(g, v, ex, seed)
        if min_count <= hit.count <= r and all(p > q.M for p in hit.counted):
            return hit
    raise NotFoundError(f"no almost-prime point below height {T_max}", frontier=T_max)


def normalization_multiplier(f: RegularFunction, S: Iterable[int]) -> int:
    """Smallest S-unit multiplier making ``f`` integral; coefficients are integers here, so 1."""
    return 1
