"""Lattice points of bounded height, optionally in a congruence class.

Both defining equations split as ``phi_left(u) + phi_right(v) = 1`` over two
coordinate pairs:

* SL2: ``u = (g11, g22)``, ``v = (g12, g21)``, ``g11*g22 - g12*g21 = 1``
* QUAT: ``u = (x, y)``, ``v = (z, w)``, ``(x^2 - a y^2) - b (z^2 - a w^2) = 1``

so instead of scanning ``(2T-1)^4`` tuples we tabulate ``phi_right`` once,
sort it, and solve for ``v`` by binary search for every ``u``.  Work is
sharded by the leading coordinate (which sits in ``u`` for both models), so
concatenating shard outputs in order yields the canonical lexicographic
stream whatever the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import InsufficientDataError, NotFoundError, PartialResultError, WorkbenchError
from .groups import GroupElement, GroupSpec, Model, ResidueElement, identity_coords, norm_form
from .numtheory import crt

LEFT = (0, 3)
RIGHT_SL2 = (1, 2)
QUAT_LEFT = (0, 1)
QUAT_RIGHT = (2, 3)


@dataclass(frozen=True)
class BallQuery:
    spec: GroupSpec
    T: int
    congruence: tuple[int, tuple[int, int, int, int]] | None = None
    max_elements: int | None = None

    def __post_init__(self):
        if self.T < 1:
            raise WorkbenchError(f"height bound must be >= 1, got {self.T}")
        if self.congruence is not None:
            m, target = self.congruence
            if m < 1:
                raise WorkbenchError(f"congruence modulus must be >= 1, got {m}")
            object.__setattr__(self, "congruence", (int(m), tuple(int(t) % m for t in target)))

    @classmethod
    def congruence_subgroup(cls, spec: GroupSpec, T: int, alpha: int, **kw) -> "BallQuery":
        return cls(spec, T, (alpha, identity_coords(spec)), **kw)


def _pairs(spec: GroupSpec):
    if spec.model is Model.SL2:
        return LEFT, RIGHT_SL2
    return QUAT_LEFT, QUAT_RIGHT


def _phi(spec: GroupSpec, side: str, p, q):
    if spec.model is Model.SL2:
        return p * q if side == "left" else -p * q
    if side == "left":
        return p * p - spec.a * q * q
    return -spec.b * (p * p - spec.a * q * q)


def _axis(T: int, m: int, t: int) -> np.ndarray:
    """Integers ``v`` with ``|v| < T`` and ``v = t mod m``."""
    lo = -T + 1
    start = lo + ((t - lo) % m)
    return np.arange(start, T, m, dtype=np.int64)


@lru_cache(maxsize=4)
def _right_table(spec: GroupSpec, T: int, m: int, target: tuple[int, ...]):
    _, right = _pairs(spec)
    p = _axis(T, m, target[right[0]])
    q = _axis(T, m, target[right[1]])
    P, Q = np.meshgrid(p, q, indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    vals = _phi(spec, "right", P, Q)
    order = np.argsort(vals, kind="stable")
    return vals[order], P[order], Q[order]


def _shard_ranges(axis: np.ndarray, shards: int) -> list[np.ndarray]:
    shards = max(1, min(shards, len(axis))) if len(axis) else 1
    return [a for a in np.array_split(axis, shards)]


def _solve_shard(spec: GroupSpec, T: int, m: int, target: tuple[int, ...], lead: np.ndarray, count_only: bool):
    left, right = _pairs(spec)
    svals, sp, sq = _right_table(spec, T, m, target)
    other = _axis(T, m, target[left[1]])
    if len(lead) == 0 or len(other) == 0 or len(svals) == 0:
        return 0 if count_only else np.zeros((0, 4), dtype=np.int64)
    L0, L1 = np.meshgrid(lead, other, indexing="ij")
    L0, L1 = L0.ravel(), L1.ravel()
    need = 1 - _phi(spec, "left", L0, L1)
    lo = np.searchsorted(svals, need, side="left")
    hi = np.searchsorted(svals, need, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if count_only:
        return total
    if total == 0:
        return np.zeros((0, 4), dtype=np.int64)
    starts = np.repeat(lo, counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    idx = starts + offsets
    out = np.empty((total, 4), dtype=np.int64)
    out[:, left[0]] = np.repeat(L0, counts)
    out[:, left[1]] = np.repeat(L1, counts)
    out[:, right[0]] = sp[idx]
    out[:, right[1]] = sq[idx]
    order = np.lexsort(out.T[::-1])
    return out[order]


def _shard_job(args):
    return _solve_shard(*args)


def _congruence(q: BallQuery):
    if q.congruence is None:
        return 1, (0, 0, 0, 0)
    return q.congruence


def _run_shards(q: BallQuery, count_only: bool, workers: int):
    m, target = _congruence(q)
    left, _ = _pairs(q.spec)
    lead_axis = _axis(q.T, m, target[left[0]])
    shard_count = max(workers, 1) * 4 if workers > 1 else max(1, len(lead_axis) // 64)
    shards = _shard_ranges(lead_axis, shard_count)
    jobs = [(q.spec, q.T, m, target, s, count_only) for s in shards]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            yield from zip(shards, ex.map(_shard_job, jobs))
    else:
        for s, job in zip(shards, jobs):
            yield s, _shard_job(job)


def enumerate_array(q: BallQuery, workers: int = 1) -> np.ndarray:
    """All matching points as a lexicographically sorted ``(n, 4)`` int64 array."""
    parts = []
    total = 0
    done_hi = None
    for shard, arr in _run_shards(q, False, workers):
        total += len(arr)
        if q.max_elements is not None and total > q.max_elements:
            completed = np.concatenate(parts) if parts else np.zeros((0, 4), dtype=np.int64)
            rng = (int(-q.T + 1), done_hi)
            raise PartialResultError(
                f"more than {q.max_elements} elements; completed leading range {rng}", rng, completed
            )
        parts.append(arr)
        if len(shard):
            done_hi = int(shard[-1])
    if not parts:
        return np.zeros((0, 4), dtype=np.int64)
    return np.concatenate(parts)


def enumerate_ball(q: BallQuery, workers: int = 1) -> Iterator[GroupElement]:
    for row in enumerate_array(q, workers):
        yield GroupElement(q.spec, tuple(int(x) for x in row))


def count_ball(q: BallQuery, workers: int = 1) -> int:
    if q.congruence is not None and q.congruence[0] > 1:
        return len(enumerate_array(q, workers))
    return sum(int(c) for _, c in _run_shards(q, True, workers))


def naive_ball(spec: GroupSpec, T: int, congruence=None) -> np.ndarray:
    """Plain four-fold scan over the box; the oracle for :func:`enumerate_array`."""
    r = np.arange(-T + 1, T, dtype=np.int64)
    B, C, D = np.meshgrid(r, r, r, indexing="ij")
    B, C, D = B.ravel(), C.ravel(), D.ravel()
    rows = []
    for x in r:
        A = np.full_like(B, x)
        ok = norm_form(spec, (A, B, C, D)) == 1
        if congruence is not None:
            m, t = congruence
            for i, c in enumerate((A, B, C, D)):
                ok &= (c - t[i]) % m == 0
        rows.append(np.stack([A[ok], B[ok], C[ok], D[ok]], axis=1))
    out = np.concatenate(rows) if rows else np.zeros((0, 4), dtype=np.int64)
    return out[np.lexsort(out.T[::-1])]


# -- growth law --------------------------------------------------------------

@dataclass
class GrowthReport:
    samples: list[tuple[int, int]]
    a: float
    b: float
    a_rational: Fraction
    b_rational: Fraction
    log_constant: float
    residuals: list[float]
    rms_residual: float
    a_without_log: float
    model: str = ""

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "samples": [{"T": t, "count": c} for t, c in self.samples],
            "a": self.a,
            "b": self.b,
            "a_rational": str(self.a_rational),
            "b_rational": str(self.b_rational),
            "log_constant": self.log_constant,
            "residuals": self.residuals,
            "rms_residual": self.rms_residual,
            "a_without_log_term": self.a_without_log,
        }


def fit_counts(T_list: Sequence[int], counts: Sequence[int], model: str = "") -> GrowthReport:
    """Least squares of ``log count`` on ``1, log T, log log T``."""
    if len(T_list) < 4:
        raise InsufficientDataError("need at least 4 heights")
    if any(t2 <= t1 for t1, t2 in zip(T_list, T_list[1:])):
        raise InsufficientDataError("heights must be increasing")
    if any(c <= 0 for c in counts):
        raise InsufficientDataError(f"zero counts in range: {list(zip(T_list, counts))}")
    if any(t <= math.e for t in T_list):
        raise InsufficientDataError("heights must exceed e so that log log T is defined")
    lt = np.log(np.asarray(T_list, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    A = np.stack([np.ones_like(lt), lt, np.log(lt)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    a0 = np.linalg.lstsq(A[:, :2], y, rcond=None)[0][1]
    return GrowthReport(
        samples=list(zip(map(int, T_list), map(int, counts))),
        a=float(coef[1]),
        b=float(coef[2]),
        a_rational=Fraction(float(coef[1])).limit_denominator(12),
        b_rational=Fraction(float(coef[2])).limit_denominator(12),
        log_constant=float(coef[0]),
        residuals=[float(r) for r in res],
        rms_residual=float(np.sqrt(np.mean(res**2))),
        a_without_log=float(a0),
        model=model,
    )


def fit_growth(spec: GroupSpec, T_list: Sequence[int], workers: int = 1) -> GrowthReport:
    counts = [count_ball(BallQuery(spec, int(T)), workers) for T in T_list]
    return fit_counts(T_list, counts, model=str(spec))


# -- congruent points ----------------------------------------------------------

def combine_targets(spec: GroupSpec, targets: Sequence[tuple[int, ResidueElement]]):
    """CRT-merge ``[(modulus, residue), ...]`` into one ``(m, coords)`` target."""
    if not targets:
        return 1, (0, 0, 0, 0)
    moduli = [int(m) for m, _ in targets]
    for i, mi in enumerate(moduli):
        for mj in moduli[i + 1 :]:
            if math.gcd(mi, mj) != 1:
                raise WorkbenchError(f"target moduli {mi} and {mj} are not coprime")
    for m, r in targets:
        if r.modulus != m:
            raise WorkbenchError(f"residue modulus {r.modulus} does not match {m}")
        if not r.spec.same_group(spec):
            raise WorkbenchError("target residue belongs to another group")
    coords = []
    for i in range(4):
        c, m = crt([r.coords[i] for _, r in targets], moduli)
        coords.append(c)
    return m, tuple(coords)


def height_key(row) -> tuple:
    return (max(abs(int(x)) for x in row), tuple(int(x) for x in row))


def first_by_height(arr: np.ndarray) -> np.ndarray | None:
    if len(arr) == 0:
        return None
    h = np.abs(arr).max(axis=1)
    keys = np.column_stack([h, arr])
    return arr[np.lexsort(keys.T[::-1])[0]]


def height_schedule(T_max: int, start: int = 2) -> list[int]:
    out, T = [], start
    while T < T_max:
        out.append(T)
        T *= 2
    out.append(T_max)
    return out


def find_congruent_point(
    spec: GroupSpec,
    targets: Sequence[tuple[int, ResidueElement]],
    T_max: int,
    workers: int = 1,
) -> GroupElement:
    """Least-height point matching every target residue (ties: lexicographic).

    With no targets the identity is returned.
    """
    if not targets:
        return GroupElement.identity(spec)
    m, target = combine_targets(spec, targets)
    for T in height_schedule(T_max):
        arr = enumerate_array(BallQuery(spec, T, (m, target)), workers)
        best = first_by_height(arr)
        if best is not None:
            return GroupElement(spec, tuple(int(x) for x in best))
    raise NotFoundError(f"no point matching the targets below height {T_max}", frontier=T_max)
