"""Brun-type combinatorial sieve: data model, exact sifting, condition checks.

The implied constant of the lower bound is never synthesised.  What the
sieve reports is the exact sifting count next to the main product
``X * prod(1 - omega(p)/p)`` and their ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import SieveInputError
from .numtheory import is_prime, prime_factors, primes_below


@dataclass(frozen=True)
class PrimeSet:
    """A set of admitted primes: either a finite list or all primes minus an exclusion list."""

    admitted: frozenset[int] | None = None
    excluded: frozenset[int] = frozenset()

    def __contains__(self, p: int) -> bool:
        if p in self.excluded:
            return False
        if self.admitted is not None:
            return p in self.admitted
        return is_prime(p)

    def below(self, z: float) -> list[int]:
        if self.admitted is not None:
            return sorted(p for p in self.admitted if p < z and p not in self.excluded)
        return [p for p in primes_below(z) if p not in self.excluded]

    @classmethod
    def all_primes(cls, excluded: Iterable[int] = ()) -> "PrimeSet":
        return cls(None, frozenset(excluded))

    @classmethod
    def only(cls, primes: Iterable[int]) -> "PrimeSet":
        return cls(frozenset(primes))


@dataclass(frozen=True)
class SieveProblem:
    A: tuple[int, ...]
    P: PrimeSet
    omega: Mapping[int, Fraction]
    z: float
    label: str = ""

    def __post_init__(self):
        A = tuple(int(a) for a in self.A)
        if any(a == 0 for a in A):
            raise SieveInputError("the sifted sequence may not contain 0")
        object.__setattr__(self, "A", tuple(abs(a) for a in A))
        om = {int(p): Fraction(w) for p, w in self.omega.items()}
        for p, w in om.items():
            if w < 0 or w >= p:
                raise SieveInputError(f"omega({p}) = {w} violates 0 <= omega(p)/p < 1")
        object.__setattr__(self, "omega", om)

    @property
    def X(self) -> int:
        return len(self.A)

    def sieving_primes(self) -> list[int]:
        return self.P.below(self.z)

    def omega_at(self, p: int) -> Fraction:
        return self.omega.get(p, Fraction(0)) if p in self.P else Fraction(0)

    def omega_of(self, d: int) -> Fraction:
        out = Fraction(1)
        for p in prime_factors(d) if d > 1 else []:
            out *= self.omega_at(p)
        return out

    def primorial(self) -> int:
        return math.prod(self.sieving_primes())


def sift(problem: SieveProblem) -> int:
    """``#{a in A : gcd(a, P(z)) = 1}``."""
    Pz = problem.primorial()
    return sum(1 for a in problem.A if math.gcd(a, Pz) == 1)


def inclusion_exclusion(problem: SieveProblem) -> int:
    """``sum over d | P(z) of mu(d) #A_d``, the textbook evaluation of the sifting function."""
    ps = problem.sieving_primes()
    total = 0
    for k in range(len(ps) + 1):
        for combo in combinations(ps, k):
            d = math.prod(combo)
            total += (-1) ** k * sum(1 for a in problem.A if a % d == 0)
    return total


# -- remainders ---------------------------------------------------------------

@dataclass(frozen=True)
class RemainderRecord:
    d: int
    count: int
    main_term: Fraction
    weight: int

    @property
    def remainder(self) -> Fraction:
        return self.count - self.main_term


@dataclass
class RemainderReport:
    records: list[RemainderRecord]
    weighted_sum: Fraction


def _squarefree_supported(problem: SieveProblem, d_max: float) -> list[int]:
    """Squarefree ``d < d_max`` (and ``<=`` when integral) built from admitted primes."""
    ps = problem.P.below(d_max + 1)
    out = [1]
    for p in ps:
        out += [d * p for d in out if d * p <= d_max]
    return sorted(out)


def remainders(problem: SieveProblem, d_max: float) -> RemainderReport:
    if d_max < 2:
        raise SieveInputError("d_max must be at least 2")
    X = problem.X
    records = []
    total = Fraction(0)
    for d in _squarefree_supported(problem, d_max):
        count = sum(1 for a in problem.A if a % d == 0)
        nu = len(prime_factors(d)) if d > 1 else 0
        rec = RemainderRecord(d, count, problem.omega_of(d) * X / d, 3**nu)
        records.append(rec)
        total += rec.weight * abs(rec.remainder)
    return RemainderReport(records, total)


# -- the three hypotheses ---------------------------------------------------------

@dataclass
class SieveParams:
    c: float | None = None
    kappa: float | None = None
    A0: float | None = None
    tau: float = 1.0
    A1: float = 1.0
    A2: float | None = None


@dataclass
class SieveConditionReport:
    c: float
    kappa: float
    A0: float
    A0_required: float
    tau: float
    A1: float
    A2: float
    A2_required: float
    level: float
    passed: dict[str, bool] = field(default_factory=dict)
    witnesses: dict[str, object] = field(default_factory=dict)
    violations: dict[str, list] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "c": self.c,
            "kappa": self.kappa,
            "A0": self.A0,
            "A0_required": self.A0_required,
            "tau": self.tau,
            "A1": self.A1,
            "A2": self.A2,
            "A2_required": self.A2_required,
            "level": self.level,
            "passed": self.passed,
            "witnesses": {k: str(v) for k, v in self.witnesses.items()},
            "violations": {k: [str(x) for x in v] for k, v in self.violations.items()},
        }


def _condition2_pairs(problem: SieveProblem, kappa: float):
    """Largest ``sum_{z1<=p<z2} omega(p) log p / p - kappa log(z2/z1)`` over the prime grid."""
    ps = problem.sieving_primes()
    grid = sorted(set([2.0] + [float(p) for p in ps] + [float(problem.z)]))
    grid = [g for g in grid if 2 <= g <= problem.z]
    terms = {p: float(problem.omega_at(p)) * math.log(p) / p for p in ps}
    worst, arg = -math.inf, None
    for i, z1 in enumerate(grid):
        acc = 0.0
        for z2 in grid[i:]:
            # the sum runs over z1 <= p < z2
            val = acc - kappa * math.log(z2 / z1)
            if val > worst:
                worst, arg = val, (z1, z2)
            if z2 in terms:
                acc += terms[z2]
    return worst, arg


def check_conditions(problem: SieveProblem, params: SieveParams | None = None) -> SieveConditionReport:
    """Evaluate the three sieve hypotheses literally on the stored data.

    Constants left as ``None`` are fitted: ``c`` halfway between the largest
    ``omega(p)/p`` and 1, ``kappa`` as the largest ``omega(p)``, ``A0`` just
    above the supremum the data require (and above 1), ``A2`` as the value the
    remainder sum requires.
    """
    params = params or SieveParams()
    ps = problem.sieving_primes()
    ratios = {p: problem.omega_at(p) / p for p in ps}
    top = max(ratios.values(), default=Fraction(0))
    c = params.c if params.c is not None else float(top + (1 - top) / 2)
    kappa = params.kappa if params.kappa is not None else max(1.0, float(max((problem.omega_at(p) for p in ps), default=1)))

    rep_violations: dict[str, list] = {"1": [], "2": [], "3": []}
    rep_violations["1"] = [p for p, r in ratios.items() if not (0 <= r < c)]

    worst, arg = _condition2_pairs(problem, kappa)
    A0_required = max(worst, 0.0)
    A0 = params.A0 if params.A0 is not None else max(A0_required, 1.0) * (1 + 1e-9) + 1e-9
    if worst > A0 + 1e-12 or A0 <= 1:
        rep_violations["2"] = [arg]

    X = problem.X
    logX = math.log(X) if X > 1 else 0.0
    level = X**params.tau * logX ** (-params.A1) if logX > 0 else 0.0
    rem = remainders(problem, max(level, 2)) if level >= 2 else RemainderReport([], Fraction(0))
    weighted = sum(
        (r.weight * abs(r.remainder) for r in rem.records if r.d < level), Fraction(0)
    )
    scale = X / logX ** (kappa + 1) if logX > 0 else 0.0
    A2_required = float(weighted) / scale if scale else math.inf
    A2 = params.A2 if params.A2 is not None else max(A2_required, 2.0)
    if float(weighted) > A2 * scale or A2 < 2 or not (0 < params.tau <= 1) or params.A1 < 1:
        rep_violations["3"] = [float(weighted)]

    passed = {k: not v for k, v in rep_violations.items()}
    if not 0 < c < 1:
        passed["1"] = False
    return SieveConditionReport(
        c=c,
        kappa=kappa,
        A0=A0,
        A0_required=A0_required,
        tau=params.tau,
        A1=params.A1,
        A2=A2,
        A2_required=A2_required,
        level=level,
        passed=passed,
        witnesses={"1": max(ratios, key=ratios.get) if ratios else None, "2": arg, "3": weighted},
        violations=rep_violations,
    )


def c_from_langweil(problem: SieveProblem, C: float) -> float:
    """Condition (1) constant from an empirical Lang-Weil constant.

    Primes ``p <= C`` use their observed ratio; larger primes are bounded by
    ``C/p``.  The result sits halfway between that bound and 1.
    """
    worst = Fraction(0)
    for p in problem.sieving_primes():
        r = problem.omega_at(p) / p
        worst = max(worst, r)
    bound = float(worst)
    ps_above = [p for p in problem.sieving_primes() if p > C]
    if ps_above:
        bound = max(bound, C / ps_above[0])
    return bound + (1 - bound) / 2


# -- lower bound -------------------------------------------------------------------

@dataclass
class LowerBoundReport:
    S: int
    product: float
    ratio: float
    level_ok: bool | None
    flagged: bool

    def to_json(self) -> dict:
        return {"S": self.S, "product": self.product, "ratio": self.ratio, "level_ok": self.level_ok, "flagged": self.flagged}


def main_product(problem: SieveProblem) -> float:
    out = float(problem.X)
    for p in problem.sieving_primes():
        out *= 1 - float(problem.omega_at(p)) / p
    return out


def lower_bound_report(problem: SieveProblem, tau: float | None = None, A1: float | None = None) -> LowerBoundReport:
    S = sift(problem)
    prod = main_product(problem)
    ratio = S / prod if prod > 0 else math.inf
    level_ok = None
    if tau is not None and A1 is not None and problem.X > 1:
        logX = math.log(problem.X)
        level_ok = problem.z**2 <= problem.X**tau * logX ** (-A1)
    return LowerBoundReport(S, prod, ratio, level_ok, flagged=(S == 0 or prod == 0))


def uniform_omega(primes: Sequence[int], value: int = 1) -> dict[int, Fraction]:
    return {p: Fraction(value) for p in primes}
