"""End-to-end pipeline: window base point, almost-prime translate, orbit avoidance, certificate.

A run is a pure function of its config.  The certificate embeds the config,
so :func:`verify_certificate` can rebuild every claim without other input.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import almost_prime as ap
from .errors import (
    ConfigRejectedError,
    NotFoundError,
    NotInGroupError,
    PigeonholeViolationError,
    PipelineViolationError,
    WorkbenchError,
)
from .finite import certify_gcd, solutions_mod
from .groups import (
    GroupElement,
    GroupSpec,
    Model,
    conj_coords,
    division_certificate,
    identity_coords,
    mul_arrays,
    mul_coords,
    norm_form,
)
from .numtheory import factorize, is_prime, prime_factors, primes_below
from .polynomial import RegularFunction, variables
from .torus import (
    AvoidanceState,
    TorusSpec,
    fibre_degree_max,
    pigeonhole_transcript,
    select_avoiding,
    threshold_M,
)

DEFAULT_VERIFY_BOUND = 10**4

DEFAULT_SIEVE = {
    "beta": "1",
    "theta_height": 256,
    "theta_min_height": 16,
    "gcd_height": 64,
    "gcd_prime_bound": 50,
    "min_bad_places": 0,
}

DEFAULT_BUDGETS = {
    "height_max": 1024,
    "retries": 1,
    "retry_factor": 2,
    "threshold_prime_bound": 1000,
    "check_prime_bound": 50,
    "translation_max": 60,
    "seed": 0,
}


# -- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class SubsetSpec:
    generators: tuple[RegularFunction, ...]
    codim: int = 2
    n_fiber: int | None = None

    def __post_init__(self):
        if self.codim != 2:
            raise ConfigRejectedError(f"the removed subset must have codimension 2, got {self.codim}")

    def contains_mod(self, arr: np.ndarray, p: int) -> np.ndarray:
        ok = np.ones(len(arr), dtype=bool)
        for g in self.generators:
            ok &= g.evaluate_mod(arr, p) == 0
        return ok

    def values(self, coords: Sequence[int]) -> list[int]:
        return [g(coords) for g in self.generators]

    def bezout(self) -> int:
        return math.prod(max(g.degree, 1) for g in self.generators)

    def to_json(self) -> dict:
        return {
            "generators": [g.to_json() for g in self.generators],
            "codim": self.codim,
            "n_fiber": self.n_fiber,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubsetSpec":
        gens = tuple(RegularFunction.from_json(g) for g in obj["generators"])
        nf = obj.get("n_fiber")
        return cls(gens, int(obj.get("codim", 2)), None if nf is None else int(nf))


@dataclass(frozen=True)
class AdelicWindow:
    """Allowed residues at finitely many prime powers plus the excluded prime set ``S``."""

    moduli: tuple[tuple[int, frozenset[tuple[int, ...]]], ...]
    S: frozenset[int]

    def __post_init__(self):
        ms = [m for m, _ in self.moduli]
        for i, mi in enumerate(ms):
            if mi < 2:
                raise ConfigRejectedError(f"window modulus {mi} must be at least 2")
            if len(prime_factors(mi)) != 1:
                raise ConfigRejectedError(f"window modulus {mi} is not a prime power")
            for mj in ms[i + 1 :]:
                if math.gcd(mi, mj) != 1:
                    raise ConfigRejectedError(f"window moduli {mi} and {mj} are not coprime")
        for m, res in self.moduli:
            if not res:
                raise ConfigRejectedError(f"empty residue set mod {m}")

    @property
    def alpha(self) -> int:
        return math.prod(m for m, _ in self.moduli)

    def constraints(self) -> list[tuple[int, set]]:
        return [(m, set(r)) for m, r in self.moduli]

    def contains(self, coords: Sequence[int]) -> bool:
        return all(tuple(int(c) % m for c in coords) in res for m, res in self.moduli)

    def to_json(self) -> dict:
        return {
            "moduli": [{"modulus": m, "residues": [list(r) for r in sorted(res)]} for m, res in self.moduli],
            "S": sorted(self.S),
        }

    @classmethod
    def from_json(cls, obj: dict | None) -> "AdelicWindow":
        obj = obj or {}
        mods = []
        for entry in obj.get("moduli", []):
            m = int(entry["modulus"])
            res = frozenset(tuple(int(c) % m for c in r) for r in entry["residues"])
            mods.append((m, res))
        return cls(tuple(mods), frozenset(int(p) for p in obj.get("S", [])))


@dataclass
class SolverConfig:
    raw: dict
    spec: GroupSpec
    subset: SubsetSpec
    window: AdelicWindow
    F: RegularFunction | None
    torus_d: int | None
    sieve: dict
    budgets: dict
    verify_bound: int

    @property
    def S(self) -> frozenset[int]:
        """Configured S together with the primes of bad reduction of the group."""
        return self.window.S | self.spec.bad_primes

    @property
    def beta(self) -> Fraction:
        return Fraction(str(self.sieve["beta"]))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()


def load_config(raw: dict, verify_bound: int | None = None) -> SolverConfig:
    try:
        spec = GroupSpec.from_json(raw["group"])
        subset = SubsetSpec.from_json(raw["subset"])
    except KeyError as exc:
        raise ConfigRejectedError(f"config is missing {exc}") from exc
    window = AdelicWindow.from_json(raw.get("window"))
    for m, res in window.moduli:
        for r in res:
            if (norm_form(spec, r) - 1) % m:
                raise ConfigRejectedError(f"window residue {r} mod {m} is not in the group")
    F = raw.get("separating_function")
    torus = raw.get("torus")
    sieve = {**DEFAULT_SIEVE, **raw.get("sieve", {})}
    budgets = {**DEFAULT_BUDGETS, **raw.get("budgets", {})}
    vb = verify_bound if verify_bound is not None else int(raw.get("verify_bound", DEFAULT_VERIFY_BOUND))
    return SolverConfig(
        raw=raw,
        spec=spec,
        subset=subset,
        window=window,
        F=RegularFunction.from_json(F) if F is not None else None,
        torus_d=int(torus["d"]) if torus else None,
        sieve=sieve,
        budgets=budgets,
        verify_bound=vb,
    )


# -- config validation -----------------------------------------------------------

def check_window_against_subset(cfg: SolverConfig) -> dict:
    """Reject a window place outside ``S`` whose residues all lie in the subset."""
    out = {}
    for m, res in cfg.window.moduli:
        p = prime_factors(m)[0]
        arr = np.array(sorted(res), dtype=np.int64)
        inside = bool(cfg.subset.contains_mod(arr, m).all())
        out[str(m)] = {"all_residues_in_subset": inside, "prime_in_S": p in cfg.S}
        if inside and p not in cfg.S:
            raise ConfigRejectedError(
                f"every allowed residue mod {m} lies in the removed subset and {p} is not in S"
            )
    return out


def quotient_arrays(spec: GroupSpec, arr: np.ndarray, p: int) -> np.ndarray:
    conj = np.stack(conj_coords(spec, [arr[:, i] for i in range(4)]), axis=1) % p
    i = np.zeros_like(arr)
    i[:, 1] = 1
    return mul_arrays(spec, mul_arrays(spec, conj, i, p), arr, p)


def symbolic_quotient(spec: GroupSpec) -> list[RegularFunction]:
    g = variables()
    i = (0, 1, 0, 0)
    return list(mul_coords(spec, mul_coords(spec, conj_coords(spec, g), i), g))


def build_f(spec: GroupSpec, F: RegularFunction, P: GroupElement) -> RegularFunction:
    """``g -> F(pi(g * P))`` as an explicit polynomial in the coordinates of ``g``."""
    gP = list(mul_coords(spec, variables(), P.coords))
    pi = [c.substitute(gP) for c in symbolic_quotient(spec)]
    return F.substitute(pi).renamed("f")


@dataclass
class SubsetReport:
    primes: list[int]
    vanishing: dict[int, bool] = field(default_factory=dict)
    F_nonzero: dict[int, bool] = field(default_factory=dict)
    fibre_max: dict[int, int] = field(default_factory=dict)
    subset_points: dict[int, int] = field(default_factory=dict)
    n_fiber: int = 0

    def to_json(self) -> dict:
        return {
            "primes": self.primes,
            "pi_of_subset_in_zero_locus": {str(p): v for p, v in self.vanishing.items()},
            "F_not_identically_zero": {str(p): v for p, v in self.F_nonzero.items()},
            "fibre_max": {str(p): v for p, v in self.fibre_max.items()},
            "subset_points": {str(p): v for p, v in self.subset_points.items()},
            "n_fiber": self.n_fiber,
        }


def validate_subset(cfg: SolverConfig) -> SubsetReport:
    """Exhaustive checks at good primes up to ``check_prime_bound``.

    * every subset point maps under the quotient into ``F = 0``;
    * ``F`` is not identically zero on the quotient image;
    * no torus coset holds more than ``N_fiber`` subset points;
    * the subset has at most ``C p`` points, as a curve should.
    """
    spec, F, subset = cfg.spec, cfg.F, cfg.subset
    bound = int(cfg.budgets["check_prime_bound"])
    primes = [p for p in primes_below(bound + 1) if p not in spec.bad_primes and (2 * cfg.torus_d) % p]
    n_fiber = subset.n_fiber if subset.n_fiber is not None else subset.bezout()
    rep = SubsetReport(primes, n_fiber=n_fiber)
    for p in primes:
        pts = solutions_mod(spec, p)
        inD = subset.contains_mod(pts, p)
        Dp = pts[inD]
        rep.subset_points[p] = int(len(Dp))
        rep.vanishing[p] = bool((F.evaluate_mod(quotient_arrays(spec, Dp, p), p) == 0).all()) if len(Dp) else True
        rep.F_nonzero[p] = bool((F.evaluate_mod(quotient_arrays(spec, pts, p), p) != 0).any())
        rep.fibre_max[p] = fibre_degree_max(spec, cfg.torus_d, subset.generators, p)
    bad = [p for p in primes if not rep.vanishing[p]]
    if bad:
        raise ConfigRejectedError(f"the subset does not map into F = 0 mod {bad}")
    if not any(rep.F_nonzero.values()):
        raise ConfigRejectedError("F vanishes identically on the quotient at every checked prime")
    over = {p: v for p, v in rep.fibre_max.items() if v > n_fiber}
    if over:
        raise ConfigRejectedError(f"fibre counts {over} exceed N_fiber = {n_fiber}")
    big = [p for p in primes if rep.subset_points[p] > 4 * subset.bezout() * (p + 1)]
    if big:
        raise ConfigRejectedError(f"the subset is too large for a curve mod {big}")
    return rep


# -- certificate -------------------------------------------------------------------------

@dataclass
class Certificate:
    data: dict

    def to_json(self) -> dict:
        return self.data

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Certificate":
        return cls(json.loads(text))

    @property
    def ok(self) -> bool:
        return all(v is not False for v in self.data["checks"].values())


def separability_flag(F: RegularFunction) -> dict:
    """Separability of f is not checked; a linear F makes it immediate, anything else is flagged."""
    linear = F.degree == 1
    return {"checked": False, "F_degree": F.degree, "immediate": linear,
            "note": "F is linear in the quotient coordinates" if linear else "separability of f is assumed"}


def _el(spec: GroupSpec, coords) -> GroupElement:
    return GroupElement(spec, tuple(int(c) for c in coords))


def _strs(coords) -> list[str]:
    return [str(int(c)) for c in coords]


def _with_retries(cfg: SolverConfig, stage: str, fn):
    T = int(cfg.budgets["height_max"])
    last = None
    for _ in range(int(cfg.budgets["retries"]) + 1):
        try:
            return fn(T)
        except NotFoundError as exc:
            last = exc
            T *= int(cfg.budgets["retry_factor"])
    raise NotFoundError(f"stage '{stage}' found nothing below height {last.frontier}: {last}", frontier=last.frontier)


def base_point(cfg: SolverConfig, workers: int = 1) -> GroupElement:
    """Least ``(height, lex)`` point in the window; the identity for an empty window."""
    if not cfg.window.moduli:
        return GroupElement.identity(cfg.spec)

    def run(T):
        for g in ap.candidate_points(cfg.spec, 1, cfg.window.constraints(), T, workers):
            return g
        raise NotFoundError(f"no window point below height {T}", frontier=T)

    return _with_retries(cfg, "base point", run)


def avoidance_checks(cfg: SolverConfig, P2: GroupElement, S0: Sequence[int]) -> dict:
    """Checks (b) and (c): the final point stays off the subset at bad places and at every
    prime up to the verification bound outside ``S``."""
    vals = cfg.subset.values(P2.coords)
    b = all(any(v % p for v in vals) for p in S0)
    failures = []
    for p in primes_below(cfg.verify_bound + 1):
        if p in cfg.S:
            continue
        if all(v % p == 0 for v in vals):
            failures.append(p)
    g = 0
    for v in vals:
        g = math.gcd(g, v)
    smooth = g != 0 and all(p in cfg.S for p in (prime_factors(g) if g > 1 else []))
    return {"b": bool(b), "c": not failures and smooth, "c_failures": failures, "generator_gcd": str(g)}


def solve(raw: dict, workers: int = 1, verify_bound: int | None = None) -> Certificate:
    cfg = load_config(raw, verify_bound)
    if cfg.spec.model is Model.SL2:
        return solve_isotropic(raw, workers, verify_bound)
    spec = cfg.spec
    if cfg.F is None or cfg.torus_d is None:
        raise ConfigRejectedError("the anisotropic pipeline needs a torus and a separating function")
    div = division_certificate(spec.a, spec.b)
    if not div.is_division:
        raise ConfigRejectedError(f"B({spec.a},{spec.b}) is split")
    window_report = check_window_against_subset(cfg)
    subset_report = validate_subset(cfg)
    alpha = cfg.window.alpha
    torus = TorusSpec.fundamental(spec, cfg.torus_d, alpha)

    P = base_point(cfg, workers)
    f = build_f(spec, cfg.F, P)
    gcd_cert = certify_gcd(spec, f, alpha, int(cfg.sieve["gcd_height"]), int(cfg.sieve["gcd_prime_bound"]), workers)
    if not gcd_cert.certified:
        raise PipelineViolationError(f"gcd N = {gcd_cert.N} failed certification")
    N = gcd_cert.N
    theta = ap.measure_theta(spec, f, alpha, int(cfg.sieve["theta_height"]), int(cfg.sieve["theta_min_height"]), workers)
    r0 = ap.report_r_formula(theta, cfg.beta)
    n_fiber = subset_report.n_fiber
    th = threshold_M(torus, r0, n_fiber, int(cfg.budgets["threshold_prime_bound"]))
    query = ap.SaturationQuery(spec, f, alpha, cfg.S, cfg.beta, int(cfg.budgets["height_max"]), th.M, N)

    def run(T):
        return ap.find_almost_prime_point(
            query, (), r0, T, workers, int(cfg.budgets["seed"]), min_count=int(cfg.sieve["min_bad_places"])
        )

    hit = _with_retries(cfg, "almost-prime point", run)
    g = hit.g
    P1 = g * P
    S0 = sorted(hit.counted)
    if any(p <= th.M for p in S0):
        raise PipelineViolationError(f"bad places {S0} do not all exceed M = {th.M}")
    state = AvoidanceState(torus, P1, S0, n_fiber, r0)
    sel = select_avoiding(state, cfg.subset.generators)
    P2 = sel.P_dprime
    tr = sel.transcript
    checks_bc = avoidance_checks(cfg, P2, S0)
    d_ok = all(t.orbit_distinct == state.L for t in tr.primes) and tr.product_ok
    data = {
        "config_hash": config_hash(raw),
        "config": raw,
        "P": _strs(P.coords),
        "g": _strs(g.coords),
        "P_prime": _strs(P1.coords),
        "P_dprime": _strs(P2.coords),
        "f_value": str(hit.value),
        "factors": hit.factorization.to_json(),
        "S0": [str(p) for p in S0],
        "l": sel.l,
        "checks": {
            "a": cfg.window.contains(P2.coords),
            "b": checks_bc["b"],
            "c": checks_bc["c"],
            "d": d_ok,
        },
        "trail": {
            "f": f.to_json(),
            "F": cfg.F.to_json(),
            "quotient": "conj(h) * i * h with h = g * P",
            "separability": separability_flag(cfg.F),
            "division": div.to_json(),
            "window": window_report,
            "subset": subset_report.to_json(),
            "N": gcd_cert.to_json(),
            "theta_fit": repr(theta),
            "beta": str(cfg.beta),
            "r0": r0,
            "torus": torus.to_json(),
            "threshold": th.to_json(),
            "pigeonhole": tr.to_json(),
            "S": sorted(cfg.S),
            "verify_bound": cfg.verify_bound,
            "generator_gcd": checks_bc["generator_gcd"],
        },
    }
    return Certificate(data)


def _unipotents(t: int, s: int) -> tuple[GroupElement, GroupElement]:
    spec = GroupSpec.sl2()
    return GroupElement(spec, (1, t, 0, 1)), GroupElement(spec, (1, 0, s, 1))


def _translation_schedule(step: int, bound: int):
    """``(t, s)`` multiples of ``step`` ordered by ``max(|t|, |s|)`` then lexicographically."""
    ks = range(-bound, bound + 1)
    pairs = [(i * step, j * step) for i in ks for j in ks]
    pairs.sort(key=lambda ts: (max(abs(ts[0]), abs(ts[1])), ts))
    return pairs


def solve_isotropic(raw: dict, workers: int = 1, verify_bound: int | None = None) -> Certificate:
    """Split case: translate the window base point by unipotents until the generator
    values at the result have only S-primes in common."""
    cfg = load_config(raw, verify_bound)
    if cfg.spec.model is not Model.SL2:
        raise ConfigRejectedError("the unipotent demonstrator needs the split group")
    window_report = check_window_against_subset(cfg)
    P = base_point(cfg, workers)
    alpha = cfg.window.alpha
    chosen = None
    for t, s in _translation_schedule(alpha, int(cfg.budgets["translation_max"])):
        u, lo = _unipotents(t, s)
        cand = u * P * lo
        vals = cfg.subset.values(cand.coords)
        gv = 0
        for v in vals:
            gv = math.gcd(gv, v)
        if gv != 0 and all(p in cfg.S for p in (prime_factors(gv) if gv > 1 else [])):
            chosen = (t, s, cand)
            break
    if chosen is None:
        raise NotFoundError("stage 'translation' exhausted its budget", frontier=int(cfg.budgets["translation_max"]))
    t, s, P2 = chosen
    checks_bc = avoidance_checks(cfg, P2, [])
    data = {
        "config_hash": config_hash(raw),
        "config": raw,
        "P": _strs(P.coords),
        "g": None,
        "P_prime": _strs(P.coords),
        "P_dprime": _strs(P2.coords),
        "f_value": None,
        "factors": [],
        "S0": [],
        "l": None,
        "translation": {"t": str(t), "s": str(s)},
        "checks": {"a": cfg.window.contains(P2.coords), "b": checks_bc["b"], "c": checks_bc["c"], "d": None},
        "trail": {
            "window": window_report,
            "S": sorted(cfg.S),
            "verify_bound": cfg.verify_bound,
            "generator_gcd": checks_bc["generator_gcd"],
        },
    }
    return Certificate(data)


# -- verification ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    ok: bool
    checks: dict[str, bool | None]
    problems: list[str]

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": self.checks, "problems": self.problems}


def verify_certificate(cert: Certificate | dict, workers: int = 1, verify_bound: int | None = None) -> VerificationReport:
    """Recompute every claim of a certificate from its embedded config.

    ``verify_bound`` overrides the bound recorded in the certificate.
    """
    data = cert.data if isinstance(cert, Certificate) else cert
    problems: list[str] = []
    checks: dict[str, bool | None] = {"a": False, "b": False, "c": False, "d": False}
    try:
        return _verify(data, problems, checks, workers, verify_bound)
    except (WorkbenchError, KeyError, ValueError, TypeError) as exc:
        problems.append(f"{type(exc).__name__}: {exc}")
        return VerificationReport(False, checks, problems)


def _verify(data: dict, problems: list[str], checks: dict, workers: int, verify_bound: int | None) -> VerificationReport:
    raw = data["config"]
    if config_hash(raw) != data["config_hash"]:
        problems.append("config hash mismatch")
    if verify_bound is None:
        verify_bound = int(data.get("trail", {}).get("verify_bound", DEFAULT_VERIFY_BOUND))
    cfg = load_config(raw, verify_bound)
    spec = cfg.spec
    points = {}
    for key in ("P", "P_prime", "P_dprime"):
        try:
            points[key] = _el(spec, data[key])
        except NotInGroupError as exc:
            problems.append(f"{key}: {exc}")
    if len(points) < 3:
        return VerificationReport(False, checks, problems)
    P, P1, P2 = points["P"], points["P_prime"], points["P_dprime"]
    if not cfg.window.contains(P.coords):
        problems.append("P is not in the window")
    checks["a"] = cfg.window.contains(P2.coords)
    if not checks["a"]:
        problems.append("P'' is not in the window")

    if spec.model is Model.SL2:
        t, s = int(data["translation"]["t"]), int(data["translation"]["s"])
        if t % cfg.window.alpha or s % cfg.window.alpha:
            problems.append("translation is not a multiple of the window level")
        u, lo = _unipotents(t, s)
        if (u * P * lo).coords != P2.coords:
            problems.append("P'' is not the stated translate of P")
        bc = avoidance_checks(cfg, P2, [])
        checks["b"], checks["c"], checks["d"] = bc["b"], bc["c"], None
        if not bc["c"]:
            problems.append(f"P'' meets the subset mod {bc['c_failures'] or 'a prime outside S'}")
        ok = not problems and all(v is not False for v in checks.values())
        return VerificationReport(ok, checks, problems)

    alpha = cfg.window.alpha
    torus = TorusSpec.fundamental(spec, cfg.torus_d, alpha)
    g = _el(spec, data["g"])
    if (g * P).coords != P1.coords:
        problems.append("P' is not g * P")
    ident = identity_coords(spec)
    if any((c - e) % alpha for c, e in zip(g.coords, ident)):
        problems.append("g is not in the congruence subgroup")
    f = build_f(spec, cfg.F, P)
    f_value = int(data["f_value"])
    if f(g.coords) != f_value:
        problems.append("f_value does not equal f(g)")
    # invariance along the orbit: F(pi(P')) and F(pi(P'')) agree
    pi = symbolic_quotient(spec)
    fP1 = cfg.F([c(P1.coords) for c in pi])
    fP2 = cfg.F([c(P2.coords) for c in pi])
    if not (fP1 == fP2 == f_value):
        problems.append("f is not constant along the orbit")
    factors = {int(e["p"]): int(e["e"]) for e in data["factors"]}
    if math.prod(p**e for p, e in factors.items()) != abs(f_value) or not all(is_prime(p) for p in factors):
        problems.append("recorded factorization does not multiply back to |f_value|")
    if f_value != 0 and factorize(f_value).factors != factors:
        problems.append("recorded factorization differs from a fresh one")

    subset_report = validate_subset(cfg)
    gcd_cert = certify_gcd(spec, f, alpha, int(cfg.sieve["gcd_height"]), int(cfg.sieve["gcd_prime_bound"]), workers)
    N = gcd_cert.N
    if not gcd_cert.certified:
        problems.append("gcd N is not certified")
    theta = ap.measure_theta(spec, f, alpha, int(cfg.sieve["theta_height"]), int(cfg.sieve["theta_min_height"]), workers)
    r0 = ap.report_r_formula(theta, cfg.beta)
    th = threshold_M(torus, r0, subset_report.n_fiber, int(cfg.budgets["threshold_prime_bound"]))
    excluded = set(cfg.S) | set(prime_factors(alpha * N))
    S0 = sorted(p for p in factors if p not in excluded)
    claimed = sorted(int(p) for p in data["S0"])
    if claimed != S0:
        problems.append(f"S0 {claimed} differs from the recomputed {S0}")
    if any(p <= th.M for p in S0):
        problems.append(f"a bad place does not exceed M = {th.M}")
    if sum(factors[p] for p in S0) > r0:
        problems.append(f"more than r0 = {r0} counted factors")

    l = int(data["l"])
    if (torus.Q_pow(l) * P1).coords != P2.coords:
        problems.append(f"P'' is not Q^{l} * P'")
    state = AvoidanceState(torus, P1, claimed, subset_report.n_fiber, r0)
    if not 0 <= l < state.L:
        problems.append(f"orbit index {l} outside [0, {state.L})")
    try:
        tr = pigeonhole_transcript(state, cfg.subset.generators)
        checks["d"] = all(t.orbit_distinct == state.L for t in tr.primes) and tr.product_ok
        earlier = {i for t in tr.primes for i in t.bad_l}
        if l in earlier or any(i not in earlier for i in range(l)):
            problems.append("orbit index is not the first admissible one")
    except (PipelineViolationError, PigeonholeViolationError) as exc:
        problems.append(str(exc))
        checks["d"] = False
    bc = avoidance_checks(cfg, P2, S0)
    checks["b"], checks["c"] = bc["b"], bc["c"]
    if not bc["c"]:
        problems.append(f"P'' meets the subset mod {bc['c_failures'] or 'a prime outside S'}")
    for k, v in checks.items():
        if v is False:
            problems.append(f"check ({k}) fails")
    ok = not problems
    return VerificationReport(ok, checks, problems)
