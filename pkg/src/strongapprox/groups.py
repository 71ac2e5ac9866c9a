"""Exact arithmetic for the two group models.

``SL2``
    2x2 integer matrices ``(g11, g12, g21, g22)`` of determinant one.
``QUAT``
    norm-one elements ``x + y*i + z*j + w*ij`` of the quaternion algebra
    ``B(a, b)`` with ``i^2 = a``, ``j^2 = b``, ``ij = -ji``; the reduced norm
    is ``x^2 - a*y^2 - b*z^2 + a*b*w^2``.

The coordinate kernels (:func:`mul_coords`, :func:`conj_coords`,
:func:`norm_form`) only use ``+``, ``-`` and ``*`` so they run unchanged on
Python integers, numpy arrays and :class:`~strongapprox.polynomial.RegularFunction`
objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    InvalidGroupSpecError,
    InvalidModulusError,
    NotInGroupError,
    SpecMismatchError,
)
from .numtheory import is_square, legendre, prime_factors, valuation


class Model(str, enum.Enum):
    SL2 = "sl2"
    QUAT = "quat"


# -- Hilbert symbols and the division-algebra certificate -------------------

def _squarefree_unit_part(x: int, p: int) -> tuple[int, int]:
    v = valuation(x, p)
    return v, x // p**v


def hilbert_symbol(a: int, b: int, p: int | None) -> int:
    """Hilbert symbol ``(a, b)_p``; ``p=None`` is the real place."""
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol of zero")
    if p is None:
        return -1 if a < 0 and b < 0 else 1
    alpha, u = _squarefree_unit_part(a, p)
    beta, v = _squarefree_unit_part(b, p)
    if p == 2:
        eps = lambda t: ((t - 1) // 2) % 2  # noqa: E731
        omg = lambda t: ((t * t - 1) // 8) % 2  # noqa: E731
        e = eps(u) * eps(v) + alpha * omg(v) + beta * omg(u)
        return -1 if e % 2 else 1
    sign = -1 if (alpha * beta * ((p - 1) // 2)) % 2 else 1
    return sign * legendre(u, p) ** beta * legendre(v, p) ** alpha


def ramified_places(a: int, b: int) -> list[int | None]:
    """Places where ``B(a, b)`` ramifies (``None`` for infinity)."""
    places: list[int | None] = [None, 2] + [p for p in prime_factors(abs(a * b)) if p != 2]
    return [p for p in places if hilbert_symbol(a, b, p) == -1]


def search_ternary_zero(a: int, b: int, box: int = 100) -> tuple[int, int, int] | None:
    """Brute-force a nonzero solution of ``a x^2 + b y^2 = z^2`` with entries in the box."""
    for x in range(0, box + 1):
        for y in range(0, box + 1):
            if x == 0 and y == 0:
                continue
            t = a * x * x + b * y * y
            if t >= 0 and is_square(t):
                z = int(t**0.5)
                while z * z < t:
                    z += 1
                while z * z > t:
                    z -= 1
                if z <= box:
                    return (x, y, z)
    return None


@dataclass(frozen=True)
class DivisionCertificate:
    a: int
    b: int
    box: int
    box_solution: tuple[int, int, int] | None
    hilbert: dict
    ramified: list

    @property
    def is_division(self) -> bool:
        return self.box_solution is None and bool(self.ramified)

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "search_box": self.box,
            "box_solution": list(self.box_solution) if self.box_solution else None,
            "hilbert_symbols": self.hilbert,
            "ramified_places": ["inf" if p is None else p for p in self.ramified],
            "division": self.is_division,
        }


def division_certificate(a: int, b: int, box: int = 100) -> DivisionCertificate:
    places: list[int | None] = [None, 2] + [p for p in prime_factors(abs(a * b)) if p != 2]
    symbols = {("inf" if p is None else str(p)): hilbert_symbol(a, b, p) for p in places}
    return DivisionCertificate(
        a, b, box, search_ternary_zero(a, b, box), symbols, ramified_places(a, b)
    )


# -- group specification ----------------------------------------------------

@dataclass(frozen=True)
class GroupSpec:
    model: Model
    a: int = 0
    b: int = 0
    level: int = 1

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if self.level < 1:
            raise InvalidGroupSpecError(f"level must be >= 1, got {self.level}")
        if self.model is Model.QUAT:
            if self.a == 0 or self.b == 0:
                raise InvalidGroupSpecError("quaternion parameters must be nonzero")
            if self.a < 0 and self.b < 0:
                raise InvalidGroupSpecError(
                    f"B({self.a},{self.b}) is definite: real points are compact"
                )
            if not ramified_places(self.a, self.b):
                raise InvalidGroupSpecError(
                    f"B({self.a},{self.b}) is split: the ternary form has a rational zero"
                )

    @classmethod
    def sl2(cls, level: int = 1) -> "GroupSpec":
        return cls(Model.SL2, level=level)

    @classmethod
    def quat(cls, a: int, b: int, level: int = 1) -> "GroupSpec":
        return cls(Model.QUAT, a, b, level)

    def same_group(self, other: "GroupSpec") -> bool:
        return (self.model, self.a, self.b) == (other.model, other.a, other.b)

    @cached_property
    def bad_primes(self) -> frozenset[int]:
        """Primes where the integral model is not smooth (none for SL2)."""
        if self.model is Model.SL2:
            return frozenset()
        return frozenset(prime_factors(abs(2 * self.a * self.b)))

    def smoothness_defect(self, p: int) -> int:
        """Upper bound on the p-adic valuation of the gradient at integral points."""
        if self.model is Model.SL2 or p not in self.bad_primes:
            return 0
        v = lambda t: valuation(t, p) if t % p == 0 else 0  # noqa: E731
        return v(2) + v(self.a) + v(self.b)

    def to_json(self) -> dict:
        d = {"model": self.model.value, "level": self.level}
        if self.model is Model.QUAT:
            d.update(a=self.a, b=self.b)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "GroupSpec":
        return cls(Model(obj["model"]), int(obj.get("a", 0)), int(obj.get("b", 0)), int(obj.get("level", 1)))

    def __str__(self) -> str:
        if self.model is Model.SL2:
            return "SL2"
        return f"QuatNormOne({self.a},{self.b})"


# -- coordinate kernels ------------------------------------------------------

def mul_coords(spec: GroupSpec, u: Sequence, v: Sequence):
    if spec.model is Model.SL2:
        return (
            u[0] * v[0] + u[1] * v[2],
            u[0] * v[1] + u[1] * v[3],
            u[2] * v[0] + u[3] * v[2],
            u[2] * v[1] + u[3] * v[3],
        )
    a, b = spec.a, spec.b
    x1, y1, z1, w1 = u
    x2, y2, z2, w2 = v
    return (
        x1 * x2 + a * y1 * y2 + b * z1 * z2 - a * b * w1 * w2,
        x1 * y2 + y1 * x2 - b * z1 * w2 + b * w1 * z2,
        x1 * z2 + z1 * x2 + a * y1 * w2 - a * w1 * y2,
        x1 * w2 + w1 * x2 + y1 * z2 - z1 * y2,
    )


def conj_coords(spec: GroupSpec, u: Sequence):
    """Quaternion conjugate, or the adjugate of a 2x2 matrix."""
    if spec.model is Model.SL2:
        return (u[3], -u[1], -u[2], u[0])
    return (u[0], -u[1], -u[2], -u[3])


def norm_form(spec: GroupSpec, u: Sequence):
    """Determinant or reduced norm."""
    if spec.model is Model.SL2:
        return u[0] * u[3] - u[1] * u[2]
    a, b = spec.a, spec.b
    return u[0] * u[0] - a * u[1] * u[1] - b * u[2] * u[2] + a * b * u[3] * u[3]


def gradient_coords(spec: GroupSpec, u: Sequence):
    if spec.model is Model.SL2:
        return (u[3], -u[2], -u[1], u[0])
    a, b = spec.a, spec.b
    return (2 * u[0], -2 * a * u[1], -2 * b * u[2], 2 * a * b * u[3])


IDENTITY = (1, 0, 0, 1)
QUAT_IDENTITY = (1, 0, 0, 0)


def identity_coords(spec: GroupSpec) -> tuple[int, int, int, int]:
    return IDENTITY if spec.model is Model.SL2 else QUAT_IDENTITY


def mul_arrays(spec: GroupSpec, u: np.ndarray, v: np.ndarray, m: int) -> np.ndarray:
    """Row-wise products of two ``(n, 4)`` residue arrays modulo ``m``."""
    u = np.asarray(u, dtype=np.int64) % m
    v = np.asarray(v, dtype=np.int64) % m
    cu = [u[..., i] for i in range(4)]
    cv = [v[..., i] for i in range(4)]
    if spec.model is Model.SL2:
        out = mul_coords(spec, cu, cv)
        return np.stack([c % m for c in out], axis=-1)
    a, b = spec.a % m, spec.b % m
    ab = (spec.a * spec.b) % m
    x1, y1, z1, w1 = cu
    x2, y2, z2, w2 = cv

    def mm(*fs):
        r = fs[0]
        for f in fs[1:]:
            r = (r * f) % m
        return r

    x = (mm(x1, x2) + mm(a, y1, y2) + mm(b, z1, z2) - mm(ab, w1, w2)) % m
    y = (mm(x1, y2) + mm(y1, x2) - mm(b, z1, w2) + mm(b, w1, z2)) % m
    z = (mm(x1, z2) + mm(z1, x2) + mm(a, y1, w2) - mm(a, w1, y2)) % m
    w = (mm(x1, w2) + mm(w1, x2) + mm(y1, z2) - mm(z1, y2)) % m
    return np.stack([x, y, z, w], axis=-1)


def norm_arrays(spec: GroupSpec, u: np.ndarray, m: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64) % m
    c = [u[..., i] for i in range(4)]
    if spec.model is Model.SL2:
        return (c[0] * c[3] - c[1] * c[2]) % m
    a, b, ab = spec.a % m, spec.b % m, (spec.a * spec.b) % m
    sq = [(ci * ci) % m for ci in c]
    return (sq[0] - a * sq[1] % m - b * sq[2] % m + ab * sq[3] % m) % m


# -- elements ----------------------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    spec: GroupSpec
    coords: tuple[int, int, int, int]

    def __post_init__(self):
        c = tuple(int(x) for x in self.coords)
        if len(c) != 4:
            raise NotInGroupError(f"expected 4 coordinates, got {len(c)}")
        object.__setattr__(self, "coords", c)
        n = norm_form(self.spec, c)
        if n != 1:
            label = "determinant" if self.spec.model is Model.SL2 else "reduced norm"
            raise NotInGroupError(f"{c} has {label} {n}, not 1")

    @classmethod
    def identity(cls, spec: GroupSpec) -> "GroupElement":
        return cls(spec, identity_coords(spec))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __pow__(self, k: int) -> "GroupElement":
        base = self if k >= 0 else conj_inverse(self)
        k = abs(k)
        out = GroupElement.identity(self.spec)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inverse(self) -> "GroupElement":
        return conj_inverse(self)

    @property
    def height(self) -> int:
        return max(abs(x) for x in self.coords)

    def reduce(self, m: int) -> "ResidueElement":
        return reduce_mod(self, m)

    def to_json(self) -> list[str]:
        return [str(x) for x in self.coords]

    def __str__(self) -> str:
        return str(self.coords)


@dataclass(frozen=True)
class ResidueElement:
    spec: GroupSpec
    modulus: int
    coords: tuple[int, int, int, int] = field(default=(0, 0, 0, 0))

    def __post_init__(self):
        if self.modulus < 1:
            raise InvalidModulusError(f"modulus must be positive, got {self.modulus}")
        c = tuple(int(x) % self.modulus for x in self.coords)
        object.__setattr__(self, "coords", c)
        if (norm_form(self.spec, c) - 1) % self.modulus:
            raise NotInGroupError(f"{c} does not satisfy the group equation mod {self.modulus}")

    @classmethod
    def identity(cls, spec: GroupSpec, m: int) -> "ResidueElement":
        return cls(spec, m, identity_coords(spec))

    def __mul__(self, other: "ResidueElement") -> "ResidueElement":
        if not self.spec.same_group(other.spec) or self.modulus != other.modulus:
            raise SpecMismatchError("residues live in different groups or moduli")
        return ResidueElement(self.spec, self.modulus, mul_coords(self.spec, self.coords, other.coords))

    def is_identity(self) -> bool:
        return self.coords == ResidueElement.identity(self.spec, self.modulus).coords


# -- operations ----------------------------------------------------------------

def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    if not g.spec.same_group(h.spec):
        raise SpecMismatchError(f"cannot multiply {g.spec} by {h.spec}")
    return GroupElement(g.spec, mul_coords(g.spec, g.coords, h.coords))


def conj_inverse(g: GroupElement) -> GroupElement:
    return GroupElement(g.spec, conj_coords(g.spec, g.coords))


def height(g: GroupElement) -> int:
    return g.height


def reduce_mod(g: GroupElement, m: int) -> ResidueElement:
    if m < 1:
        raise InvalidModulusError(f"modulus must be positive, got {m}")
    return ResidueElement(g.spec, m, g.coords)


def in_congruence_subgroup(g: GroupElement, alpha: int) -> bool:
    return reduce_mod(g, alpha).is_identity()


def quotient_map(spec: GroupSpec, g: Sequence):
    """``conj(g) * i * g``: constant on left cosets of the torus centralising ``i``."""
    i = (0, 1, 0, 0)
    return mul_coords(spec, mul_coords(spec, conj_coords(spec, g), i), g)
