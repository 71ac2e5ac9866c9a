"""Sparse integer polynomials in the four model coordinates.

A :class:`RegularFunction` is stored as a sorted tuple of ``(exponents, coef)``
pairs.  The same object supports exact evaluation on Python integers,
vectorised evaluation modulo ``m`` on ``int64`` arrays, and ring arithmetic so
that composite functions (``F`` after the quotient map after a translation)
can be built symbolically and written out with their definition trail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidModulusError, WorkbenchError

NVARS = 4
Exponents = tuple[int, int, int, int]

# products of two residues must stay below 2**63
MAX_INT64_MODULUS = 3_037_000_499


def _normalise(terms: Mapping[Exponents, int]) -> tuple[tuple[Exponents, int], ...]:
    return tuple(sorted((e, c) for e, c in terms.items() if c != 0))


@dataclass(frozen=True)
class RegularFunction:
    terms: tuple[tuple[Exponents, int], ...]
    name: str = ""

    # -- construction -----------------------------------------------------
    @classmethod
    def from_dict(cls, terms: Mapping[Sequence[int], int], name: str = "") -> "RegularFunction":
        acc: dict[Exponents, int] = {}
        for e, c in terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != NVARS or min(e) < 0:
                raise WorkbenchError(f"bad exponent vector {e}")
            acc[e] = acc.get(e, 0) + int(c)
        return cls(_normalise(acc), name)

    @classmethod
    def constant(cls, c: int, name: str = "") -> "RegularFunction":
        return cls.from_dict({(0, 0, 0, 0): c}, name or str(c))

    @classmethod
    def coordinate(cls, i: int, name: str = "") -> "RegularFunction":
        e = [0] * NVARS
        e[i] = 1
        return cls.from_dict({tuple(e): 1}, name or f"c{i + 1}")

    @classmethod
    def linear(cls, coefs: Sequence[int], const: int = 0, name: str = "") -> "RegularFunction":
        d: dict[Exponents, int] = {(0, 0, 0, 0): const}
        for i, c in enumerate(coefs):
            e = [0] * NVARS
            e[i] = 1
            d[tuple(e)] = c
        return cls.from_dict(d, name)

    # -- properties ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def constant_value(self) -> int | None:
        """The value if the polynomial is constant, else ``None``."""
        if not self.terms:
            return 0
        if len(self.terms) == 1 and self.terms[0][0] == (0, 0, 0, 0):
            return self.terms[0][1]
        return None

    def renamed(self, name: str) -> "RegularFunction":
        return RegularFunction(self.terms, name)

    # -- ring operations ----------------------------------------------------
    def _as_dict(self) -> dict[Exponents, int]:
        return dict(self.terms)

    def __add__(self, other):
        if isinstance(other, int):
            other = RegularFunction.constant(other)
        if not isinstance(other, RegularFunction):
            return NotImplemented
        acc = self._as_dict()
        for e, c in other.terms:
            acc[e] = acc.get(e, 0) + c
        return RegularFunction(_normalise(acc))

    __radd__ = __add__

    def __neg__(self):
        return RegularFunction(tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return RegularFunction(_normalise({e: c * other for e, c in self.terms}))
        if not isinstance(other, RegularFunction):
            return NotImplemented
        acc: dict[Exponents, int] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, 0) + c1 * c2
        return RegularFunction(_normalise(acc))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = RegularFunction.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def substitute(self, values: Sequence["RegularFunction"]) -> "RegularFunction":
        """Compose: replace coordinate ``i`` by ``values[i]``."""
        out = RegularFunction.constant(0)
        powers: list[dict[int, RegularFunction]] = [{0: RegularFunction.constant(1)} for _ in range(NVARS)]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = power(i, k - 1) * values[i]
            return cache[k]

        for e, c in self.terms:
            term = RegularFunction.constant(c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            out = out + term
        return out

    # -- evaluation ---------------------------------------------------------
    def __call__(self, coords: Sequence[int]) -> int:
        total = 0
        for e, c in self.terms:
            v = c
            for x, k in zip(coords, e):
                if k:
                    v *= x**k
            total += v
        return total

    def evaluate_mod(self, arr: np.ndarray, m: int) -> np.ndarray:
        """Residues of the function on the rows of an ``(n, 4)`` array, mod ``m``."""
        if m < 1:
            raise InvalidModulusError(f"modulus must be positive, got {m}")
        if m > MAX_INT64_MODULUS:
            raise InvalidModulusError(f"modulus {m} too large for int64 evaluation")
        arr = np.asarray(arr, dtype=np.int64) % m
        n = arr.shape[0]
        out = np.zeros(n, dtype=np.int64)
        for e, c in self.terms:
            v = np.full(n, c % m, dtype=np.int64)
            for i, k in enumerate(e):
                for _ in range(k):
                    v = (v * arr[:, i]) % m
            out = (out + v) % m
        return out

    def evaluate_exact(self, arr: np.ndarray) -> list[int]:
        return [self(tuple(int(x) for x in row)) for row in arr]

    # -- serialisation ------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "name": self.name,
            "terms": [{"coef": str(c), "exp": list(e)} for e, c in self.terms],
        }

    @classmethod
    def from_json(cls, obj) -> "RegularFunction":
        if isinstance(obj, (int, str)) and not isinstance(obj, bool):
            return cls.constant(int(obj))
        terms: dict[Exponents, int] = {}
        for t in obj.get("terms", []):
            e = tuple(int(x) for x in t["exp"])
            terms[e] = terms.get(e, 0) + int(t["coef"])
        return cls.from_dict(terms, obj.get("name", ""))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            mono = "*".join(f"c{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def variables() -> list[RegularFunction]:
    return [RegularFunction.coordinate(i) for i in range(NVARS)]


def trace_sl2() -> RegularFunction:
    return RegularFunction.linear([1, 0, 0, 1], name="trace")


def sum_of(fs: Iterable[RegularFunction]) -> RegularFunction:
    out = RegularFunction.constant(0)
    for f in fs:
        out = out + f
    return out
