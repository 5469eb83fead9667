"""Light univariate polynomials with exact-or-float coefficients.

Exponents are non-negative integers.  Coefficients stay Fractions whenever
the inputs are exact and degrade to floats otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

Coeff = Fraction | float


@dataclass(frozen=True)
class UniPoly:
    _terms: tuple[tuple[int, Coeff], ...]  # sorted by exponent, no zeros

    @staticmethod
    def from_terms(terms: Mapping[int, Coeff | int | str]) -> "UniPoly":
        clean = {}
        for e, c in terms.items():
            e = int(e)
            if e < 0:
                raise ValueError("exponents must be non-negative")
            if not isinstance(c, float):
                c = Fraction(c)
            if c != 0:
                clean[e] = c
        return UniPoly(tuple(sorted(clean.items())))

    @staticmethod
    def zero() -> "UniPoly":
        return UniPoly(())

    def terms(self) -> dict[int, Coeff]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def scaled(self, factor: Coeff) -> "UniPoly":
        if factor == 0:
            return UniPoly(())
        return UniPoly(tuple((e, c * factor) for e, c in self._terms))

    def derivative(self) -> "UniPoly":
        return UniPoly(tuple((e - 1, c * e) for e, c in self._terms if e >= 1))

    def __call__(self, x: float | Fraction) -> float | Fraction:
        return sum((c * x ** e for e, c in self._terms),
                   Fraction(0) if isinstance(x, Fraction) else 0.0)

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        for e, c in self._terms:
            out += float(c) * x ** e
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UniPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(f"{c}*u^{e}" if e else f"{c}" for e, c in self._terms)

    def almost_equal(self, other: "UniPoly", rel: float = 1e-12) -> bool:
        es = set(dict(self._terms)) | set(dict(other._terms))
        a, b = self.terms(), other.terms()
        for e in es:
            ca, cb = float(a.get(e, 0)), float(b.get(e, 0))
            if abs(ca - cb) > rel * max(1.0, abs(ca), abs(cb)):
                return False
        return True
