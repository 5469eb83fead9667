"""Symbolic algebra of eps-power sequences and dominant-term reduction.

A sequence is a pure monomial c * eps^q with c > 0 and rational q; these
realize every comparison class (<<, ~, >>) the scale analysis needs while
keeping all classification exact.  A sorted slope set M carves the paths
(x_eps, lambda_eps) -> (0, 0) into 2n+1 regions indexed 0..2n: even indices
are open sectors between consecutive transition curves x = lambda^m, odd
indices are the rays x ~ z * lambda^{m_i} themselves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import EmptyPowerSetError, UnstableScaleError
from .polynomial import Coeff, UniPoly
from .poset import (PowerSet, Slope, active_set, envelope, interval_minimizers,
                    support_value)


def exact_pow(base: Fraction, q: Fraction) -> Fraction | float:
    """base**q, kept exact when the rational root exists."""
    base, q = Fraction(base), Fraction(q)
    if base <= 0:
        raise ValueError("base must be positive")
    if q.denominator == 1:
        return base ** q.numerator
    num = _iroot(base.numerator, q.denominator)
    den = _iroot(base.denominator, q.denominator)
    if num is not None and den is not None:
        return Fraction(num, den) ** q.numerator
    return float(base) ** float(q)


def _iroot(n: int, k: int) -> int | None:
    r = round(n ** (1.0 / k))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** k == n:
            return c
    return None


@dataclass(frozen=True)
class EpsPower:
    """The sequence eps -> coeff * eps^exponent, coeff > 0."""

    coeff: Fraction
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        object.__setattr__(self, "exponent", Fraction(self.exponent))
        if self.coeff <= 0:
            raise ValueError("coefficient must be positive")

    @staticmethod
    def eps(q: Fraction | int | str = 1, coeff: Fraction | int | str = 1) -> "EpsPower":
        return EpsPower(Fraction(coeff), Fraction(q))

    @staticmethod
    def one() -> "EpsPower":
        return EpsPower(Fraction(1), Fraction(0))

    def __mul__(self, other: "EpsPower") -> "EpsPower":
        return EpsPower(self.coeff * other.coeff, self.exponent + other.exponent)

    def __pow__(self, q: Fraction | int) -> "EpsPower":
        q = Fraction(q)
        c = exact_pow(self.coeff, q)
        if isinstance(c, float):
            c = Fraction(c)
        return EpsPower(c, self.exponent * q)

    def inverse(self) -> "EpsPower":
        return EpsPower(1 / self.coeff, -self.exponent)

    def __call__(self, eps: float) -> float:
        return float(self.coeff) * eps ** float(self.exponent)

    def __repr__(self) -> str:
        return f"{self.coeff}*eps^{self.exponent}"


class Ordering(enum.Enum):
    MUCH_LESS = "<<"
    COMPARABLE = "~"
    MUCH_GREATER = ">>"


@dataclass(frozen=True)
class Comparison:
    ordering: Ordering
    ratio: Fraction | None  # limit of s1/s2, present iff COMPARABLE


def compare(s1: EpsPower, s2: EpsPower) -> Comparison:
    """Limit of s1/s2 as eps -> 0, classified by trichotomy."""
    if s1.exponent > s2.exponent:
        return Comparison(Ordering.MUCH_LESS, None)
    if s1.exponent < s2.exponent:
        return Comparison(Ordering.MUCH_GREATER, None)
    return Comparison(Ordering.COMPARABLE, s1.coeff / s2.coeff)


@dataclass(frozen=True)
class Region:
    """Region index relative to a sorted slope set.

    Even index 2i: open sector between the transition curves; odd index
    2i-1: the ray x ~ z * lambda^{m_i}, carrying the limit constant z > 0.
    """

    index: int
    z: Fraction | float | None = None

    @property
    def is_ray(self) -> bool:
        return self.index % 2 == 1

    @property
    def sector(self) -> int:
        """Index i of the dominant-term slot this region selects."""
        return (self.index + 1) // 2


def classify_region(x: EpsPower | None, lam: EpsPower | None,
                    M: Sequence[Slope]) -> Region:
    """Locate the path (x_eps, lambda_eps) within the subpartition of M.

    Both sequences must tend to 0 (positive exponents).  lam=None encodes
    the identically-zero parameter sequence, classified as region 0 by
    convention (x >> lambda^m for every m).
    """
    M = sorted(Fraction(m) for m in M)
    if not M:
        raise ValueError("slope set must be nonempty")
    if lam is None:
        return Region(0)
    if x.exponent <= 0 or lam.exponent <= 0:
        raise UnstableScaleError("both sequences must tend to zero")
    rho = x.exponent / lam.exponent
    n = len(M)
    if rho < M[0]:
        return Region(0)
    for i, m in enumerate(M, start=1):
        if rho == m:
            z = x.coeff / exact_pow(lam.coeff, m)
            return Region(2 * i - 1, z)
        if i < n and m < rho < M[i]:
            return Region(2 * i)
    return Region(2 * n)


def reduce_to_envelope(f: PowerSet) -> PowerSet:
    """Drop the terms that are never dominant along any path to the origin."""
    if len(f) == 0:
        raise EmptyPowerSetError("cannot reduce an empty power set")
    return f.restrict(envelope(f).powers())


def dominant_terms(f: PowerSet, region: Region, M: Sequence[Slope]) -> PowerSet:
    """Terms of f that survive on the given region.

    Even regions keep the single interval minimizer; odd regions keep the
    whole active set at the ray slope.  M must contain every pivot slope of
    f's powers.
    """
    M = sorted(Fraction(m) for m in M)
    alphas = interval_minimizers(f, M)
    if region.is_ray:
        return f.restrict(active_set(f, M[region.sector - 1]).powers())
    return f.restrict([alphas[region.sector]])


@dataclass(frozen=True)
class Monomial:
    """coeff * x^x_exp * lambda^lam_exp with rational exponents."""

    coeff: Coeff
    x_exp: Fraction
    lam_exp: Fraction

    def __call__(self, x: float, lam: float) -> float:
        return float(self.coeff) * x ** float(self.x_exp) * lam ** float(self.lam_exp)


@dataclass(frozen=True)
class ScaleFunctions:
    """Product decomposition f(u*x, lambda) ~ v(x, lambda) * w(u) on a region."""

    v: Monomial
    w: UniPoly


def scale_functions(f: PowerSet, region: Region, M: Sequence[Slope]) -> ScaleFunctions:
    M = sorted(Fraction(m) for m in M)
    dom = dominant_terms(f, region, M)
    if region.is_ray:
        if region.z is None:
            raise ValueError("ray regions require the limit constant z")
        m = M[region.sector - 1]
        v = Monomial(Fraction(1), Fraction(0), support_value(f, m))
        w = {}
        for p in dom.powers():
            zp = region.z ** p[0] if not isinstance(region.z, float) \
                else float(region.z) ** p[0]
            w[p[0]] = w.get(p[0], 0) + dom.coeff(p) * zp
        return ScaleFunctions(v, UniPoly.from_terms(w))
    (alpha,) = dom.powers()
    v = Monomial(dom.coeff(alpha), Fraction(alpha[0]), Fraction(alpha[1]))
    return ScaleFunctions(v, UniPoly.from_terms({alpha[0]: 1}))
