"""Exact combinatorics on finite sets of bivariate monomial powers.

A power is a pair (a1, a2) of non-negative integers, ordered componentwise.
A power set attaches a nonzero rational coefficient to each power.  The
supporting value of a power at slope m is s(alpha, m) = m*a1 + a2; the
minimizers of s over a set, as m sweeps (0, inf), trace the lower-left
contour of the set (its Newton-polygon side facing the origin).  Everything
here is exact rational arithmetic; no floats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import EmptyPowerSetError, PowerCapError

#: Largest exponent admitted by default; guards the exact arithmetic.
DEFAULT_POWER_CAP = 32

Power = tuple[int, int]
Slope = Fraction


def _check_power(p: Power, cap: int) -> Power:
    a1, a2 = p
    if a1 < 0 or a2 < 0 or a1 != int(a1) or a2 != int(a2):
        raise PowerCapError(f"power {p!r} must be a pair of non-negative integers")
    if a1 > cap or a2 > cap:
        raise PowerCapError(f"power {p!r} exceeds the exponent cap {cap}")
    return (int(a1), int(a2))


def dominates(p: Power, q: Power) -> bool:
    """Componentwise p >= q."""
    return p[0] >= q[0] and p[1] >= q[1]


@dataclass(frozen=True)
class PowerSet:
    """Finite set of powers with nonzero rational coefficients.

    Immutable; hashable on the sorted (power, coefficient) items.
    """

    _items: tuple[tuple[Power, Fraction], ...]

    @staticmethod
    def from_coeffs(coeffs: Mapping[Power, Fraction | int | str],
                    cap: int = DEFAULT_POWER_CAP) -> "PowerSet":
        items = []
        seen = set()
        for p, c in coeffs.items():
            p = _check_power(tuple(p), cap)
            if p in seen:
                raise ValueError(f"duplicate power {p}")
            seen.add(p)
            c = Fraction(c)
            if c == 0:
                raise ValueError(f"coefficient of {p} must be nonzero")
            items.append((p, c))
        items.sort()
        return PowerSet(tuple(items))

    @staticmethod
    def from_powers(powers: Iterable[Power], cap: int = DEFAULT_POWER_CAP) -> "PowerSet":
        """Unit coefficients; convenient for purely combinatorial work."""
        return PowerSet.from_coeffs({tuple(p): Fraction(1) for p in powers}, cap=cap)

    def powers(self) -> tuple[Power, ...]:
        return tuple(p for p, _ in self._items)

    def coeff(self, p: Power) -> Fraction:
        for q, c in self._items:
            if q == tuple(p):
                return c
        raise KeyError(p)

    def as_dict(self) -> dict[Power, Fraction]:
        return dict(self._items)

    def restrict(self, keep: Iterable[Power]) -> "PowerSet":
        keep = set(tuple(p) for p in keep)
        return PowerSet(tuple((p, c) for p, c in self._items if p in keep))

    def scaled(self, factor: Fraction | int) -> "PowerSet":
        factor = Fraction(factor)
        if factor == 0:
            return PowerSet(())
        return PowerSet(tuple((p, c * factor) for p, c in self._items))

    def plus(self, other: "PowerSet") -> "PowerSet":
        total = self.as_dict()
        for p, c in other._items:
            s = total.get(p, Fraction(0)) + c
            if s == 0:
                total.pop(p, None)
            else:
                total[p] = s
        return PowerSet(tuple(sorted(total.items())))

    def evaluate(self, x: float, lam: float) -> float:
        return sum(float(c) * x ** p[0] * lam ** p[1] for p, c in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Power]:
        return iter(self.powers())

    def __contains__(self, p: object) -> bool:
        return any(q == tuple(p) for q, _ in self._items)  # type: ignore[arg-type]

    def __repr__(self) -> str:
        inner = ", ".join(f"({p[0]},{p[1]}): {c}" for p, c in self._items)
        return "PowerSet{" + inner + "}"


EMPTY = PowerSet(())


def minimal_elements(A: PowerSet) -> PowerSet:
    """Powers of A not dominated by any other power of A."""
    ps = A.powers()
    keep = [p for p in ps if not any(q != p and dominates(p, q) for q in ps)]
    return A.restrict(keep)


def _require_nonempty(A: PowerSet) -> None:
    if len(A) == 0:
        raise EmptyPowerSetError("operation requires a nonempty power set")


def support_value(A: PowerSet, m: Slope) -> Fraction:
    """min over powers of m*a1 + a2."""
    _require_nonempty(A)
    m = Fraction(m)
    if m <= 0:
        raise ValueError("slope must be positive and finite")
    return min(m * p[0] + p[1] for p in A.powers())


def active_set(A: PowerSet, m: Slope) -> PowerSet:
    """Subset of A attaining the supporting value at slope m."""
    s = support_value(A, m)
    m = Fraction(m)
    return A.restrict(p for p in A.powers() if m * p[0] + p[1] == s)


def crossing_slope(p: Power, q: Power) -> Slope | None:
    """Positive slope at which the supporting values of two powers tie.

    None when the powers are comparable (the tie happens at m <= 0 or never).
    """
    if p[0] == q[0]:
        return None
    m = Fraction(q[1] - p[1], p[0] - q[0])
    return m if m > 0 else None


def candidate_slopes(A: PowerSet) -> list[Slope]:
    """Sorted positive slopes where the active set can change.

    All pairwise crossing slopes of the minimal elements; a superset of the
    pivot slopes.
    """
    mins = minimal_elements(A).powers()
    out = set()
    for p, q in itertools.combinations(mins, 2):
        m = crossing_slope(p, q)
        if m is not None:
            out.add(m)
    return sorted(out)


def _probe_slopes(cands: list[Slope]) -> list[Slope]:
    """One interior slope per open interval delimited by the candidates."""
    if not cands:
        return [Fraction(1)]
    probes = [cands[0] / 2]
    for a, b in zip(cands, cands[1:]):
        probes.append((a + b) / 2)
    probes.append(cands[-1] + 1)
    return probes


def envelope(A: PowerSet) -> PowerSet:
    """Union of the active sets over all positive slopes."""
    if len(A) == 0:
        return A
    keep: set[Power] = set()
    cands = candidate_slopes(A)
    for m in cands + _probe_slopes(cands):
        keep.update(active_set(A, m).powers())
    return A.restrict(keep)


@dataclass(frozen=True)
class PivotStructure:
    """Pivot slopes m_1 < ... < m_n and the pivots alpha(0..n).

    On the open slope interval (m_i, m_{i+1}) the active set is the single
    power interval_active[i]; with the native slope set these coincide with
    the pivots, listed in strictly decreasing first coordinate.
    """

    pivot_slopes: tuple[Slope, ...]
    pivots: tuple[Power, ...]
    interval_active: tuple[Power, ...]


def pivot_structure(A: PowerSet) -> PivotStructure:
    _require_nonempty(A)
    slopes = [m for m in candidate_slopes(A) if len(active_set(A, m)) >= 2]
    actives = [_sole(active_set(A, m)) for m in _probe_slopes(slopes)]
    return PivotStructure(tuple(slopes), tuple(actives), tuple(actives))


def _sole(A: PowerSet) -> Power:
    ps = A.powers()
    assert len(ps) == 1
    return ps[0]


def interval_minimizers(A: PowerSet, M: Iterable[Slope]) -> tuple[Power, ...]:
    """alpha(i) for i = 0..n relative to a slope set M containing all pivots.

    M may be strictly larger than the pivot slopes of A, in which case
    consecutive entries repeat.
    """
    _require_nonempty(A)
    M = sorted(Fraction(m) for m in M)
    own = set(pivot_structure(A).pivot_slopes)
    if not own.issubset(M):
        from .errors import SlopeSetTooSmallError
        raise SlopeSetTooSmallError(
            f"slope set {M} misses pivot slopes {sorted(own - set(M))}")
    return tuple(_sole(active_set(A, m)) for m in _probe_slopes(M))


def contains_in_S(B: PowerSet, p: Power) -> bool:
    """Whether p lies above every supporting line of B.

    The difference m -> s(p, m) - s(B, m) is convex piecewise linear, so it
    is checked at the pivot slopes of B and in the two limits m -> 0+ and
    m -> infinity, where it is controlled by the smallest second and first
    coordinates over B.
    """
    _require_nonempty(B)
    p = (int(p[0]), int(p[1]))
    if p[1] < min(b[1] for b in B.powers()):
        return False
    if p[0] < min(b[0] for b in B.powers()):
        return False
    for m in pivot_structure(B).pivot_slopes:
        if Fraction(m) * p[0] + p[1] < support_value(B, m):
            return False
    return True
