"""Brute-force reference implementations, kept independent of the package.

These recompute the combinatorics from first principles (scan every pair,
evaluate the support at every candidate slope and between candidates) so
the fast paths in qdp.poset can be checked against them exactly.
"""

import itertools
from fractions import Fraction


def s(p, m):
    return Fraction(m) * p[0] + p[1]


def brute_active(powers, m):
    best = min(s(p, m) for p in powers)
    return {p for p in powers if s(p, m) == best}


def brute_candidate_slopes(powers):
    """Every pairwise tie slope, over all pairs (not only minimal ones)."""
    out = set()
    for p, q in itertools.combinations(powers, 2):
        if p[0] != q[0]:
            m = Fraction(q[1] - p[1], p[0] - q[0])
            if m > 0:
                out.add(m)
    return sorted(out)


def brute_probe_slopes(powers):
    cands = brute_candidate_slopes(powers)
    if not cands:
        return [Fraction(1)]
    probes = [cands[0] / 2]
    for a, b in zip(cands, cands[1:]):
        probes.append((a + b) / 2)
    probes.append(cands[-1] + 1)
    return cands + probes


def brute_envelope(powers):
    if not powers:
        return set()
    out = set()
    for m in brute_probe_slopes(powers):
        out |= brute_active(powers, m)
    return out


def brute_pivot_slopes(powers):
    return [m for m in brute_candidate_slopes(powers)
            if len(brute_active(powers, m)) >= 2]


def brute_minimal(powers):
    return {p for p in powers
            if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in powers)}


def brute_in_S(powers, p, denominator_cap=64):
    """Dense rational sweep of s(p, m) >= s(B, m); adequate for small sets."""
    slopes = [Fraction(n, d) for d in range(1, denominator_cap)
              for n in range(1, denominator_cap)]
    return all(s(p, m) >= min(s(q, m) for q in powers) for m in slopes)
