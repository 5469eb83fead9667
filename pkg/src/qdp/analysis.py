"""Drift-diffusion scale analysis for a parametrized characteristic pair.

Given drift F and diffusion G as bivariate power sets in (x, lambda), this
module decides where drift and diffusion balance: the strong-stochasticity
check, the piecewise-monomial ratio r(x, lambda) and its eps^2 level curve,
and the limit classification of a rescaling (a_eps, b_eps, lambda_eps) --
around the origin and around a simple equilibrium branch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .asymptotics import (EpsPower, Region, classify_region, exact_pow,
                          scale_functions)
from .errors import (BranchValidityError, DomainError, EmptyPowerSetError,
                     HypothesisViolationError, NoPositiveSimpleRootError,
                     SignError, StrongStochasticityError, UnstableScaleError,
                     WrongTimeScaleError, ZeroDiffusionAtBranchError)
from .polynomial import Coeff, UniPoly
from .poset import (Power, PowerSet, Slope, active_set, contains_in_S,
                    envelope, interval_minimizers, pivot_structure,
                    support_value)


def quadrant_map(ps: PowerSet, flip_x: bool = False, flip_lam: bool = False) -> PowerSet:
    """Coefficient remapping that folds another quadrant onto [0,1]^2."""
    sx = -1 if flip_x else 1
    sl = -1 if flip_lam else 1
    return PowerSet.from_coeffs({
        p: c * sx ** p[0] * sl ** p[1] for p, c in ps.as_dict().items()})


def _g_nonneg_near_origin(G: PowerSet, lo: float = 1e-6, hi: float = 1e-1,
                          n: int = 25) -> bool:
    grid = np.geomspace(lo, hi, n)
    pts = [(x, l) for x in grid for l in grid]
    pts += [(x, lo * 1e-3) for x in grid] + [(lo * 1e-3, l) for l in grid]
    scale = max(abs(float(c)) for c in G.as_dict().values())
    return all(G.evaluate(x, l) >= -1e-13 * scale for x, l in pts)


@dataclass(frozen=True)
class CharacteristicPair:
    """Drift/diffusion power sets with their joined slope decomposition.

    drift and diffusion are stored envelope-reduced; the raw inputs are kept
    for numeric work.  alphas/betas hold the per-sector dominant powers with
    respect to the joined slope set M, deltas their differences.
    """

    drift: PowerSet
    diffusion: PowerSet
    drift_full: PowerSet
    diffusion_full: PowerSet
    M: tuple[Slope, ...]
    alphas: tuple[Power, ...]
    betas: tuple[Power, ...]
    deltas: tuple[tuple[int, int], ...]

    @staticmethod
    def from_power_sets(F: PowerSet, G: PowerSet,
                        check_g_nonneg: bool = True) -> "CharacteristicPair":
        if len(F) == 0 or len(G) == 0:
            raise EmptyPowerSetError("drift and diffusion must both be nonempty")
        if check_g_nonneg and not _g_nonneg_near_origin(G):
            raise ValueError("diffusion is negative near the origin")
        A = F.restrict(envelope(F).powers())
        B = G.restrict(envelope(G).powers())
        M = sorted(set(pivot_structure(A).pivot_slopes)
                   | set(pivot_structure(B).pivot_slopes))
        alphas = interval_minimizers(A, M)
        betas = interval_minimizers(B, M)
        deltas = tuple((a[0] - b[0], a[1] - b[1]) for a, b in zip(alphas, betas))
        return CharacteristicPair(A, B, F, G, tuple(M), alphas, betas, deltas)

    @property
    def n_slopes(self) -> int:
        return len(self.M)


class SSStatus(enum.Enum):
    HOLDS = "HOLDS"
    NECESSARY_ONLY = "NECESSARY_ONLY"
    FAILS = "FAILS"


@dataclass(frozen=True)
class SSResult:
    """Outcome of the drift-dominated-by-diffusion check."""

    status: SSStatus
    failing_pivots: tuple[Power, ...]
    env_minus_piv: tuple[Power, ...]
    g_nonneg: bool


def check_strong_stochasticity(F: PowerSet, G: PowerSet) -> SSResult:
    """Decide whether drift can be bounded by diffusion near the origin.

    The necessary combinatorial condition places every drift pivot above all
    supporting lines of the diffusion powers.  It is also sufficient when
    the diffusion envelope consists of pivots only and the diffusion is
    non-negative; otherwise only necessity is certified.
    """
    if len(F) == 0 or len(G) == 0:
        raise EmptyPowerSetError("strong stochasticity needs nonempty drift and diffusion")
    failing = tuple(p for p in pivot_structure(F).pivots if not contains_in_S(G, p))
    envB = set(envelope(G).powers())
    pivB = set(pivot_structure(G).pivots)
    extra = tuple(sorted(envB - pivB))
    g_ok = _g_nonneg_near_origin(G)
    if failing:
        return SSResult(SSStatus.FAILS, failing, extra, g_ok)
    if not extra and g_ok:
        return SSResult(SSStatus.HOLDS, (), extra, g_ok)
    return SSResult(SSStatus.NECESSARY_ONLY, (), extra, g_ok)


def _sector_of(cp: CharacteristicPair, x: float, lam: float) -> int:
    """Sector index i with lambda^{m_{i+1}} <= x <= lambda^{m_i}."""
    n = len(cp.M)
    if n == 0:
        return 0
    if lam >= 1.0:
        return 0 if x >= 1.0 else n
    if x >= 1.0:
        return 0
    t = math.log(x) / math.log(lam)  # x = lam^t, t grows towards the origin
    for i, m in enumerate(cp.M):
        if t <= float(m):
            return i
    return n


def dd_ratio(cp: CharacteristicPair, x: float, lam: float) -> float:
    """Piecewise monomial approximating the drift-to-diffusion balance.

    On the sector between consecutive transition curves the value is
    x^{1+delta1} * lambda^{delta2}; the pieces agree on the curves.
    """
    if not (0.0 < x <= 1.0 and 0.0 < lam <= 1.0):
        raise DomainError(f"({x}, {lam}) outside (0,1]^2")
    i = _sector_of(cp, x, lam)
    d1, d2 = cp.deltas[i]
    return x ** (1 + d1) * lam ** d2


class PieceShape(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class DDCurvePiece:
    """One monomial arc of the ratio level curve.

    For non-vertical pieces x = eps^{eps_exp} * lambda^{lam_exp}; vertical
    pieces sit at lambda = lam_vertical.  lam_lo / lam_hi are the endpoint
    parameter values in curve order (lam_lo=None encodes 0).
    """

    index: int
    lam_lo: EpsPower | None
    lam_hi: EpsPower
    eps_exp: Fraction | None
    lam_exp: Fraction | None
    lam_vertical: EpsPower | None
    shape: PieceShape

    def x_at(self, lam: float, eps: float) -> float:
        if self.shape is PieceShape.VERTICAL:
            raise ValueError("vertical piece is not the graph of a function")
        return eps ** float(self.eps_exp) * lam ** float(self.lam_exp)


@dataclass(frozen=True)
class DDCurve:
    pieces: tuple[DDCurvePiece, ...]
    breakpoints: tuple[Fraction, ...]  # nu_i with lambda_i(eps) = eps^{nu_i}
    upright: bool

    def phi(self, lam: float, eps: float) -> float:
        """Height of the curve above lambda; requires an upright curve."""
        if not self.upright:
            raise ValueError("folded curve has no single-valued height")
        nus = [float(eps) ** float(nu) for nu in self.breakpoints]
        for piece, lo in zip(self.pieces, [0.0] + nus):
            hi = float(eps) ** float(self.breakpoints[piece.index]) \
                if piece.index < len(self.breakpoints) else 1.0
            if lo <= lam <= hi:
                return piece.x_at(lam, eps)
        raise DomainError(f"lambda={lam} outside [0,1]")


def dd_curve(cp: CharacteristicPair, eps: float | None = None) -> DDCurve:
    """Exact description of the eps^2 level set of the ratio function.

    The level set is one monomial arc per sector, joined at the transition
    curves at lambda_i(eps) = eps^{nu_i}.  The curve is the graph of a
    function of lambda iff every sector has alpha1 >= beta1.
    """
    ss = check_strong_stochasticity(cp.drift, cp.diffusion)
    if ss.status is SSStatus.FAILS:
        raise StrongStochasticityError(
            f"drift pivots {ss.failing_pivots} escape the diffusion support region")
    if not any(p[1] == 0 for p in cp.drift.powers()):
        raise HypothesisViolationError(
            "drift needs a pure-x term (a power (a1, 0)) for the level curve "
            "to span the parameter range")
    breakpoints = []
    for m in cp.M:
        denom = m + support_value(cp.drift, m) - support_value(cp.diffusion, m)
        if denom <= 0:
            raise HypothesisViolationError("ratio does not increase along a transition curve")
        breakpoints.append(Fraction(2) / denom)
    pieces = []
    n = len(cp.M)
    for i, (d1, d2) in enumerate(cp.deltas):
        lam_lo = EpsPower(1, breakpoints[i - 1]) if i > 0 else None
        lam_hi = EpsPower(1, breakpoints[i]) if i < n else EpsPower(1, 0)
        if 1 + d1 == 0:
            pieces.append(DDCurvePiece(i, lam_lo, lam_hi, None, None,
                                       EpsPower(1, Fraction(2, d2)),
                                       PieceShape.VERTICAL))
        else:
            shape = PieceShape.INCREASING if 1 + d1 > 0 else PieceShape.DECREASING
            pieces.append(DDCurvePiece(
                i, lam_lo, lam_hi,
                Fraction(2, 1 + d1), Fraction(-d2, 1 + d1), None, shape))
    upright = all(d1 >= 0 for d1, _ in cp.deltas)
    return DDCurve(tuple(pieces), tuple(breakpoints), upright)


class LimitRange(enum.Enum):
    PURE_DIFFUSIVE = "PURE_DIFFUSIVE"
    DD_SCALE = "DD_SCALE"
    DETERMINISTIC = "DETERMINISTIC"


@dataclass(frozen=True)
class LimitClassification:
    """Limit equation dY = F_limit(Y) dt + sqrt(G_limit(Y)) dB and its range."""

    range: LimitRange
    region: Region | None
    F_limit: UniPoly
    G_limit: UniPoly
    time_scale: EpsPower

    def __post_init__(self):
        f0, g0 = self.F_limit.is_zero(), self.G_limit.is_zero()
        ok = {LimitRange.PURE_DIFFUSIVE: f0 and not g0,
              LimitRange.DETERMINISTIC: g0 and not f0,
              LimitRange.DD_SCALE: not f0 and not g0}[self.range]
        if not ok:
            raise ValueError(f"limit polynomials inconsistent with range {self.range}")


def classify_isotropic(alpha: int, beta: int, a: EpsPower, b: EpsPower,
                       Q: UniPoly, V: UniPoly) -> LimitClassification:
    """Limit of a_eps(x(b_eps t) - x_star) for homogeneous leading parts.

    Q and V are the degree-alpha and degree-beta leading shapes of drift and
    diffusion; the range is set by comparing 1/a against eps^{2/(1+alpha-beta)}
    and the time scale is validated against the visible scale of the range.
    """
    if 1 + alpha - beta <= 0:
        raise SignError("need 1 + alpha - beta > 0 for a diffusive limit at a -> infinity")
    if a.exponent >= 0:
        raise ValueError("a must tend to infinity")
    inv_exp = -a.exponent
    threshold = Fraction(2, 1 + alpha - beta)
    drift_scale = (alpha - 1) * a.exponent
    diff_scale = -2 + (beta - 2) * a.exponent
    if inv_exp > threshold:
        rng = LimitRange.PURE_DIFFUSIVE
        _require_exponent(b, diff_scale)
    elif inv_exp < threshold:
        rng = LimitRange.DETERMINISTIC
        _require_exponent(b, drift_scale)
    else:
        rng = LimitRange.DD_SCALE
        _require_exponent(b, drift_scale)
    h = EpsPower(exact_coeff(a.coeff, 1 - alpha) * b.coeff,
                 (1 - alpha) * a.exponent + b.exponent)
    ell = EpsPower(exact_coeff(a.coeff, 2 - beta) * b.coeff,
                   2 + (2 - beta) * a.exponent + b.exponent)
    F_lim = Q.scaled(h.coeff) if h.exponent == 0 else UniPoly.zero()
    G_lim = V.scaled(ell.coeff) if ell.exponent == 0 else UniPoly.zero()
    return LimitClassification(rng, None, F_lim, G_lim, b)


def exact_coeff(c: Fraction, q: Fraction | int) -> Fraction:
    v = exact_pow(c, Fraction(q))
    return v if isinstance(v, Fraction) else Fraction(v)


def _require_exponent(b: EpsPower, expected: Fraction) -> None:
    if b.exponent != expected:
        raise WrongTimeScaleError(
            f"time scale exponent {b.exponent} does not match the visible scale "
            f"exponent {expected}")


def _axis_restriction(ps: PowerSet) -> PowerSet:
    return ps.restrict([p for p in ps.powers() if p[1] == 0])


def classify_parametrized(cp: CharacteristicPair, a: EpsPower, b: EpsPower,
                          lam: EpsPower | None) -> LimitClassification:
    """Limit classification around the origin for the scaling (a, b, lambda).

    lam=None runs the analysis on the parameter-free axis.  The range comes
    from the exponent of r(1/a_eps, lambda_eps) against eps^2; the limit
    polynomials are assembled exactly from the dominant terms on the region
    of (1/a, lambda).
    """
    ss = check_strong_stochasticity(cp.drift, cp.diffusion)
    if ss.status is SSStatus.FAILS:
        raise StrongStochasticityError("drift is not dominated by diffusion")
    if a.exponent >= 0:
        raise ValueError("a must tend to infinity")
    if lam is None:
        return _classify_on_axis(cp, a, b)
    inv_a = a.inverse()
    if cp.M:
        region = classify_region(inv_a, lam, cp.M)
    else:
        if lam.exponent <= 0:
            raise UnstableScaleError("lambda must tend to zero")
        region = Region(0)
    i = region.sector
    a1, a2 = cp.alphas[i]
    b1, b2 = cp.betas[i]
    d1, d2 = cp.deltas[i]
    r_exp = (1 + d1) * inv_a.exponent + d2 * lam.exponent
    drift_scale = (a1 - 1) * a.exponent - a2 * lam.exponent
    diff_scale = -2 + (b1 - 2) * a.exponent - b2 * lam.exponent
    if r_exp > 2:
        rng = LimitRange.PURE_DIFFUSIVE
        _require_exponent(b, diff_scale)
    elif r_exp < 2:
        rng = LimitRange.DETERMINISTIC
        _require_exponent(b, drift_scale)
    else:
        rng = LimitRange.DD_SCALE
        _require_exponent(b, drift_scale)
    if region.is_ray:
        h = EpsPower(a.coeff * b.coeff, a.exponent + b.exponent) \
            * _lam_power(lam, support_value(cp.drift, cp.M[i - 1]))
        ell = EpsPower(exact_coeff(a.coeff, 2) * b.coeff,
                       2 + 2 * a.exponent + b.exponent) \
            * _lam_power(lam, support_value(cp.diffusion, cp.M[i - 1]))
        Q = scale_functions(cp.drift, region, cp.M).w
        V = scale_functions(cp.diffusion, region, cp.M).w
    else:
        h = EpsPower(exact_coeff(a.coeff, 1 - a1) * b.coeff,
                     (1 - a1) * a.exponent + b.exponent) * _lam_power(lam, a2)
        ell = EpsPower(exact_coeff(a.coeff, 2 - b1) * b.coeff,
                       2 + (2 - b1) * a.exponent + b.exponent) * _lam_power(lam, b2)
        Q = UniPoly.from_terms({a1: cp.drift.coeff(cp.alphas[i])})
        V = UniPoly.from_terms({b1: cp.diffusion.coeff(cp.betas[i])})
    F_lim = Q.scaled(h.coeff) if h.exponent == 0 else UniPoly.zero()
    G_lim = V.scaled(ell.coeff) if ell.exponent == 0 else UniPoly.zero()
    return LimitClassification(rng, region, F_lim, G_lim, b)


def _lam_power(lam: EpsPower, q: Fraction | int) -> EpsPower:
    q = Fraction(q)
    return EpsPower(exact_coeff(lam.coeff, q), lam.exponent * q)


def _classify_on_axis(cp: CharacteristicPair, a: EpsPower,
                      b: EpsPower) -> LimitClassification:
    F0 = _axis_restriction(cp.drift_full)
    G0 = _axis_restriction(cp.diffusion_full)
    if len(G0) == 0:
        raise ZeroDiffusionAtBranchError("diffusion vanishes on the axis")
    beta1 = min(p[0] for p in G0.powers())
    V = UniPoly.from_terms({beta1: G0.coeff((beta1, 0))})
    if len(F0) == 0:
        b_exp = -2 + (beta1 - 2) * a.exponent
        _require_exponent(b, b_exp)
        ell = EpsPower(exact_coeff(a.coeff, 2 - beta1) * b.coeff,
                       2 + (2 - beta1) * a.exponent + b.exponent)
        return LimitClassification(LimitRange.PURE_DIFFUSIVE, Region(0),
                                   UniPoly.zero(), V.scaled(ell.coeff), b)
    alpha1 = min(p[0] for p in F0.powers())
    Q = UniPoly.from_terms({alpha1: F0.coeff((alpha1, 0))})
    return classify_isotropic(alpha1, beta1, a, b, Q, V)


@dataclass(frozen=True)
class BranchData:
    """Local data of a simple equilibrium branch x = z_star * lambda^{m_star}."""

    m_star: Slope
    z_star: Fraction | float
    dFdz: Fraction | float
    G_star_val: Fraction | float
    gamma_star: Fraction
    nu_star: Fraction
    slope_index: int


def level_polynomial(ps: PowerSet, m: Slope) -> UniPoly:
    """Coefficient polynomial of the active terms along x = z * lambda^m."""
    act = active_set(ps, m)
    terms: dict[int, Coeff] = {}
    for p in act.powers():
        terms[p[0]] = terms.get(p[0], 0) + act.coeff(p)
    return UniPoly.from_terms(terms)


def _rational_roots(poly: UniPoly) -> list[Fraction]:
    """Positive rational roots via the rational-root candidates."""
    terms = poly.terms()
    if not terms or any(isinstance(c, float) for c in terms.values()):
        return []
    den = math.lcm(*(Fraction(c).denominator for c in terms.values()))
    iterms = {e: int(Fraction(c) * den) for e, c in terms.items()}
    low = min(iterms)
    a0 = iterms[low]
    an = iterms[max(iterms)]
    roots = set()
    for p in _divisors(abs(a0)):
        for q in _divisors(abs(an)):
            z = Fraction(p, q)
            if poly(z) == 0:
                roots.add(z)
    return sorted(roots)


def _divisors(n: int) -> list[int]:
    out = []
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            out.extend((d, n // d))
    return sorted(set(out))


def _bisect_root(poly: UniPoly, z_max: float) -> float | None:
    grid = np.concatenate([np.geomspace(1e-9, 1.0, 200), np.linspace(1.0, z_max, 400)])
    vals = [float(poly(float(z))) for z in grid]
    for (z0, v0), (z1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if v0 == 0.0:
            return float(z0)
        if v0 * v1 < 0:
            lo, hi = float(z0), float(z1)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                vm = float(poly(mid))
                if vm == 0.0:
                    return mid
                if vm * v0 < 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-15 * max(1.0, hi):
                    break
            return 0.5 * (lo + hi)
    return None


def equilibrium_branch(cp: CharacteristicPair, i_star: int,
                       z_max: float = 100.0) -> BranchData:
    """Solve for the branch constant z_star on the slope M[i_star].

    The branch exists when the level polynomial of the drift has a simple
    positive root; diffusion must not vanish there.
    """
    m_star = cp.M[i_star]
    poly = level_polynomial(cp.drift, m_star)
    dpoly = poly.derivative()
    z_star: Fraction | float | None = None
    for z in _rational_roots(poly):
        if 0 < z <= z_max:
            z_star = z
            break
    if z_star is None:
        z_star = _bisect_root(poly, z_max)
    if z_star is None:
        raise NoPositiveSimpleRootError(
            f"no positive root of {poly} in (0, {z_max}]")
    dFdz = dpoly(z_star)
    if abs(float(dFdz)) <= 1e-9:
        raise NoPositiveSimpleRootError(f"root {z_star} of {poly} is not simple")
    g_poly = level_polynomial(cp.diffusion, m_star)
    G_star = g_poly(z_star)
    if float(G_star) <= 0.0:
        raise ZeroDiffusionAtBranchError(
            "diffusion is not positive on the branch, so drift cannot be "
            "dominated there")
    sA = support_value(cp.drift, m_star)
    sB = support_value(cp.diffusion, m_star)
    gamma = (m_star + sB - sA) / 2
    nu = Fraction(2) / (m_star + sA - sB)
    return BranchData(m_star, z_star, dFdz, G_star, gamma, nu, i_star)


def branch_position(cp: CharacteristicPair, br: BranchData, lam: float) -> float:
    """Numeric equilibrium x_star(lambda), refined from the leading order."""
    x0 = float(br.z_star) * lam ** float(br.m_star)
    f = cp.drift_full
    lo, hi = 0.5 * x0, 1.5 * x0
    flo, fhi = f.evaluate(lo, lam), f.evaluate(hi, lam)
    if flo * fhi > 0:
        return x0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        fm = f.evaluate(mid, lam)
        if fm == 0.0:
            return mid
        if fm * flo < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def classify_branch(cp: CharacteristicPair, br: BranchData, a: EpsPower,
                    b: EpsPower, lam: EpsPower) -> LimitClassification:
    """Limit classification of fluctuations around the equilibrium branch.

    Valid when 1/a is negligible next to the branch position lambda^{m_star};
    the range compares 1/a against eps * lambda^{gamma_star}, and the limit
    is linear drift with constant diffusion.
    """
    if a.exponent >= 0:
        raise ValueError("a must tend to infinity")
    if lam.exponent <= 0:
        raise BranchValidityError("lambda must tend to zero")
    inv_exp = -a.exponent
    if inv_exp <= br.m_star * lam.exponent:
        raise BranchValidityError(
            "1/a is not small next to the branch position; classify around "
            "the origin instead")
    sA = support_value(cp.drift, br.m_star)
    sB = support_value(cp.diffusion, br.m_star)
    threshold = 1 + br.gamma_star * lam.exponent
    drift_scale = (br.m_star - sA) * lam.exponent
    diff_scale = -2 - 2 * a.exponent - sB * lam.exponent
    if inv_exp > threshold:
        rng = LimitRange.PURE_DIFFUSIVE
        _require_exponent(b, diff_scale)
    elif inv_exp < threshold:
        rng = LimitRange.DETERMINISTIC
        _require_exponent(b, drift_scale)
    else:
        rng = LimitRange.DD_SCALE
        _require_exponent(b, drift_scale)
    h = EpsPower(b.coeff, b.exponent) * _lam_power(lam, sA - br.m_star)
    ell = EpsPower(exact_coeff(a.coeff, 2) * b.coeff,
                   2 + 2 * a.exponent + b.exponent) * _lam_power(lam, sB)
    Q = UniPoly.from_terms({1: br.dFdz})
    V = UniPoly.from_terms({0: br.G_star_val})
    F_lim = Q.scaled(h.coeff) if h.exponent == 0 else UniPoly.zero()
    G_lim = V.scaled(ell.coeff) if ell.exponent == 0 else UniPoly.zero()
    region = Region(2 * br.slope_index + 1, br.z_star)
    return LimitClassification(rng, region, F_lim, G_lim, b)
