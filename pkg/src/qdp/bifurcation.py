"""One-dimensional bifurcation catalog and the scale profile across it.

The drift power set determines the bifurcation type; the profile collects,
as functions of the parameter, the balance half-width and time scale around
the zero state and around the nontrivial equilibrium branch, split at the
parameter value where the branches become distinguishable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .analysis import BranchData, CharacteristicPair, dd_curve, PieceShape
from .asymptotics import EpsPower
from .errors import KindError
from .poset import PowerSet, envelope, support_value


class BifurcationKind(enum.Enum):
    SADDLE_NODE = "saddle-node"
    TRANSCRITICAL = "transcritical"
    PITCHFORK = "pitchfork"
    NONE = "none"

    @property
    def drift_exponents(self) -> tuple[int, int]:
        """(j1, j2) with drift powers {(j1,0), (j2,1)}."""
        table = {BifurcationKind.SADDLE_NODE: (2, 0),
                 BifurcationKind.TRANSCRITICAL: (2, 1),
                 BifurcationKind.PITCHFORK: (3, 1)}
        if self not in table:
            raise KindError("no drift exponents for an unclassified drift")
        return table[self]


_CATALOG = {
    frozenset({(2, 0), (0, 1)}): BifurcationKind.SADDLE_NODE,
    frozenset({(2, 0), (1, 1)}): BifurcationKind.TRANSCRITICAL,
    frozenset({(3, 0), (1, 1)}): BifurcationKind.PITCHFORK,
}


def detect_bifurcation(F: PowerSet) -> BifurcationKind:
    """Match the envelope of the drift powers against the catalog."""
    if len(F) == 0:
        return BifurcationKind.NONE
    powers = frozenset(envelope(F).powers())
    return _CATALOG.get(powers, BifurcationKind.NONE)


def canonical_noise(kind: BifurcationKind) -> PowerSet:
    """Generic diffusion for a catalog drift: the single power (j2, 0).

    This is what additive noise from two competing mechanisms produces when
    only the bifurcation-causing terms cancel.  Unit coefficient; rescale to
    taste.
    """
    _, j2 = kind.drift_exponents
    return PowerSet.from_coeffs({(j2, 0): 1})


@dataclass(frozen=True)
class EpsLamMonomial:
    """eps^eps_exp * lambda^lam_exp, modulo constant factors."""

    eps_exp: Fraction
    lam_exp: Fraction

    def __call__(self, eps: float, lam: float) -> float:
        return eps ** float(self.eps_exp) * lam ** float(self.lam_exp)

    def exponent_at(self, nu: Fraction) -> Fraction:
        """eps-exponent of the value at lambda = eps^nu."""
        return self.eps_exp + self.lam_exp * nu


class Shape(enum.Enum):
    INC = "increasing"
    DEC = "decreasing"
    CONST = "constant"
    VERTICAL = "vertical"


class TimeRegime(enum.Enum):
    SLOW = "slow"
    FAST_TO_ONE = "fast-to-one"
    IRRELEVANT_BEYOND = "irrelevant-beyond"


@dataclass(frozen=True)
class ProfilePiece:
    """Scales on one parameter interval [lambda_lo, lambda_hi]."""

    index: int
    lam_lo: EpsPower | None  # None encodes 0
    lam_hi: EpsPower
    phi: EpsLamMonomial | None  # None on vertical pieces
    b: EpsLamMonomial | None
    shape: Shape
    time_regime: TimeRegime
    irrelevant_beyond: EpsPower | None
    fold_warning: bool


@dataclass(frozen=True)
class ScaleProfile:
    pieces: tuple[ProfilePiece, ...]
    phi_star: EpsLamMonomial
    b_star: EpsLamMonomial
    lambda_star: EpsPower
    lambda_breaks: tuple[EpsPower, ...]
    upright: bool


def scale_profile(cp: CharacteristicPair, br: BranchData) -> ScaleProfile:
    """Balance half-widths and time scales across the parameter range.

    Around zero the half-width follows the ratio level curve piecewise; the
    time scale on each piece is phi^{1-alpha1} * lambda^{-alpha2}.  Around
    the branch, on [lambda_star, 1], the half-width is eps * lambda^{gamma}
    and the time scale lambda^{m - s_A}.  Folded or vertical pieces carry a
    warning instead of a phi value.
    """
    curve = dd_curve(cp)
    nus = list(curve.breakpoints) + [Fraction(0)]  # exponent of lam_hi per piece
    pieces = []
    for piece in curve.pieces:
        i = piece.index
        a1, a2 = cp.alphas[i]
        folded = piece.shape is not PieceShape.INCREASING
        if piece.shape is PieceShape.VERTICAL:
            pieces.append(ProfilePiece(i, piece.lam_lo, piece.lam_hi, None, None,
                                       Shape.VERTICAL, TimeRegime.SLOW, None, True))
            continue
        phi = EpsLamMonomial(piece.eps_exp, piece.lam_exp)
        b = EpsLamMonomial((1 - a1) * phi.eps_exp,
                           (1 - a1) * phi.lam_exp - a2)
        d2 = cp.deltas[i][1]
        shape = Shape.INC if d2 < 0 else Shape.DEC if d2 > 0 else Shape.CONST
        lo_nu = curve.breakpoints[i - 1] if i > 0 else None
        hi_nu = nus[i]
        regime, beyond = _time_regime(b, lo_nu, hi_nu)
        pieces.append(ProfilePiece(i, piece.lam_lo, piece.lam_hi, phi, b,
                                   shape, regime, beyond, folded))
    m = br.m_star
    sA = support_value(cp.drift, m)
    phi_star = EpsLamMonomial(Fraction(1), br.gamma_star)
    b_star = EpsLamMonomial(Fraction(0), m - sA)
    return ScaleProfile(tuple(pieces), phi_star, b_star,
                        EpsPower(1, br.nu_star),
                        tuple(EpsPower(1, nu) for nu in curve.breakpoints),
                        curve.upright)


def _time_regime(b: EpsLamMonomial, lo_nu: Fraction | None,
                 hi_nu: Fraction) -> tuple[TimeRegime, EpsPower | None]:
    """Tag a piece by the size of its time scale as eps -> 0.

    Endpoints lambda = eps^nu turn b into a pure eps power; the piece is
    slow when that exponent stays negative across the interval.
    """
    ends = [b.exponent_at(hi_nu)]
    if lo_nu is not None:
        ends.append(b.exponent_at(lo_nu))
    if max(ends) < 0:
        return TimeRegime.SLOW, None
    if b.eps_exp == 0 and b.lam_exp <= 0:
        return TimeRegime.FAST_TO_ONE, None
    if b.lam_exp < 0:
        # lambda where the monomial crosses 1: the balance time scale is
        # shorter than the natural one past this point.
        return TimeRegime.IRRELEVANT_BEYOND, EpsPower(1, -b.eps_exp / b.lam_exp)
    return TimeRegime.IRRELEVANT_BEYOND, EpsPower(1, lo_nu if lo_nu is not None else 0)
