"""JSON wire formats for the core value types.

Rationals travel as strings ("p/q", or "p" for integers) so nothing is lost
to floating point.
"""

from __future__ import annotations

from fractions import Fraction

from .asymptotics import EpsPower, Region
from .polynomial import UniPoly
from .poset import PowerSet
from .simulate import DDMCModel, Jump, SDEModel


def frac_to_str(x: Fraction | float) -> str | float:
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def power_set_to_json(ps: PowerSet) -> list[dict]:
    return [{"power": [p[0], p[1]], "coeff": str(c)}
            for p, c in sorted(ps.as_dict().items())]


def power_set_from_json(data: list[dict]) -> PowerSet:
    return PowerSet.from_coeffs({tuple(rec["power"]): Fraction(rec["coeff"])
                                 for rec in data})


def eps_power_to_json(s: EpsPower) -> dict:
    return {"coeff": str(s.coeff), "exp": str(s.exponent)}


def eps_power_from_json(data: dict) -> EpsPower:
    return EpsPower(Fraction(data["coeff"]), Fraction(data["exp"]))


def region_to_json(r: Region) -> dict:
    return {"region": r.index,
            "z": None if r.z is None else frac_to_str(r.z)}


def uni_poly_to_json(p: UniPoly) -> dict:
    return {str(e): frac_to_str(c) for e, c in sorted(p.terms().items())}


def uni_poly_from_json(data: dict) -> UniPoly:
    return UniPoly.from_terms({
        int(e): (Fraction(c) if isinstance(c, str) else float(c))
        for e, c in data.items()})


def model_to_json(m: DDMCModel) -> dict:
    return {"jumps": [{"delta": j.delta, "rate": power_set_to_json(j.rate)}
                      for j in m.jumps],
            "N": m.N, "lambda": m.lam}


def model_from_json(data: dict) -> DDMCModel:
    jumps = tuple(Jump(int(j["delta"]), power_set_from_json(j["rate"]))
                  for j in data["jumps"])
    return DDMCModel(jumps, int(data["N"]), float(data["lambda"]))


def sde_to_json(s: SDEModel) -> dict:
    lo, hi = s.domain
    return {"drift": uni_poly_to_json(s.drift),
            "diffusion": uni_poly_to_json(s.diffusion),
            "domain": [lo, hi], "boundary": s.boundary}


def sde_from_json(data: dict) -> SDEModel:
    lo, hi = data.get("domain", [None, None])
    return SDEModel(uni_poly_from_json(data["drift"]),
                    uni_poly_from_json(data["diffusion"]),
                    (lo, hi), data.get("boundary", "absorb"))
