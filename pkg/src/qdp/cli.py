"""Command-line entry point: analyze | diagram | simulate | validate.

All science lives in a single JSON config; flags only pick the command, the
config path, and the output directory, so every run is reproducible from
the config alone.  Reports embed the resolved config and tool version.
Exit codes: 0 ok, 1 usage, 2 analysis error, 3 validation fail.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (CharacteristicPair, LimitClassification, SSStatus,
                       branch_position, check_strong_stochasticity,
                       classify_branch, classify_parametrized, dd_curve,
                       equilibrium_branch)
from .asymptotics import EpsPower
from .bifurcation import (BifurcationKind, canonical_noise, detect_bifurcation,
                          scale_profile)
from .errors import QdpError, UsageError
from .poset import PowerSet
from .serialize import (eps_power_from_json, eps_power_to_json,
                        model_from_json, power_set_to_json,
                        power_set_from_json, region_to_json, sde_from_json,
                        sde_to_json, uni_poly_to_json)
from .simulate import RNG_ALGORITHM, DDMCModel, SDEModel
from .validate import (PipelineConfig, Thresholds, moment_compare,
                       run_pipeline)

ERRATA_NOTES = [
    "gamma_star uses the halved exponent (m + s_B - s_A)/2; the unhalved "
    "variant breaks the crossing identity phi_star(lambda_star) ~ "
    "phi(lambda_star) and is rejected.",
    "the time scale on the branch is lambda^{m - s_A}; inserting an extra "
    "-j2 in the exponent breaks the crossing identity at lambda_star and "
    "is rejected.",
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")


def _characteristics(config: dict) -> tuple[PowerSet, PowerSet, DDMCModel | None]:
    has_fg = "F" in config and "G" in config
    has_model = "model" in config
    if has_fg == has_model:
        raise UsageError("config must contain exactly one of F/G or model")
    if has_model:
        model = model_from_json(config["model"])
        from .simulate import characteristics_from_rates
        ch = characteristics_from_rates(model)
        return ch.F, ch.G, model
    return (power_set_from_json(config["F"]),
            power_set_from_json(config["G"]), None)


def _scale(config: dict, name: str, default: EpsPower | None = None) -> EpsPower | None:
    scales = config.get("scales", {})
    if name not in scales or scales[name] is None:
        return default
    return eps_power_from_json(scales[name])


def _json_frac(x) -> str | float | None:
    if x is None:
        return None
    return str(x) if isinstance(x, Fraction) else float(x)


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _provenance(config: dict) -> dict:
    return {"tool": {"name": "qdp", "version": __version__, "rng": RNG_ALGORITHM},
            "config": config}


def _classification_json(cls: LimitClassification) -> dict:
    return {"range": cls.range.value,
            "region": None if cls.region is None else region_to_json(cls.region),
            "F_limit": uni_poly_to_json(cls.F_limit),
            "G_limit": uni_poly_to_json(cls.G_limit),
            "time_scale": eps_power_to_json(cls.time_scale)}


def _branch_json(br) -> dict:
    return {"m_star": _json_frac(br.m_star),
            "z_star": _json_frac(br.z_star),
            "dFdz": _json_frac(br.dFdz),
            "G_star": _json_frac(br.G_star_val),
            "gamma_star": _json_frac(br.gamma_star),
            "nu_star": _json_frac(br.nu_star),
            "slope_index": br.slope_index}


def _default_branch_index(cp: CharacteristicPair) -> int | None:
    from .poset import active_set
    for i, m in enumerate(cp.M):
        if len(active_set(cp.drift, m)) >= 2:
            return i
    return None


def cmd_analyze(config: dict, out: Path, svg: bool = False) -> int:
    F, G, _ = _characteristics(config)
    report = _provenance(config)
    report["F"] = power_set_to_json(F)
    report["G"] = power_set_to_json(G)
    report["errata_notes"] = ERRATA_NOTES
    ss = check_strong_stochasticity(F, G)
    report["strong_stochasticity"] = {
        "status": ss.status.value,
        "failing_pivots": [list(p) for p in ss.failing_pivots],
        "env_minus_piv": [list(p) for p in ss.env_minus_piv],
        "g_nonneg": ss.g_nonneg}
    if ss.status is SSStatus.FAILS:
        report["error"] = {"type": "StrongStochasticityError",
                           "message": "drift is not dominated by diffusion"}
        _write_json(out / "analysis.json", report)
        return 2
    try:
        cp = CharacteristicPair.from_power_sets(F, G)
        report["M"] = [str(m) for m in cp.M]
        report["pivots"] = {"A": [list(p) for p in cp.alphas],
                            "B": [list(p) for p in cp.betas]}
        report["delta"] = [list(d) for d in cp.deltas]
        kind = detect_bifurcation(cp.drift)
        bif = {"kind": kind.value}
        if kind is not BifurcationKind.NONE:
            j1, j2 = kind.drift_exponents
            lead = cp.drift.coeff((j1, 0))
            bif.update({"j1": j1, "j2": j2,
                        "lead_coeff_sign": int(math.copysign(1, lead)),
                        "canonical_noise": power_set_to_json(canonical_noise(kind))})
        report["bifurcation"] = bif
        curve = dd_curve(cp)
        report["dd_curve"] = {
            "upright": curve.upright,
            "breakpoints": [str(nu) for nu in curve.breakpoints],
            "pieces": [_piece_json(p) for p in curve.pieces],
            "fold_intervals": [
                [_eps_json(p.lam_lo), _eps_json(p.lam_hi)]
                for p in curve.pieces if p.shape.value != "increasing"]}
        bi = config.get("branch_index", _default_branch_index(cp))
        if bi is not None:
            try:
                br = equilibrium_branch(cp, bi)
                report["branch"] = _branch_json(br)
            except QdpError as exc:
                report["branch"] = {"error": {"type": type(exc).__name__,
                                              "message": str(exc)}}
                br = None
        else:
            report["branch"] = None
            br = None
        a = _scale(config, "a")
        b = _scale(config, "b")
        if a is not None and b is not None:
            lam = _scale(config, "lambda")
            cls = classify_parametrized(cp, a, b, lam)
            report["classification"] = _classification_json(cls)
        else:
            report["classification"] = None
    except QdpError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _write_json(out / "analysis.json", report)
        return 2
    _write_json(out / "analysis.json", report)
    return 0


def _eps_json(e: EpsPower | None):
    return None if e is None else eps_power_to_json(e)


def _piece_json(p) -> dict:
    return {"index": p.index,
            "lam_lo": _eps_json(p.lam_lo), "lam_hi": _eps_json(p.lam_hi),
            "eps_exp": _json_frac(p.eps_exp), "lam_exp": _json_frac(p.lam_exp),
            "vertical_at": _eps_json(p.lam_vertical),
            "shape": p.shape.value}


def cmd_diagram(config: dict, out: Path, svg: bool = False) -> int:
    F, G, _ = _characteristics(config)
    eps_values = config.get("epsilon")
    if not eps_values:
        raise UsageError("diagram needs an epsilon value")
    eps = float(eps_values[0])
    cp = CharacteristicPair.from_power_sets(F, G)
    curve = dd_curve(cp)
    bi = config.get("branch_index", _default_branch_index(cp))
    br = equilibrium_branch(cp, bi) if bi is not None else None
    n_grid = int(config.get("grid_points", 200))

    rows = []
    for piece in curve.pieces:
        lo = piece.lam_lo(eps) if piece.lam_lo is not None else None
        hi = piece.lam_hi(eps)
        if piece.shape.value == "vertical":
            lam_v = piece.lam_vertical(eps)
            for x in np.geomspace(min(lo or hi, hi) * 1e-2, 1.0, n_grid // 4):
                rows.append((lam_v, x, piece.index))
            continue
        lo = lo if lo is not None else min(hi, 1.0) * 1e-4
        lo, hi = min(lo, hi), max(lo, hi)
        for lam in np.geomspace(max(lo, 1e-12), hi, n_grid // len(curve.pieces) + 2):
            rows.append((lam, piece.x_at(lam, eps), piece.index))
    _write_csv(out / "ddcurve.csv", ["lambda", "x", "piece_index"], rows)

    if br is not None:
        profile = scale_profile(cp, br)
        lam_star = profile.lambda_star(eps)
        grid = np.geomspace(1e-4, 1.0, n_grid)
        rows = []
        for lam in grid:
            piece = _piece_at(profile, lam, eps)
            phi = piece.phi(eps, lam) if piece is not None and piece.phi else ""
            bval = piece.b(eps, lam) if piece is not None and piece.b else ""
            regime = piece.time_regime.value if piece is not None else ""
            if lam >= lam_star:
                xs = branch_position(cp, br, lam)
                w = profile.phi_star(eps, lam)
                lo_x, hi_x, bstar = xs - w, xs + w, profile.b_star(eps, lam)
            else:
                lo_x = hi_x = bstar = ""
            rows.append((lam, phi, bval, lo_x, hi_x, bstar, regime))
        _write_csv(out / "diagram.csv",
                   ["lambda", "phi", "b", "phi_star_lo", "phi_star_hi",
                    "b_star", "regime"], rows)
    if svg:
        _render_svg(out, cp, br, eps, n_grid)
    return 0


def _piece_at(profile, lam: float, eps: float):
    for piece in profile.pieces:
        lo = piece.lam_lo(eps) if piece.lam_lo is not None else 0.0
        hi = piece.lam_hi(eps)
        if min(lo, hi) <= lam <= max(lo, hi):
            return piece
    return None


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                for v in row) + "\n")


def _render_svg(out: Path, cp, br, eps: float, n_grid: int) -> None:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    curve = dd_curve(cp)
    fig, ax = plt.subplots(figsize=(6, 4))
    for piece in curve.pieces:
        if piece.shape.value == "vertical":
            lam_v = piece.lam_vertical(eps)
            ax.plot([lam_v, lam_v], [1e-4, 1.0], "b-")
            continue
        lo = piece.lam_lo(eps) if piece.lam_lo is not None else 1e-4
        hi = piece.lam_hi(eps)
        lam = np.geomspace(min(lo, hi), max(lo, hi), 100)
        ax.plot(lam, [piece.x_at(v, eps) for v in lam], "b-")
    if br is not None:
        lam_star = eps ** float(br.nu_star)
        lam = np.geomspace(lam_star, 1.0, 100)
        xs = np.array([branch_position(cp, br, v) for v in lam])
        w = np.array([eps * v ** float(br.gamma_star) for v in lam])
        ax.plot(lam, xs, "k-")
        ax.plot(lam, xs - w, "b--")
        ax.plot(lam, xs + w, "b--")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel("x")
    fig.savefig(out / "diagram.svg")
    plt.close(fig)


def _resolved_model(config: dict, eps: float, lam_seq: EpsPower | None) -> DDMCModel:
    if "model" not in config:
        raise UsageError("simulation commands need a chain model")
    template = model_from_json(config["model"])
    N = int(round(eps ** -2))
    lam = lam_seq(eps) if lam_seq is not None else template.lam
    return DDMCModel(template.jumps, N, lam)


def _pipeline_config(config: dict) -> PipelineConfig:
    a = _scale(config, "a")
    b = _scale(config, "b")
    x0 = _scale(config, "x0")
    if a is None or b is None or x0 is None:
        raise UsageError("validate/simulate need scales a, b, and x0")
    lam_seq = _scale(config, "lambda")
    replicas = int(config.get("replicas", 0))
    if replicas < 2:
        raise UsageError("need at least two replicas")
    center_mode = config.get("scales", {}).get("center", "zero")

    F, G, _ = _characteristics(config)
    cp = CharacteristicPair.from_power_sets(F, G)

    def center_for(eps: float) -> float:
        if center_mode == "zero":
            return 0.0
        if center_mode == "branch":
            bi = config.get("branch_index", _default_branch_index(cp))
            br = equilibrium_branch(cp, bi)
            lam = lam_seq(eps) if lam_seq is not None else \
                model_from_json(config["model"]).lam
            return branch_position(cp, br, lam)
        return float(center_mode)

    if "sde" in config:
        sde = sde_from_json(config["sde"])
    else:
        if center_mode == "zero":
            cls = classify_parametrized(cp, a, b, lam_seq)
            domain: tuple[float | None, float | None] = (0.0, None)
        else:
            bi = config.get("branch_index", _default_branch_index(cp))
            br = equilibrium_branch(cp, bi)
            cls = classify_branch(cp, br, a, b, lam_seq)
            domain = (None, None)
        sde = SDEModel(cls.F_limit, cls.G_limit, domain, "absorb")

    return PipelineConfig(
        model_for=lambda eps: _resolved_model(config, eps, lam_seq),
        x0_for=lambda eps: x0(eps),
        a_for=lambda eps: a(eps),
        b_for=lambda eps: b(eps),
        center_for=center_for,
        sde=sde,
        horizon=float(config.get("horizon", 1.0)),
        dt=float(config.get("dt", 1e-3)),
        n_chain=replicas,
        n_sde=int(config.get("em_replicas", 10000)),
        seed=int(config.get("seed", 0)),
        t_ref=float(config.get("t_ref", 1.0)),
        thresholds=_thresholds(config))


def _thresholds(config: dict) -> Thresholds:
    t = config.get("thresholds", {})
    return Thresholds(
        ks_coeff=float(t.get("ks_coeff", Thresholds.ks_coeff)),
        mean_z=float(t.get("mean_z", Thresholds.mean_z)),
        var_ratio_band=tuple(t.get("var_ratio_band", Thresholds.var_ratio_band)),
        absorbed_z=float(t.get("absorbed_z", Thresholds.absorbed_z)))


def cmd_simulate(config: dict, out: Path, svg: bool = False) -> int:
    cfg = _pipeline_config(config)
    eps_values = config.get("epsilon")
    if not eps_values:
        raise UsageError("simulate needs epsilon values")
    manifest = _provenance(config)
    manifest["files"] = []
    for eps in eps_values:
        chain, limit = run_pipeline(cfg, float(eps))
        for tag, ens in (("chain", chain), ("limit", limit)):
            name = f"ensemble_{tag}_eps{eps}.jsonl"
            path = out / name
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as fh:
                for r, p in enumerate(ens.replicas):
                    rec = {"seed": cfg.seed + (0 if tag == "chain" else 1),
                           "replica": r,
                           "terminal": p.terminal,
                           "path": [[float(t), float(v)]
                                    for t, v in zip(p.times, p.values)]}
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            manifest["files"].append(name)
    _write_json(out / "simulate_manifest.json", manifest)
    return 0


def cmd_validate(config: dict, out: Path, svg: bool = False) -> int:
    cfg = _pipeline_config(config)
    eps_values = config.get("epsilon")
    if not eps_values:
        raise UsageError("validate needs epsilon values")
    times = [float(t) for t in config.get("compare_times", [cfg.t_ref])]
    report = _provenance(config)
    report["sde"] = sde_to_json(cfg.sde)
    results = {}
    all_pass = True
    for eps in eps_values:
        chain, limit = run_pipeline(cfg, float(eps),
                                    record_times=sorted({0.0, *times, cfg.horizon}))
        cmp_report = moment_compare(chain, limit, times, cfg.thresholds)
        results[str(eps)] = cmp_report.as_dict()
        all_pass = all_pass and cmp_report.passed
    report["results"] = results
    report["pass"] = all_pass
    _write_json(out / "validate_report.json", report)
    return 0 if all_pass else 3


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="qdp", description=__doc__)
    parser.add_argument("command",
                        choices=["analyze", "diagram", "simulate", "validate"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=".")
    parser.add_argument("--svg", action="store_true")
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config)
        out = Path(args.out)
        handler = {"analyze": cmd_analyze, "diagram": cmd_diagram,
                   "simulate": cmd_simulate, "validate": cmd_validate}[args.command]
        return handler(config, out, svg=args.svg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except QdpError as exc:
        print(f"analysis error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
