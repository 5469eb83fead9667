"""Distributional comparison of path ensembles and convergence trends.

Ensembles are compared through their time-t marginals: a two-sample KS
statistic on the empirical CDFs and mean/variance tables with jackknife
standard errors.  Replicas that were absorbed or stopped before t
contribute their terminal value, and the absorbed fractions themselves are
part of the comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import HorizonError, UsageError
from .simulate import (ABSORBED, DDMCModel, SamplePath, SDEModel, em_ensemble,
                       replica_rng, rescale, ssa_ensemble)

#: Asymptotic two-sample KS critical coefficient at the 1% level.
KS_COEFF_1PCT = 1.6276


@dataclass(frozen=True)
class EnsembleMeta:
    eps: float | None = None
    N: int | None = None
    lam: float | None = None
    a: float = 1.0
    b: float = 1.0
    center: float = 0.0
    seed_base: int | None = None
    horizon: float | None = None


@dataclass
class Ensemble:
    replicas: list[SamplePath]
    meta: EnsembleMeta

    def __post_init__(self):
        if len(self.replicas) < 2:
            raise ValueError("an ensemble needs at least two replicas")

    def horizon(self) -> float:
        if self.meta.horizon is not None:
            return self.meta.horizon
        return max(p.horizon() for p in self.replicas)

    def marginal(self, t: float) -> np.ndarray:
        if t > self.horizon() + 1e-12:
            raise HorizonError(f"t={t} beyond ensemble horizon {self.horizon()}")
        return np.array([p.value_at(t) for p in self.replicas])

    def absorbed_fraction(self) -> float:
        n = len(self.replicas)
        return sum(p.terminal == ABSORBED for p in self.replicas) / n


def ks_statistic(s1: np.ndarray, s2: np.ndarray) -> float:
    """Exact sup-distance between the two empirical CDFs."""
    s1 = np.sort(np.asarray(s1, dtype=float))
    s2 = np.sort(np.asarray(s2, dtype=float))
    pts = np.concatenate([s1, s2])
    c1 = np.searchsorted(s1, pts, side="right") / len(s1)
    c2 = np.searchsorted(s2, pts, side="right") / len(s2)
    return float(np.max(np.abs(c1 - c2)))


def ks_critical(n1: int, n2: int, coeff: float = KS_COEFF_1PCT) -> float:
    return coeff * math.sqrt((n1 + n2) / (n1 * n2))


def marginal_ks(e1: Ensemble, e2: Ensemble, t: float) -> float:
    """Two-sample KS statistic of the time-t marginals."""
    if len(e1.replicas) < 100 or len(e2.replicas) < 100:
        raise ValueError("marginal comparison needs at least 100 replicas per side")
    return ks_statistic(e1.marginal(t), e2.marginal(t))


def jackknife_se_mean(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def jackknife_se_var(values: np.ndarray) -> float:
    """Jackknife standard error of the sample variance."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    s = values.sum() - values
    s2 = (values ** 2).sum() - values ** 2
    m = s / (n - 1)
    loo = s2 / (n - 1) - m * m
    return float(math.sqrt((n - 1) / n * ((loo - loo.mean()) ** 2).sum()))


@dataclass(frozen=True)
class MomentRow:
    t: float
    mean1: float
    mean2: float
    var1: float
    var2: float
    se_mean1: float
    se_mean2: float
    se_var1: float
    se_var2: float


@dataclass(frozen=True)
class Thresholds:
    ks_coeff: float = KS_COEFF_1PCT
    mean_z: float = 3.0
    var_ratio_band: tuple[float, float] = (0.8, 1.25)
    absorbed_z: float = 3.0


@dataclass
class ComparisonReport:
    ks_at_times: dict[float, float]
    moment_table: list[MomentRow]
    absorbed1: float
    absorbed2: float
    passed: bool
    thresholds: Thresholds
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "ks_at_times": {repr(t): v for t, v in self.ks_at_times.items()},
            "moment_table": [vars(r) for r in self.moment_table],
            "absorbed_fraction": [self.absorbed1, self.absorbed2],
            "pass": self.passed,
            "thresholds": {
                "ks_coeff": self.thresholds.ks_coeff,
                "mean_z": self.thresholds.mean_z,
                "var_ratio_band": list(self.thresholds.var_ratio_band),
                "absorbed_z": self.thresholds.absorbed_z,
            },
            "notes": self.notes,
        }


def moment_compare(e1: Ensemble, e2: Ensemble, times: Sequence[float],
                   thresholds: Thresholds = Thresholds(),
                   include_ks: bool = True) -> ComparisonReport:
    """Mean/variance comparison with jackknife errors, plus KS per time.

    Passes when at every time the means agree within mean_z combined
    standard errors, the variance ratio sits in the configured band (skipped
    against a degenerate zero-variance comparator), the KS statistic is
    below its asymptotic critical value, and the absorbed fractions agree
    within absorbed_z combined binomial errors.
    """
    rows = []
    notes: list[str] = []
    passed = True
    n1, n2 = len(e1.replicas), len(e2.replicas)
    for t in times:
        m1 = e1.marginal(t)
        m2 = e2.marginal(t)
        row = MomentRow(
            t, float(np.mean(m1)), float(np.mean(m2)),
            float(np.var(m1, ddof=1)), float(np.var(m2, ddof=1)),
            jackknife_se_mean(m1), jackknife_se_mean(m2),
            jackknife_se_var(m1), jackknife_se_var(m2))
        rows.append(row)
        se = math.hypot(row.se_mean1, row.se_mean2)
        if abs(row.mean1 - row.mean2) > thresholds.mean_z * max(se, 1e-300):
            passed = False
            notes.append(f"mean mismatch at t={t}")
        lo, hi = thresholds.var_ratio_band
        if row.var2 == 0.0 or row.var1 == 0.0:
            if max(row.var1, row.var2) > 0.0:
                notes.append(f"degenerate comparator at t={t}; variance check skipped")
        elif not (lo <= row.var1 / row.var2 <= hi):
            passed = False
            notes.append(f"variance ratio {row.var1 / row.var2:.4f} outside band at t={t}")
    ks = {}
    if include_ks:
        crit = ks_critical(n1, n2, thresholds.ks_coeff)
        for t in times:
            ks[t] = ks_statistic(e1.marginal(t), e2.marginal(t))
            if ks[t] > crit:
                passed = False
                notes.append(f"KS {ks[t]:.4f} above critical {crit:.4f} at t={t}")
    f1, f2 = e1.absorbed_fraction(), e2.absorbed_fraction()
    se_abs = math.sqrt(f1 * (1 - f1) / n1 + f2 * (1 - f2) / n2)
    if abs(f1 - f2) > thresholds.absorbed_z * max(se_abs, 1e-300):
        passed = False
        notes.append("absorbed fractions differ")
    return ComparisonReport(ks, rows, f1, f2, passed, thresholds, notes)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to rerun chain-vs-limit at one epsilon.

    The chain model is built per epsilon through `model_for`; the rescaling
    maps its paths onto the limit's coordinates; the limit SDE is integrated
    with matching initial condition at the same rescaled horizon.
    """

    model_for: Callable[[float], DDMCModel]
    x0_for: Callable[[float], float]
    a_for: Callable[[float], float]
    b_for: Callable[[float], float]
    center_for: Callable[[float], float]
    sde: SDEModel
    horizon: float
    dt: float
    n_chain: int
    n_sde: int
    seed: int
    t_ref: float = 1.0
    thresholds: Thresholds = Thresholds()


def run_pipeline(cfg: PipelineConfig, eps: float,
                 record_times: Sequence[float] | None = None
                 ) -> tuple[Ensemble, Ensemble]:
    """Simulate, rescale, and integrate: the two comparable ensembles."""
    model = cfg.model_for(eps)
    a = cfg.a_for(eps)
    b = cfg.b_for(eps)
    center = cfg.center_for(eps)
    x0 = cfg.x0_for(eps)
    X0 = round(x0 * model.N)
    x0 = X0 / model.N  # land exactly on the lattice
    y0 = a * (x0 - center)
    T_chain = cfg.horizon * b
    if record_times is None:
        record_times = np.linspace(0.0, cfg.horizon, 33)
    record_times = np.unique(np.asarray(record_times, dtype=float))
    chain_times = record_times * b
    raw = ssa_ensemble(model, x0, T_chain, cfg.n_chain, cfg.seed,
                       record_times=chain_times)
    chain = Ensemble([rescale(p, a, b, center) for p in raw],
                     EnsembleMeta(eps, model.N, model.lam, a, b, center,
                                  cfg.seed, cfg.horizon))
    sde_paths = em_ensemble(cfg.sde, y0, cfg.horizon, cfg.dt, cfg.n_sde,
                            cfg.seed + 1, record_times=record_times)
    limit = Ensemble(sde_paths, EnsembleMeta(eps, None, None, 1.0, 1.0, 0.0,
                                             cfg.seed + 1, cfg.horizon))
    return chain, limit


@dataclass(frozen=True)
class TrendPoint:
    eps: float
    ks: float
    band_lo: float
    band_hi: float


@dataclass
class TrendReport:
    points: list[TrendPoint]
    non_increasing: bool

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("eps,ks,band_lo,band_hi\n")
            for p in self.points:
                fh.write(f"{p.eps!r},{p.ks!r},{p.band_lo!r},{p.band_hi!r}\n")


def _bootstrap_band(s1: np.ndarray, s2: np.ndarray, seed: int,
                    n_boot: int = 200) -> tuple[float, float]:
    rng = replica_rng(seed, 0)
    stats = np.empty(n_boot)
    for i in range(n_boot):
        r1 = s1[rng.integers(0, len(s1), len(s1))]
        r2 = s2[rng.integers(0, len(s2), len(s2))]
        stats[i] = ks_statistic(r1, r2)
    return float(np.quantile(stats, 0.025)), float(np.quantile(stats, 0.975))


def convergence_trend(cfg: PipelineConfig, eps_grid: Sequence[float]) -> TrendReport:
    """KS at the reference time along a decreasing epsilon grid.

    The sequence is flagged non-increasing when each statistic stays below
    the upper bootstrap band of its predecessor.
    """
    eps_grid = list(eps_grid)
    if len(eps_grid) < 2 or any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise UsageError("epsilon grid must be decreasing with at least two values")
    points = []
    for j, eps in enumerate(eps_grid):
        chain, limit = run_pipeline(cfg, eps, record_times=[0.0, cfg.t_ref, cfg.horizon])
        s1 = chain.marginal(cfg.t_ref)
        s2 = limit.marginal(cfg.t_ref)
        lo, hi = _bootstrap_band(s1, s2, cfg.seed + 1000 + j)
        points.append(TrendPoint(eps, ks_statistic(s1, s2), lo, hi))
    non_inc = all(nxt.ks <= prev.band_hi
                  for prev, nxt in zip(points, points[1:]))
    return TrendReport(points, non_inc)
