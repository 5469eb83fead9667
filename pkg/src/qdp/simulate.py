"""Exact jump-chain simulation, path rescaling, and SDE integration.

The chain lives on integer states X with rates N * q_delta(X/N, lambda) and
is simulated exactly by the direct method (exponential waiting time over
the total rate, categorical jump choice).  Replica r of a run seeded with s
draws from philox4x64 keyed by SeedSequence(s, spawn_key=(r,)), so ensembles
are reproducible across machines and independent across replicas.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analysis import CharacteristicPair
from .errors import CancellationToZeroError, RateNegativityError
from .polynomial import UniPoly
from .poset import PowerSet

RNG_ALGORITHM = "philox4x64/SeedSequence(seed, spawn_key=(replica,))"

#: Terminal flags for sample paths.
TIME_LIMIT = "time-limit"
ABSORBED = "absorbed"
EXITED = "exited"
STEP_CAP = "step-cap"

DEFAULT_MAX_STEPS = 10 ** 8


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replica,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Jump:
    delta: int
    rate: PowerSet  # rate density q_delta(x, lambda)


@dataclass(frozen=True)
class DDMCModel:
    """Density-dependent chain: jumps with polynomial rate densities."""

    jumps: tuple[Jump, ...]
    N: int
    lam: float

    def __post_init__(self):
        if not self.jumps:
            raise ValueError("model needs at least one jump")
        if self.N < 1:
            raise ValueError("system size must be positive")
        for j in self.jumps:
            if any(j.rate.evaluate(x, self.lam) < -1e-12
                   for x in np.linspace(0.0, 2.0, 41)):
                raise ValueError(
                    f"rate density for jump {j.delta} is negative on [0, 2] "
                    f"at lambda={self.lam}")

    def rate_polys(self) -> list[tuple[int, list[tuple[int, float]]]]:
        """Per jump: (delta, [(x-exponent, coefficient at this lambda)])."""
        out = []
        for j in self.jumps:
            coeffs: dict[int, float] = {}
            for p, c in j.rate.as_dict().items():
                coeffs[p[0]] = coeffs.get(p[0], 0.0) + float(c) * self.lam ** p[1]
            out.append((j.delta, sorted(coeffs.items())))
        return out


@dataclass(frozen=True)
class Characteristics:
    """Drift and diffusion of a chain, exact and envelope-reduced."""

    F: PowerSet
    G: PowerSet
    F_env: PowerSet
    G_env: PowerSet

    def pair(self) -> CharacteristicPair:
        return CharacteristicPair.from_power_sets(self.F, self.G)


def characteristics_from_rates(model: DDMCModel) -> Characteristics:
    """F = sum(delta * q_delta), G = sum(delta^2 * q_delta), exactly."""
    F = PowerSet(())
    G = PowerSet(())
    for j in model.jumps:
        F = F.plus(j.rate.scaled(j.delta))
        G = G.plus(j.rate.scaled(j.delta * j.delta))
    if len(F) == 0 and len(G) == 0:
        raise CancellationToZeroError("drift and diffusion both vanish identically")
    from .poset import envelope
    F_env = F.restrict(envelope(F).powers()) if len(F) else F
    G_env = G.restrict(envelope(G).powers()) if len(G) else G
    return Characteristics(F, G, F_env, G_env)


@dataclass
class SamplePath:
    """Time-stamped scalar trajectory; constant after its last time."""

    times: np.ndarray
    values: np.ndarray
    terminal: str
    clamp_count: int = 0

    def value_at(self, t: float) -> float:
        """State at time t: value at the last recorded time <= t."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[max(i, 0)])

    def horizon(self) -> float:
        return float(self.times[-1])


class _DrawBuffer:
    """Blocked draws from one generator; keeps the scalar loop cheap."""

    def __init__(self, rng: np.random.Generator, size: int = 2048):
        self._rng = rng
        self._size = size
        self._exp = rng.standard_exponential(size)
        self._uni = rng.random(size)
        self._ie = 0
        self._iu = 0

    def exponential(self) -> float:
        if self._ie >= self._size:
            self._exp = self._rng.standard_exponential(self._size)
            self._ie = 0
        v = self._exp[self._ie]
        self._ie += 1
        return v

    def uniform(self) -> float:
        if self._iu >= self._size:
            self._uni = self._rng.random(self._size)
            self._iu = 0
        v = self._uni[self._iu]
        self._iu += 1
        return v


def ssa_simulate(model: DDMCModel, x0: float, T: float, seed: int,
                 replica: int = 0,
                 record_times: Sequence[float] | None = None,
                 max_steps: int = DEFAULT_MAX_STEPS,
                 state_cap: int | None = None) -> SamplePath:
    """Exact trajectory of the chain on the density scale x = X/N.

    Records every event, or just the running value at `record_times` when
    given.  Stops at T, at absorption (all rates zero), when the state cap
    is exceeded, or at the step cap (flagged, never silent).
    """
    N = model.N
    X0f = x0 * N
    X = round(X0f)
    if X < 0 or abs(X0f - X) > 1e-9 * max(1.0, abs(X0f)):
        raise ValueError(f"x0*N = {X0f} must be a non-negative integer")
    if T < 0:
        raise ValueError("time horizon must be non-negative")
    polys = model.rate_polys()
    deltas = [d for d, _ in polys]
    n_jumps = len(polys)
    rng = replica_rng(seed, replica)
    buf = _DrawBuffer(rng)
    grid = None if record_times is None else np.asarray(record_times, dtype=float)
    if grid is not None and (np.any(np.diff(grid) <= 0) or grid[0] < 0):
        raise ValueError("record_times must be increasing and non-negative")

    t = 0.0
    times = [0.0]
    values = [X / N]
    gi = 0
    gvals = None
    if grid is not None:
        gvals = np.empty(len(grid))
    terminal = TIME_LIMIT
    rates = [0.0] * n_jumps
    inv_N = 1.0 / N
    steps = 0
    while True:
        x = X * inv_N
        total = 0.0
        for k in range(n_jumps):
            r = 0.0
            for e, c in polys[k][1]:
                r += c * x ** e
            if r < 0.0:
                if r < -1e-12 * max(1.0, abs(X)):
                    raise RateNegativityError(
                        f"rate of jump {deltas[k]} is {r} at x={x}")
                r = 0.0
            rates[k] = r
            total += r
        total *= N
        if total <= 0.0:
            terminal = ABSORBED
            break
        t_next = t + buf.exponential() / total
        if t_next > T:
            t = T
            break
        t = t_next
        u = buf.uniform() * total * inv_N
        acc = 0.0
        k = 0
        for k in range(n_jumps):
            acc += rates[k]
            if u < acc:  # strict: never select a zero-rate jump at u == 0
                break
        if grid is not None:
            while gi < len(grid) and grid[gi] < t:
                gvals[gi] = X * inv_N
                gi += 1
        X += deltas[k]
        if grid is None:
            times.append(t)
            values.append(X * inv_N)
        if X < 0 or (state_cap is not None and X >= state_cap):
            terminal = EXITED
            break
        steps += 1
        if steps >= max_steps:
            terminal = STEP_CAP
            break
    end_t = T if terminal == TIME_LIMIT else t
    if grid is not None:
        while gi < len(grid) and grid[gi] <= end_t:
            gvals[gi] = X * inv_N
            gi += 1
        g = grid[:gi]
        v = gvals[:gi]
        if gi == 0 or g[-1] < end_t:
            g = np.append(g, end_t)
            v = np.append(v, X * inv_N)
        return SamplePath(g, v, terminal)
    if times[-1] < end_t:
        times.append(end_t)
        values.append(X * inv_N)
    return SamplePath(np.asarray(times), np.asarray(values), terminal)


def _ssa_chunk(args) -> list[SamplePath]:
    model, x0, T, seed, replicas, record_times, kwargs = args
    return [ssa_simulate(model, x0, T, seed, replica=r,
                         record_times=record_times, **kwargs) for r in replicas]


def ssa_ensemble(model: DDMCModel, x0: float, T: float, n: int, seed: int,
                 record_times: Sequence[float] | None = None,
                 threads: int | None = None, **kwargs) -> list[SamplePath]:
    """n independent replicas; replica r uses its own stream of `seed`.

    Replicas are embarrassingly parallel: QDP_THREADS (or `threads`) > 1
    fans the work out over processes.  Results are identical either way
    because each replica owns its stream and is collected in index order.
    """
    if threads is None:
        threads = int(os.environ.get("QDP_THREADS", "1") or 1)
    if threads <= 1 or n < 4:
        return _ssa_chunk((model, x0, T, seed, range(n), record_times, kwargs))
    import concurrent.futures
    chunks = [c for c in np.array_split(np.arange(n), threads * 4) if len(c)]
    args = [(model, x0, T, seed, [int(r) for r in c], record_times, kwargs)
            for c in chunks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(_ssa_chunk, args))
    return [p for part in parts for p in part]


def rescale(path: SamplePath, a: float, b: float, center: float = 0.0) -> SamplePath:
    """Y(t) = a * (x(b t) - center); horizon shrinks by the factor b."""
    if a <= 0 or b <= 0:
        raise ValueError("scale factors must be positive")
    return SamplePath(path.times / b, a * (path.values - center),
                      path.terminal, path.clamp_count)


@dataclass(frozen=True)
class SDEModel:
    """dY = drift(Y) dt + sqrt(diffusion(Y)) dB on an interval."""

    drift: UniPoly
    diffusion: UniPoly
    domain: tuple[float | None, float | None] = (None, None)
    boundary: str = "absorb"  # or "stop"

    def __post_init__(self):
        if self.boundary not in ("absorb", "stop"):
            raise ValueError("boundary policy must be 'absorb' or 'stop'")


def em_integrate(sde: SDEModel, y0: float, T: float, dt: float,
                 seed: int, replica: int = 0) -> SamplePath:
    """Euler-Maruyama path on the uniform grid; exact-in-law it is not."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_domain(sde, y0)
    n_steps = int(round(T / dt))
    rng = replica_rng(seed, replica)
    noise = rng.standard_normal(n_steps)
    sqdt = np.sqrt(dt)
    lo, hi = sde.domain
    ys = np.empty(n_steps + 1)
    ys[0] = y0
    y = y0
    clamps = 0
    terminal = TIME_LIMIT
    k = 0
    for k in range(n_steps):
        g = float(sde.diffusion(y))
        if g < 0.0:
            g = 0.0
            clamps += 1
        y = y + float(sde.drift(y)) * dt + np.sqrt(g) * sqdt * noise[k]
        exited = (lo is not None and y <= lo) or (hi is not None and y >= hi)
        if exited:
            if sde.boundary == "absorb":
                y = lo if (lo is not None and y <= lo) else hi
                terminal = ABSORBED
            else:
                terminal = EXITED
            ys[k + 1] = y
            break
        ys[k + 1] = y
    end = k + 2 if terminal != TIME_LIMIT else n_steps + 1
    times = dt * np.arange(end)
    return SamplePath(times, ys[:end], terminal, clamps)


def _check_domain(sde: SDEModel, y0: float) -> None:
    lo, hi = sde.domain
    if (lo is not None and y0 < lo) or (hi is not None and y0 > hi):
        raise ValueError(f"y0={y0} outside the domain {sde.domain}")


def em_ensemble(sde: SDEModel, y0: float, T: float, dt: float, n: int,
                seed: int, record_times: Sequence[float] | None = None,
                block: int = 2000) -> list[SamplePath]:
    """Vectorized ensemble with one noise stream per replica.

    Paths are recorded at `record_times` (default: just 0 and T).  Absorbed
    replicas freeze at the boundary; stopped replicas freeze at their exit
    value with the exit flagged.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_domain(sde, y0)
    n_steps = int(round(T / dt))
    grid = np.unique(np.asarray(
        [0.0, T] if record_times is None else record_times, dtype=float))
    rec_steps = np.minimum(np.round(grid / dt).astype(int), n_steps)
    sq = np.sqrt(dt)
    lo, hi = sde.domain
    out: list[SamplePath] = []
    for start in range(0, n, block):
        m = min(block, n - start)
        noise = np.empty((m, n_steps))
        for r in range(m):
            noise[r] = replica_rng(seed, start + r).standard_normal(n_steps)
        y = np.full(m, float(y0))
        active = np.ones(m, dtype=bool)
        flags = np.array([TIME_LIMIT] * m, dtype=object)
        clamps = np.zeros(m, dtype=int)
        recorded = np.empty((m, len(grid)))
        for j, s in enumerate(rec_steps):
            if s == 0:
                recorded[:, j] = y0
        for k in range(n_steps):
            if active.any():
                g = sde.diffusion.eval_array(y)
                neg = active & (g < 0.0)
                clamps += neg
                g = np.maximum(g, 0.0)
                step = sde.drift.eval_array(y) * dt + np.sqrt(g) * sq * noise[:, k]
                y = np.where(active, y + step, y)
                if lo is not None:
                    exited = active & (y <= lo)
                    _apply_exit(y, exited, lo, sde.boundary, flags)
                    active &= ~exited
                if hi is not None:
                    exited = active & (y >= hi)
                    _apply_exit(y, exited, hi, sde.boundary, flags)
                    active &= ~exited
            for j, s in enumerate(rec_steps):
                if s == k + 1:
                    recorded[:, j] = y
        for r in range(m):
            out.append(SamplePath(grid.copy(), recorded[r].copy(),
                                  str(flags[r]), int(clamps[r])))
    return out


def _apply_exit(y: np.ndarray, exited: np.ndarray, bound: float,
                policy: str, flags: np.ndarray) -> None:
    if not exited.any():
        return
    if policy == "absorb":
        y[exited] = bound
        flags[exited] = ABSORBED
    else:
        flags[exited] = EXITED
