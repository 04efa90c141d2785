"""Interacting particle system whose empirical measure approximates the
inviscid equation.

Each of N particles carries mass 1/N and moves with velocity
``-(1/N) sum_{i != k} K'(X_k - X_i)``, so the empirical measure is transported
by the same field ``-K' * u`` as the continuum density.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .grid import Field, Grid
from .kernel import Family, KernelSpec

DIRECT_CHUNK = 2048


@dataclass(frozen=True)
class ParticleEnsemble:
    positions: np.ndarray
    weight: float
    time: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("positions must be a nonempty 1D array")
        if not np.all(np.isfinite(pos)):
            raise ValueError("particle positions must be finite")
        if not math.isclose(self.weight * pos.size, 1.0, rel_tol=1e-12):
            raise ValueError("weight must equal 1/N")
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.size

    def metadata(self) -> dict:
        return {"N": self.n, "seed": self.seed, "time": self.time, "weight": self.weight}


def sample_particles(u0: Field, n: int, seed: int) -> ParticleEnsemble:
    """Draw ``n`` i.i.d. positions from the piecewise-constant density ``u0``.

    Sampling inverts the piecewise-linear CDF of the cell averages, so it is
    exact for the discretised datum.
    """
    if n < 2:
        raise ValueError("need at least two particles")
    w = np.clip(u0.values, 0.0, None) * u0.grid.dx
    total = w.sum()
    if not (np.isfinite(total) and total > 0):
        raise ValueError("initial datum is not normalisable")
    cdf = np.concatenate([[0.0], np.cumsum(w) / total])
    edges = u0.grid.edges
    rng = np.random.default_rng(seed)
    q = rng.random(n)
    # cell index with cdf[j] <= q < cdf[j+1]; empty cells are never selected
    j = np.clip(np.searchsorted(cdf, q, side="right") - 1, 0, u0.grid.N - 1)
    frac = (q - cdf[j]) / (cdf[j + 1] - cdf[j])
    pos = edges[j] + frac * u0.grid.dx
    return ParticleEnsemble(pos, 1.0 / n, 0.0, seed)


def _sorted_view(x: np.ndarray):
    """Sorted copy of ``x`` and the permutation, skipping the sort if already ordered."""
    if np.all(x[1:] >= x[:-1]):
        return x, None
    order = np.argsort(x, kind="stable")
    return x[order], order


def _unsort(values: np.ndarray, order) -> np.ndarray:
    if order is None:
        return values
    out = np.empty_like(values)
    out[order] = values
    return out


def _sign_sums(s: np.ndarray) -> np.ndarray:
    """``sum_{i != k} sign(s_k - s_i)`` for sorted ``s``; coincident points contribute 0."""
    n = s.size
    if np.all(s[1:] > s[:-1]):
        return 2.0 * np.arange(n) - (n - 1)
    less = np.searchsorted(s, s, side="left")
    greater = n - np.searchsorted(s, s, side="right")
    return (less - greater).astype(float)


def _exp_sums(s: np.ndarray) -> np.ndarray:
    """``sum_{i != k} exp(-|s_k - s_i|)`` for sorted ``s`` via running log-sum-exp."""
    n = s.size
    out = np.zeros(n)
    if n > 1:
        left = np.logaddexp.accumulate(s)  # log sum_{i<=j} e^{s_i}
        out[1:] += np.exp(left[:-1] - s[1:])
        right = np.logaddexp.accumulate(-s[::-1])[::-1]  # log sum_{i>=j} e^{-s_i}
        out[:-1] += np.exp(right[1:] + s[:-1])
    return out


def _direct_v_sums(k: KernelSpec, x: np.ndarray) -> np.ndarray:
    v0 = float(k.V(0.0))
    out = np.empty(x.size)
    for lo in range(0, x.size, DIRECT_CHUNK):
        block = x[lo : lo + DIRECT_CHUNK]
        out[lo : lo + DIRECT_CHUNK] = k.V(block[:, None] - x[None, :]).sum(axis=1) - v0
    return out


def _direct_sign_sums(x: np.ndarray) -> np.ndarray:
    out = np.empty(x.size)
    for lo in range(0, x.size, DIRECT_CHUNK):
        block = x[lo : lo + DIRECT_CHUNK]
        out[lo : lo + DIRECT_CHUNK] = np.sign(block[:, None] - x[None, :]).sum(axis=1)
    return out


def particle_velocities(e: ParticleEnsemble, k: KernelSpec, method: str = "fast") -> np.ndarray:
    """``-(1/N) sum_{i != k} K'(X_k - X_i)`` for every particle.

    ``method="fast"`` uses ranks for the sign part and a sorted sweep for the
    exponential family (other families fall back to direct sums);
    ``method="direct"`` is the plain O(N^2) double sum.
    """
    x = e.positions
    if method == "direct":
        v = 0.5 * k.A * e.weight * _direct_sign_sums(x)
        if k.has_v:
            v -= e.weight * _direct_v_sums(k, x)
        return v
    if method != "fast":
        raise ValueError(f"unknown method {method!r}")
    s, order = _sorted_view(x)
    v = 0.5 * k.A * e.weight * _sign_sums(s)
    if k.has_v and k.family is Family.EXPONENTIAL:
        v -= e.weight * k.beta * _exp_sums(s)
    elif k.has_v:
        v -= e.weight * _direct_v_sums(k, s)
    return _unsort(v, order)


def gap_guard(positions: np.ndarray, velocities: np.ndarray) -> float:
    """Largest step keeping every neighbouring pair at least half its gap apart.

    Only approaching pairs constrain the step; returns inf if none approach.
    """
    s, order = _sorted_view(positions)
    vs = velocities if order is None else velocities[order]
    gaps = np.diff(s)
    closing = vs[:-1] - vs[1:]
    mask = (closing > 0) & (gaps > 0)
    if not mask.any():
        return math.inf
    return 0.5 * float(np.min(gaps[mask] / closing[mask]))


def particle_step(e: ParticleEnsemble, k: KernelSpec, dt: float, method: str = "fast") -> ParticleEnsemble:
    """Forward Euler step; rejects ``dt`` above :func:`gap_guard`."""
    v = particle_velocities(e, k, method)
    guard = gap_guard(e.positions, v)
    if dt > guard:
        raise ValueError(f"dt = {dt:g} exceeds the gap guard {guard:g}")
    return replace(e, positions=e.positions + dt * v, time=e.time + dt)


def evolve_particles(
    e: ParticleEnsemble,
    k: KernelSpec,
    t_end: float,
    dt: float,
    checkpoint_times: Sequence[float] = (),
    observer: Callable[[ParticleEnsemble], None] | None = None,
    check_order: bool = True,
) -> ParticleEnsemble:
    """Integrate to ``t_end`` with steps ``min(dt, gap guard)``.

    With ``check_order`` the sorted order of the particles is verified after
    every step (it is invariant for repulsive dynamics) and a violation
    raises ``RuntimeError``.
    """
    targets = sorted(c for c in set(checkpoint_times) | {t_end} if c > e.time)
    cps = set(checkpoint_times)
    # work in sorted order so the fast velocity path never re-sorts
    order = np.argsort(e.positions, kind="stable")
    x = e.positions[order]
    t = e.time

    def labelled(xs, time):
        return replace(e, positions=_unsort(xs, order), time=time)

    for target in targets:
        while t < target:
            v = particle_velocities(replace(e, positions=x, time=t), k)
            h = min(dt, gap_guard(x, v), target - t)
            if target - (t + h) < 1e-9 * h:
                h = target - t
            t = target if h == target - t else t + h
            x = x + h * v
            if check_order and np.any(x[1:] < x[:-1]):
                raise RuntimeError(f"particle order changed at t = {t:.6g}")
        if observer is not None and target in cps:
            observer(labelled(x.copy(), t))
    return labelled(x, t)


def empirical_cdf(e: ParticleEnsemble, grid: Grid) -> Field:
    """``F_N(x_j) = (1/N) #{k : X_k <= x_j}`` on the grid centres."""
    s = np.sort(e.positions)
    counts = np.searchsorted(s, grid.x, side="right")
    return Field(grid, e.weight * counts, e.time)


def sup_distance_to_pde(e: ParticleEnsemble, U: Field) -> float:
    """``max_j |F_N(x_j) - (U_j + 1/2)|`` for a primitive ``U`` on its grid."""
    F = empirical_cdf(e, U.grid)
    return float(np.max(np.abs(F.values - (U.values + 0.5))))


def dump_csv(e: ParticleEnsemble) -> str:
    lines = ["t,k,x_k"]
    t = f"{e.time:.17g}"
    lines += [f"{t},{i},{x:.17g}" for i, x in enumerate(e.positions)]
    return "\n".join(lines) + "\n"


def metadata_json(e: ParticleEnsemble) -> str:
    return json.dumps(e.metadata(), indent=2, sort_keys=True)
