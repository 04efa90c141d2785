"""Measurement functionals over solver output.

Norms, the explicit L^p decay bound, distances to the rarefaction wave and
its viscous approximation, power-law rate fits, and weak pairings of
(rescaled) solutions against test functions.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import integrate

from .grid import Field
from .kernel import KernelSpec
from .reference import rarefaction, viscous_rarefaction
from .solver import primitive

INF = math.inf
DIAGNOSTICS_COLUMNS = ["t", "mass", "min_u", "l1", "l2", "linf", "bound2", "boundinf", "dWR2", "dWRinf", "dZ1"]


def parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "∞"):
            return INF
        p = float(p)
    p = float(p)
    if not p >= 1:
        raise ValueError(f"L^p exponent must be >= 1, got {p}")
    return p


def lp_norm(f: Field, p) -> float:
    """Grid L^p norm ``(dx sum |f_j|^p)^(1/p)``, or ``max |f_j|`` for p = inf."""
    p = parse_p(p)
    v = np.abs(f.values)
    if p == INF:
        return float(v.max())
    if p == 1:
        return float(f.grid.dx * v.sum())
    return float((f.grid.dx * np.sum(v**p)) ** (1.0 / p))


def decay_bound(p, t: float, A: float, tv_vx: float, mass: float = 1.0) -> float:
    """``(A - ||V_x||_1)^((1-p)/p) * mass^(1/p) * t^((1-p)/p)``."""
    p = parse_p(p)
    if not t > 0:
        raise ValueError("decay bound needs t > 0")
    if not tv_vx < A:
        raise ValueError("decay bound needs ||V_x||_1 < A")
    if p == INF:
        return 1.0 / ((A - tv_vx) * t)
    e = (1.0 - p) / p
    return (A - tv_vx) ** e * mass ** (1.0 / p) * t**e


def distance_to_rarefaction(U: Field, p, A: float) -> float:
    if not U.time > 0:
        raise ValueError("distance to the rarefaction wave needs t > 0")
    return lp_norm(U.with_values(U.values - rarefaction(U.x, U.time, A)), p)


def distance_to_viscous(U: Field, p, A: float, eps: float) -> float:
    if not U.time > 0:
        raise ValueError("distance to the viscous rarefaction needs t > 0")
    return lp_norm(U.with_values(U.values - viscous_rarefaction(U.x, U.time, A, eps)), p)


def fit_rate(times, values) -> float:
    """Least-squares slope of log(values) against log(times).

    Needs at least 5 samples spanning 1.5 decades.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.size < 5:
        raise ValueError("rate fit needs at least 5 paired samples")
    if np.any(values <= 0) or np.any(times <= 0):
        raise ValueError("rate fit needs positive times and values")
    if math.log10(times.max() / times.min()) < 1.5 - 1e-12:
        raise ValueError("rate fit samples must span at least 1.5 decades")
    slope, _ = np.polyfit(np.log(times), np.log(values), 1)
    return float(slope)


def window_fit(times, values, window: Sequence[float]) -> float:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (times >= window[0] * (1 - 1e-12)) & (times <= window[1] * (1 + 1e-12))
    return fit_rate(times[sel], values[sel])


# ---------------------------------------------------------------------------
# test functions and weak pairings


class TestKind(str, enum.Enum):
    BUMP = "Bump"
    GAUSSIAN = "GaussianTest"


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function: a C_c^inf bump on [c-w, c+w] or a Gaussian exp(-((x-c)/w)^2)."""

    __test__ = False  # not a pytest class

    kind: TestKind
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TestKind(self.kind))
        if not self.width > 0:
            raise ValueError("test function width must be positive")

    def _r(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.width

    def __call__(self, x):
        r = self._r(x)
        if self.kind is TestKind.GAUSSIAN:
            return np.exp(-r * r)
        inside = np.abs(r) < 1
        out = np.zeros_like(r)
        ri = r[inside]
        out[inside] = np.exp(-1.0 / (1.0 - ri * ri))
        return out

    def derivative(self, x):
        r = self._r(x)
        if self.kind is TestKind.GAUSSIAN:
            return -2.0 * r * np.exp(-r * r) / self.width
        inside = np.abs(r) < 1
        out = np.zeros_like(r)
        ri = r[inside]
        q = 1.0 - ri * ri
        out[inside] = -2.0 * ri / (q * q) * np.exp(-1.0 / q) / self.width
        return out

    @property
    def support(self) -> tuple[float, float]:
        """Support (Bump) or the interval outside which phi < 1e-28 (Gaussian)."""
        h = self.width if self.kind is TestKind.BUMP else 8.0 * self.width
        return self.center - h, self.center + h

    def dilated(self, lam: float) -> "TestFunction":
        """``x -> phi(x / lam)``."""
        return TestFunction(self.kind, self.center * lam, self.width * lam)

    def integral(self, a: float, b: float) -> float:
        """Integral of phi over [a, b]."""
        if self.kind is TestKind.GAUSSIAN:
            c, w = self.center, self.width
            return 0.5 * math.sqrt(math.pi) * w * (math.erf((b - c) / w) - math.erf((a - c) / w))
        lo, hi = max(a, self.support[0]), min(b, self.support[1])
        if hi <= lo:
            return 0.0
        val, _ = integrate.quad(lambda s: float(self(s)), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "center": self.center, "width": self.width}


def _check_support(phi: TestFunction, u: Field):
    lo, hi = phi.support
    if lo < -u.grid.L or hi > u.grid.L:
        raise ValueError(f"test function support [{lo:g}, {hi:g}] leaves the grid [-{u.grid.L:g}, {u.grid.L:g}]")


def weak_pairing(u: Field, phi: TestFunction) -> float:
    """Midpoint quadrature of ``int u phi dx``."""
    _check_support(phi, u)
    return float(u.grid.dx * np.sum(u.values * phi(u.x)))


def rarefaction_pairing(phi: TestFunction, t0: float, A: float) -> float:
    """``-int W^R(x, t0) phi_x(x) dx``.

    W^R is piecewise linear, so integrating by parts on each piece leaves
    ``(1/(A t0)) int_{-A t0/2}^{A t0/2} phi``, evaluated in closed form for
    the Gaussian and by adaptive quadrature for the bump.
    """
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    half = 0.5 * A * t0
    return phi.integral(-half, half) / (A * t0)


def rescaled_pairing(checkpoints: Mapping[float, Field], lam: float, t0: float, phi: TestFunction) -> float:
    """``int u^lam(x, t0) phi(x) dx`` with ``u^lam(x, t) = lam u(lam x, lam t)``.

    By the change of variables ``y = lam x`` this is the pairing of the stored
    solution at ``lam t0`` with ``phi(y / lam)``; no regridding happens.
    """
    target = lam * t0
    u = None
    for t, f in checkpoints.items():
        if math.isclose(t, target, rel_tol=1e-12, abs_tol=1e-12):
            u = f
            break
    if u is None:
        raise KeyError(f"no checkpoint at lambda * t0 = {target:g}")
    return weak_pairing(u, phi.dilated(lam))


def log_bound_monitor(dist_z1: Sequence[float], times: Sequence[float], split: float | None = None):
    """Track ``||U - Z||_1 / log(2 + t)``.

    Returns ``(max_ratio, passed)``. The run passes when the maximum over the
    last decade (t >= split, default t_end/10) exceeds the maximum over the
    earlier checkpoints by less than 10%.
    """
    times = np.asarray(times, dtype=float)
    ratio = np.asarray(dist_z1, dtype=float) / np.log(2.0 + times)
    if split is None:
        split = times.max() / 10.0
    early = ratio[times <= split]
    late = ratio[times >= split]
    if early.size == 0 or late.size == 0:
        raise ValueError("log-bound monitor needs checkpoints on both sides of the split")
    return float(ratio.max()), bool(late.max() < 1.1 * early.max())


# ---------------------------------------------------------------------------
# per-checkpoint records


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    min_u: float
    lp: dict
    dist_WR: dict
    dist_Z1: float
    bound_ratio: dict

    def row(self) -> dict:
        return {
            "t": self.t,
            "mass": self.mass,
            "min_u": self.min_u,
            "l1": self.lp[1.0],
            "l2": self.lp[2.0],
            "linf": self.lp[INF],
            "bound2": self.bound_ratio[2.0],
            "boundinf": self.bound_ratio[INF],
            "dWR2": self.dist_WR[2.0],
            "dWRinf": self.dist_WR[INF],
            "dZ1": self.dist_Z1,
        }


def record(u: Field, k: KernelSpec, eps: float) -> DiagnosticsRecord:
    """All per-checkpoint measurements for a mass-1 state ``u``.

    ``dist_Z1`` compares with the viscous rarefaction at the run's own
    viscosity and is NaN for ``eps = 0``.
    """
    t = u.time
    mass = u.mass
    lp = {p: lp_norm(u, p) for p in (1.0, 2.0, INF)}
    if t > 0:
        U = primitive(u)
        dist_wr = {p: distance_to_rarefaction(U, p, k.A) for p in (2.0, INF)}
        dz1 = distance_to_viscous(U, 1, k.A, eps) if eps > 0 else math.nan
        ratio = {p: lp[p] / decay_bound(p, t, k.A, k.tv_vx, mass) for p in (1.0, 2.0, INF)}
    else:
        dist_wr = {2.0: math.nan, INF: math.nan}
        dz1 = math.nan
        ratio = {p: math.nan for p in (1.0, 2.0, INF)}
    return DiagnosticsRecord(t, mass, float(u.values.min()), lp, dist_wr, dz1, ratio)


def format_float(v: float) -> str:
    return repr(float(v)) if not math.isfinite(v) else f"{v:.17g}"


def diagnostics_csv(records: Iterable[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGNOSTICS_COLUMNS)
    for r in records:
        row = r.row()
        w.writerow([format_float(row[c]) for c in DIAGNOSTICS_COLUMNS])
    return buf.getvalue()
