"""Threshold extraction on the closed-form curves.

Every search uses the same two steps. A uniform 2001-point pre-scan brackets
a sign change, then bisection refines it. The reported bracket always
straddles that sign change.

Differences between two fidelity curves vanish like a power of ``r`` at
``r = 0``, so near the origin they sink below rounding noise. Margins are
therefore divided by that leading power ``k`` and evaluated only for
``r >= R_MIN[k]``, where the scaled noise is still below about 1e-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import analytic
from .qubits import Encoding

CLASSICAL_LIMIT = 2.0 / 3.0
R_GRID = np.linspace(0.0, 1.0, 2001)
R_MIN = {2: 1e-3, 4: 1e-2}
R_TOL = 1e-9
ALPHA_TOL = 1e-9
ALPHA_GRID = np.round(np.arange(0.01, 3.0 + 1e-9, 0.01), 10)

Curve = Callable[[np.ndarray], np.ndarray]


class NoCrossing(Exception):
    """The residual keeps one sign over the whole search interval."""

    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.name = name


@dataclass(frozen=True)
class ThresholdReport:
    name: str
    value: float
    bracket: tuple[float, float]
    tolerance: float
    iterations: int
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "bracket", (float(self.bracket[0]), float(self.bracket[1])))
        lo, hi = self.bracket
        if not lo <= self.value <= hi:
            raise ValueError(f"{self.name}: value {self.value} outside bracket {self.bracket}")
        if hi - lo > 2.0 * self.tolerance * (1.0 + 1e-12):
            raise ValueError(f"{self.name}: bracket wider than twice the tolerance")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "bracket": list(self.bracket),
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "details": dict(self.details),
        }


class ComparisonRegion(str, Enum):
    """Which values of ``r`` count when comparing two encodings."""

    EITHER_ABOVE_CLASSICAL = "either"
    BOTH_ABOVE_CLASSICAL = "both"


@dataclass(frozen=True)
class CurveSample:
    r: float
    fidelity_direct: float
    fidelity_teleport: float
    success_direct: float
    success_teleport: float


def t_of_r(r):
    r = np.asarray(r, dtype=float)
    return np.sqrt(np.clip((1.0 - r) * (1.0 + r), 0.0, 1.0))


def bisect(fn: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int = 200):
    """Shrink ``[lo, hi]`` around a sign change of ``fn`` until ``hi - lo <= 2 tol``.

    ``fn(lo)`` and ``fn(hi)`` must differ in sign, with zero counted as
    non-negative. Returns ``(midpoint, (lo, hi), iterations)``.
    """
    f_lo = fn(lo)
    if (f_lo >= 0.0) == (fn(hi) >= 0.0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    lo_sign = f_lo >= 0.0
    it = 0
    while hi - lo > 2.0 * tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if (fn(mid) >= 0.0) == lo_sign:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), (lo, hi), it


def _sign_changes(values: np.ndarray) -> np.ndarray:
    nonneg = values >= 0.0
    return np.flatnonzero(nonneg[:-1] != nonneg[1:])


def _evaluate(curve: Curve, r: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(curve(r), dtype=float)
        if out.shape == r.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(curve(float(x))) for x in r])


# --- crossings in r ---------------------------------------------------------


def crossing_r(curve: Curve, level: float = CLASSICAL_LIMIT, name: str = "crossing", tol: float = R_TOL) -> ThresholdReport:
    """Smallest ``r`` at which ``curve(r)`` falls through ``level``."""
    g = _evaluate(curve, R_GRID) - level
    if g[0] <= 0.0:
        raise NoCrossing(name, f"curve starts at or below {level}")
    idx = _sign_changes(g)
    if idx.size == 0:
        raise NoCrossing(name, f"curve stays above {level} on [0, 1]")
    i = int(idx[0])
    value, bracket, it = bisect(lambda r: float(curve(r)) - level, R_GRID[i], R_GRID[i + 1], tol)
    return ThresholdReport(name, value, bracket, tol, it, {"level": level, "crossings": int(idx.size)})


def classical_crossings() -> list[ThresholdReport]:
    """Where each of the four single-photon curves drops below the classical limit."""
    curves = {
        "vsp_direct": analytic.f_direct_vsp,
        "vsp_teleport": analytic.f_teleport_vsp,
        "psp_direct": analytic.f_direct_psp,
        "psp_teleport": analytic.f_teleport_psp,
    }
    return [crossing_r(lambda r, f=f: f(t_of_r(r)), CLASSICAL_LIMIT, name) for name, f in curves.items()]


def _scaled(diff: Callable[[np.ndarray], np.ndarray], power: int) -> Callable:
    def fn(r):
        return diff(r) / np.asarray(r, dtype=float) ** power

    return fn


def _coh_gap(alpha: float) -> Callable:
    """``F_teleport - F_direct`` for coherent qubits; vanishes like ``r^4``."""

    def diff(r):
        t = t_of_r(r)
        return analytic.f_teleport_coh(t, alpha) - analytic.f_direct_coh(t, alpha)

    return _scaled(diff, 4)


def _interior(power: int) -> np.ndarray:
    return R_GRID[(R_GRID >= R_MIN[power]) & (R_GRID < 1.0)]


def _crossover(gap: Callable, power: int, name: str, details: dict) -> ThresholdReport:
    """Last upward sign change of a gap scaled by ``r^power`` on the interior grid."""
    r = _interior(power)
    g = gap(r)
    ups = [i for i in _sign_changes(g) if g[i] < 0.0]
    if not ups:
        raise NoCrossing(name, "no sign change from negative to positive")
    i = int(ups[-1])
    value, bracket, it = bisect(lambda x: float(gap(x)), r[i], r[i + 1], R_TOL)
    return ThresholdReport(name, value, bracket, R_TOL, it, details)


def rc_boundary(alpha: float) -> ThresholdReport:
    """Crossover ``r_c`` below which direct transmission beats teleportation."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return _crossover(_coh_gap(alpha), 4, "rc_boundary", {"alpha": alpha})


def psp_crossover(protocol: str, alpha: float) -> ThresholdReport:
    """Crossover ``r`` above which coherent qubits beat PSP qubits under ``protocol``."""
    coh, psp = _protocol_pair(protocol)
    gap = _scaled(lambda r: coh(t_of_r(r), alpha) - psp(t_of_r(r)), 2)
    return _crossover(gap, 2, f"psp_crossover_{protocol}", {"alpha": alpha, "protocol": protocol})


# --- thresholds in alpha ------------------------------------------------------


def _refined_min(fn: Callable, r: np.ndarray, values: np.ndarray) -> float:
    """Grid minimum polished by a bounded scalar search between its neighbours."""
    i = int(np.argmin(values))
    best = float(values[i])
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: float(fn(x)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        best = min(best, float(res.fun))
    return best


def dominance_margin(alpha: float) -> float:
    """``min_r (F_teleport - F_direct) / r^4``; non-negative iff teleportation never loses."""
    fn = _coh_gap(alpha)
    r = _interior(4)
    return _refined_min(fn, r, fn(r))


def _protocol_pair(protocol: str):
    protocol = str(getattr(protocol, "value", protocol))
    if protocol == "direct":
        return analytic.f_direct_coh, analytic.f_direct_psp
    if protocol == "teleport":
        return analytic.f_teleport_coh, analytic.f_teleport_psp
    raise ValueError(f"protocol must be 'direct' or 'teleport', got {protocol!r}")


def comparison_mask(f_a: np.ndarray, f_b: np.ndarray, region: ComparisonRegion) -> np.ndarray:
    if ComparisonRegion(region) is ComparisonRegion.EITHER_ABOVE_CLASSICAL:
        return np.maximum(f_a, f_b) >= CLASSICAL_LIMIT
    return np.minimum(f_a, f_b) >= CLASSICAL_LIMIT


def psp_margin(alpha: float, protocol: str, region: ComparisonRegion = ComparisonRegion.EITHER_ABOVE_CLASSICAL) -> float:
    """``min (F_coh - F_psp) / r^2`` over the comparison region."""
    coh, psp = _protocol_pair(protocol)
    r = _interior(2)
    t = t_of_r(r)
    fc, fp = coh(t, alpha), psp(t)
    keep = comparison_mask(fc, fp, region)
    if not keep.any():
        return math.inf
    fn = _scaled(lambda x: coh(t_of_r(x), alpha) - psp(t_of_r(x)), 2)
    return _refined_min(fn, r[keep], ((fc - fp) / r**2)[keep])


def largest_alpha(margin: Callable[[float], float], name: str, grid: Sequence[float] = ALPHA_GRID, details: dict | None = None) -> ThresholdReport:
    """Largest ``alpha`` with ``margin(alpha) >= 0`` before the first failure on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    values = np.array([margin(a) for a in grid])
    if values[0] < 0.0:
        raise NoCrossing(name, f"margin already negative at alpha={grid[0]}")
    bad = np.flatnonzero(values < 0.0)
    if bad.size == 0:
        raise NoCrossing(name, f"margin stays non-negative up to alpha={grid[-1]}")
    j = int(bad[0])
    value, bracket, it = bisect(margin, grid[j - 1], grid[j], ALPHA_TOL)
    info = dict(details or {})
    info["recovers_later"] = bool(np.any(values[j:] >= 0.0))
    return ThresholdReport(name, value, bracket, ALPHA_TOL, it, info)


def alpha_teleport_dominance() -> ThresholdReport:
    """Largest amplitude for which coherent-qubit teleportation beats direct transmission at every ``r``."""
    return largest_alpha(dominance_margin, "alpha_teleport_dominance")


def alpha_vs_psp(protocol: str, region: ComparisonRegion | str = ComparisonRegion.EITHER_ABOVE_CLASSICAL) -> ThresholdReport:
    """Largest amplitude for which coherent qubits match or beat PSP qubits throughout the comparison region."""
    region = ComparisonRegion(region)
    protocol = str(getattr(protocol, "value", protocol))
    _protocol_pair(protocol)
    return largest_alpha(
        lambda a: psp_margin(a, protocol, region),
        f"alpha_vs_psp_{protocol}",
        details={"protocol": protocol, "region": region.name},
    )


def alpha_equal_mean_photon(target: float = 1.0) -> ThresholdReport:
    """Amplitude at which a coherent qubit carries ``target`` photons on average."""
    value, bracket, it = bisect(lambda a: float(analytic.mean_photon_coh(a)) - target, 0.5, 2.0, ALPHA_TOL)
    return ThresholdReport("alpha_equal_mean_photon", value, bracket, ALPHA_TOL, it, {"mean_photon": target})


# --- curves -------------------------------------------------------------------


def sample_curves(encoding: Encoding | str, r_grid: Sequence[float], alpha: float | None = None) -> list[CurveSample]:
    """Tabulate both protocols of one encoding on ``r_grid``."""
    enc = Encoding(encoding)
    r = np.asarray(r_grid, dtype=float)
    if np.any((r < 0.0) | (r > 1.0)):
        raise ValueError("r grid must lie in [0, 1]")
    if enc is not Encoding.COH and alpha is not None:
        raise ValueError(f"alpha is only meaningful for coherent-state qubits, not {enc.value}")
    t = t_of_r(r)
    fd = np.atleast_1d(analytic.fidelity("direct", enc, t, alpha))
    ft = np.atleast_1d(analytic.fidelity("teleport", enc, t, alpha))
    ps = np.atleast_1d(analytic.p_success(enc, t))
    return [CurveSample(float(r[i]), float(fd[i]), float(ft[i]), 1.0, float(ps[i])) for i in range(r.size)]
