"""Pure photon-loss channel and the ``gamma_tau`` / ``t`` / ``r`` parameter algebra.

Loss over an interaction time ``tau`` leaves each mode with intensity
transmission ``eta = exp(-gamma tau)``. Fidelity curves are indexed by the
full-time amplitude factor ``t = exp(-gamma tau / 2)`` and plotted against
``r = sqrt(1 - t^2)``. Direct transmission sees ``eta = t^2``; each arm of a
teleportation resource travels for ``tau / 2`` and so sees ``eta = t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .fock import DensityOperator, FockState


@dataclass(frozen=True)
class LossPoint:
    gamma_tau: float
    t: float
    r: float

    @classmethod
    def from_gamma_tau(cls, gamma_tau: float) -> "LossPoint":
        if not gamma_tau >= 0.0:
            raise ValueError(f"gamma_tau must be non-negative, got {gamma_tau}")
        if math.isinf(gamma_tau):
            return cls(math.inf, 0.0, 1.0)
        t = math.exp(-0.5 * gamma_tau)
        return cls(float(gamma_tau), t, math.sqrt(-math.expm1(-gamma_tau)))

    @classmethod
    def from_t(cls, t: float) -> "LossPoint":
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {t}")
        gamma_tau = math.inf if t == 0.0 else -2.0 * math.log(t)
        return cls(gamma_tau, float(t), math.sqrt((1.0 - t) * (1.0 + t)))

    @classmethod
    def from_r(cls, r: float) -> "LossPoint":
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {r}")
        t = math.sqrt((1.0 - r) * (1.0 + r))
        gamma_tau = math.inf if t == 0.0 else -math.log1p(-r * r)
        return cls(gamma_tau, t, float(r))


def loss_point(value: float, given: str) -> LossPoint:
    """Build a :class:`LossPoint` from any one of ``gamma_tau``, ``t`` or ``r``."""
    builders = {"gamma_tau": LossPoint.from_gamma_tau, "t": LossPoint.from_t, "r": LossPoint.from_r}
    try:
        return builders[given](value)
    except KeyError:
        raise ValueError(f"given must be one of {sorted(builders)}, got {given!r}") from None


@dataclass(frozen=True)
class ArmTransmission:
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"transmission must lie in [0, 1], got {self.eta}")


class ProtocolTransmissions(NamedTuple):
    direct: ArmTransmission
    teleport_arm: ArmTransmission


def protocol_transmissions(p: LossPoint) -> ProtocolTransmissions:
    return ProtocolTransmissions(ArmTransmission(p.t * p.t), ArmTransmission(p.t))


def _as_eta(eta: ArmTransmission | float) -> float:
    return eta.eta if isinstance(eta, ArmTransmission) else ArmTransmission(float(eta)).eta


@lru_cache(maxsize=256)
def _kraus_bands(eta: float, n_max: int) -> np.ndarray:
    # bands[k, n] = <n-k|E_k|n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k)
    n = np.arange(n_max + 1)
    bands = np.zeros((n_max + 1, n_max + 1))
    for k in range(n_max + 1):
        m = n[k:]
        if eta == 0.0:
            bands[k, k:] = (m == k).astype(float)
            continue
        if eta == 1.0:
            bands[k, k:] = float(k == 0)
            continue
        log_c = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
        bands[k, k:] = np.exp(0.5 * (log_c + (m - k) * math.log(eta) + k * math.log1p(-eta)))
    bands.setflags(write=False)
    return bands


def kraus_ops(eta: ArmTransmission | float, n_max: int) -> list[np.ndarray]:
    """Kraus operators ``E_0 .. E_{n_max}`` of single-mode loss with transmission ``eta``."""
    bands = _kraus_bands(_as_eta(eta), n_max)
    ops = []
    for k in range(n_max + 1):
        e = np.zeros((n_max + 1, n_max + 1), dtype=np.complex128)
        idx = np.arange(k, n_max + 1)
        e[idx - k, idx] = bands[k, k:]
        ops.append(e)
    return ops


def apply_loss(
    rho: DensityOperator | FockState, eta: ArmTransmission | float, modes: Iterable[int]
) -> DensityOperator:
    """Apply independent loss with transmission ``eta`` to each listed mode.

    Kraus operators are banded, so each ``E_k rho E_k^dagger`` is a diagonal
    shift of the ket and bra indices of that mode, summed in order ``k = 0..n_max``.
    """
    if isinstance(rho, FockState):
        rho = rho.dm()
    e = _as_eta(eta)
    n, m = rho.n_max + 1, rho.modes
    bands = _kraus_bands(e, rho.n_max)
    t = rho.matrix.reshape((n,) * (2 * m))
    for mode in sorted(set(modes)):
        if not 0 <= mode < m:
            raise IndexError(f"mode {mode} out of range for a {m}-mode operator")
        ket, bra = mode, m + mode
        out = np.zeros_like(t)
        for k in range(n):
            b = bands[k, k:]
            weight = np.multiply.outer(b, b).reshape(_outer_shape(2 * m, ket, bra, n - k))
            src = [slice(None)] * (2 * m)
            dst = [slice(None)] * (2 * m)
            src[ket] = src[bra] = slice(k, n)
            dst[ket] = dst[bra] = slice(0, n - k)
            out[tuple(dst)] += weight * t[tuple(src)]
        t = out
    d = n**m
    return DensityOperator(t.reshape(d, d), rho.n_max, m)


def _outer_shape(ndim: int, ax1: int, ax2: int, size: int) -> tuple[int, ...]:
    shape = [1] * ndim
    shape[ax1] = size
    shape[ax2] = size
    return tuple(shape)
