"""Qubit encodings, Bell-state families and lossy entangled resources.

Three encodings are supported:

* ``VSP`` -- vacuum / single photon in one mode, ``mu|0> + nu|1>``.
* ``PSP`` -- polarized single photon, dual rail over (H, V) modes with
  ``|H> = |1,0>`` and ``|V> = |0,1>``.
* ``COH`` -- coherent-state qubit in the span of ``|beta>, |-beta>``.

Bloch angles for coherent qubits are coordinates in the orthonormal cat basis
``|+> ~ |beta> + |-beta>``, ``|-> ~ |beta> - |-beta>`` with ``beta = s * alpha``,
where ``s`` is the dynamic-basis scale.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import fock
from .channel import LossPoint, apply_loss
from .fock import DensityOperator, FockState

DEGENERATE_AMPLITUDE = 1e-8


class Encoding(str, Enum):
    VSP = "vsp"
    PSP = "psp"
    COH = "coh"

    @property
    def qubit_modes(self) -> int:
        return 2 if self is Encoding.PSP else 1


class BellOutcome(str, Enum):
    PSI_MINUS = "PsiMinus"
    PSI_PLUS = "PsiPlus"
    PHI_MINUS = "PhiMinus"
    PHI_PLUS = "PhiPlus"
    INCONCLUSIVE = "Inconclusive"
    IDENTITY = "Identity"


BELL_LABELS = (BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS, BellOutcome.PHI_MINUS, BellOutcome.PHI_PLUS)


class DegenerateBasisError(ValueError):
    pass


@dataclass(frozen=True)
class BlochAngles:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValueError(f"phi must lie in [0, 2pi), got {self.phi}")

    @property
    def mu(self) -> complex:
        return complex(math.cos(0.5 * self.theta))

    @property
    def nu(self) -> complex:
        return cmath.exp(1j * self.phi) * math.sin(0.5 * self.theta)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.mu, self.nu])


@dataclass(frozen=True)
class QubitSpec:
    encoding: Encoding
    bloch: BlochAngles
    alpha: float | None = None
    basis_scale: float = 1.0

    def __post_init__(self):
        enc = Encoding(self.encoding)
        object.__setattr__(self, "encoding", enc)
        if enc is Encoding.COH:
            if self.alpha is None or self.alpha < 0:
                raise ValueError("coherent-state qubits need a non-negative alpha")
        elif self.alpha is not None:
            raise ValueError(f"alpha is only meaningful for coherent-state qubits, not {enc.value}")
        if not 0.0 < self.basis_scale <= 1.0:
            raise ValueError(f"basis_scale must lie in (0, 1], got {self.basis_scale}")


def make_vsp(bloch: BlochAngles, n_max: int = 1) -> FockState:
    amps = np.zeros(n_max + 1, dtype=np.complex128)
    amps[0], amps[1] = bloch.mu, bloch.nu
    return FockState(amps, n_max, 1)


def psp_basis(n_max: int = 1) -> tuple[FockState, FockState]:
    """``(|H>, |V>)`` as two-mode number states."""
    return fock.basis_state((1, 0), n_max), fock.basis_state((0, 1), n_max)


def make_psp(bloch: BlochAngles, n_max: int = 1) -> FockState:
    h, v = psp_basis(n_max)
    return bloch.mu * h + bloch.nu * v


def _cat_norms(beta: float) -> tuple[float, float]:
    # 1/sqrt(2 +- 2 exp(-2 beta^2)); the minus branch via expm1 for small beta
    x = -2.0 * beta * beta
    return 1.0 / math.sqrt(2.0 + 2.0 * math.exp(x)), 1.0 / math.sqrt(-2.0 * math.expm1(x))


def pm_basis(alpha: float, basis_scale: float, n_max: int, max_tail: float | None = None) -> tuple[FockState, FockState]:
    """Orthonormal even/odd cat pair spanning ``|beta>, |-beta>`` for ``beta = basis_scale * alpha``."""
    beta = alpha * basis_scale
    if beta < DEGENERATE_AMPLITUDE:
        raise DegenerateBasisError(f"cat basis degenerates at amplitude {beta:.3e}")
    plus = fock.coherent_state(beta, n_max, max_tail)
    minus = fock.coherent_state(-beta, n_max, max_tail)
    even = FockState(plus.amplitudes + minus.amplitudes, n_max, 1, plus.tail_mass).normalize()
    odd = FockState(plus.amplitudes - minus.amplitudes, n_max, 1, plus.tail_mass).normalize()
    return even, odd


def dynamic_basis(alpha: float, basis_scale: float, n_max: int, max_tail: float | None = None) -> tuple[FockState, FockState]:
    """Cat basis, continued to its ``beta -> 0`` limit ``(|0>, |1>)`` below the degeneracy threshold."""
    if alpha * basis_scale < DEGENERATE_AMPLITUDE:
        return fock.basis_state(0, n_max), fock.basis_state(1, n_max)
    return pm_basis(alpha, basis_scale, n_max, max_tail)


def coherent_qubit(mu: complex, nu: complex, amplitude: float, n_max: int, max_tail: float | None = None) -> FockState:
    """Normalized ``N (mu|amplitude> + nu|-amplitude>)``."""
    plus = fock.coherent_state(amplitude, n_max, max_tail)
    minus = fock.coherent_state(-amplitude, n_max, max_tail)
    return FockState(mu * plus.amplitudes + nu * minus.amplitudes, n_max, 1, plus.tail_mass).normalize()


def make_coherent(
    bloch: BlochAngles, alpha: float, basis_scale: float, n_max: int, max_tail: float | None = None
) -> FockState:
    """``cos(theta/2)|+> + e^{i phi} sin(theta/2)|->`` in the cat basis at ``basis_scale * alpha``."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    even, odd = dynamic_basis(alpha, basis_scale, n_max, max_tail)
    return bloch.mu * even + bloch.nu * odd


def bell_states(encoding: Encoding | str, n_max: int, alpha: float | None = None, basis_scale: float = 1.0) -> dict[BellOutcome, FockState]:
    """The four Bell states on the measured mode pair (or quadruple, for PSP)."""
    enc = Encoding(encoding)
    s2 = 1.0 / math.sqrt(2.0)
    if enc is Encoding.VSP:
        k = {occ: fock.basis_state(occ, n_max) for occ in [(0, 0), (0, 1), (1, 0), (1, 1)]}
        return {
            BellOutcome.PSI_MINUS: s2 * (k[0, 1] - k[1, 0]),
            BellOutcome.PSI_PLUS: s2 * (k[0, 1] + k[1, 0]),
            BellOutcome.PHI_MINUS: s2 * (k[0, 0] - k[1, 1]),
            BellOutcome.PHI_PLUS: s2 * (k[0, 0] + k[1, 1]),
        }
    if enc is Encoding.PSP:
        h, v = psp_basis(n_max)
        hh, hv, vh, vv = (fock.tensor(x, y) for x in (h, v) for y in (h, v))
        return {
            BellOutcome.PSI_MINUS: s2 * (hv - vh),
            BellOutcome.PSI_PLUS: s2 * (hv + vh),
            BellOutcome.PHI_MINUS: s2 * (hh - vv),
            BellOutcome.PHI_PLUS: s2 * (hh + vv),
        }
    if alpha is None:
        raise ValueError("coherent Bell states need alpha")
    beta = alpha * basis_scale
    p = fock.coherent_state(beta, n_max)
    m = fock.coherent_state(-beta, n_max)
    pm, mp, pp, mm = fock.tensor(p, m), fock.tensor(m, p), fock.tensor(p, p), fock.tensor(m, m)
    n_plus, n_minus = _cat_norms(math.sqrt(2.0) * beta)
    return {
        BellOutcome.PSI_MINUS: n_minus * (pm - mp),
        BellOutcome.PSI_PLUS: n_plus * (pm + mp),
        BellOutcome.PHI_MINUS: n_minus * (pp - mm),
        BellOutcome.PHI_PLUS: n_plus * (pp + mm),
    }


def ideal_resource(encoding: Encoding | str, n_max: int, alpha: float | None = None) -> FockState:
    """Lossless ``|Psi^->`` resource on (sender, receiver) modes."""
    enc = Encoding(encoding)
    return bell_states(enc, n_max, alpha)[BellOutcome.PSI_MINUS]


def channel_state(encoding: Encoding | str, p: LossPoint, alpha: float | None = None, n_max: int = 1) -> DensityOperator:
    """``|Psi^->`` resource after each arm has travelled for half the direct-transmission time."""
    enc = Encoding(encoding)
    psi = ideal_resource(enc, n_max, alpha)
    return apply_loss(psi.dm(), p.t, range(psi.modes))
