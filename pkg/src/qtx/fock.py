"""Truncated Fock-space states, operators and ideal optical elements.

Multimode objects are stored flat in C order, mode 0 being the most
significant index, so ``np.kron`` of single-mode vectors matches
:func:`tensor`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc

TOL_HERM = 1e-12
PSD_SLACK = 1e-10
TOL_NORM = 1e-12
FIDELITY_SLACK = 1e-10


class TruncationError(ValueError):
    """Raised when a truncated representation loses more weight than allowed."""

    def __init__(self, message: str, tail: float):
        super().__init__(message)
        self.tail = tail


@dataclass(frozen=True, eq=False)
class FockState:
    amplitudes: np.ndarray
    n_max: int
    modes: int = 1
    tail_mass: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.n_max < 0:
            raise ValueError(f"n_max must be non-negative, got {self.n_max}")
        if amps.size != (self.n_max + 1) ** self.modes:
            raise ValueError(
                f"expected {(self.n_max + 1) ** self.modes} amplitudes for "
                f"{self.modes} mode(s) at n_max={self.n_max}, got {amps.size}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "FockState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockState(self.amplitudes / n, self.n_max, self.modes, self.tail_mass)

    def inner(self, other: "FockState") -> complex:
        """``<self|other>``."""
        _check_compatible(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def dm(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.n_max, self.modes)

    def __add__(self, other: "FockState") -> "FockState":
        _check_compatible(self, other)
        return FockState(self.amplitudes + other.amplitudes, self.n_max, self.modes)

    def __sub__(self, other: "FockState") -> "FockState":
        _check_compatible(self, other)
        return FockState(self.amplitudes - other.amplitudes, self.n_max, self.modes)

    def __mul__(self, c: complex) -> "FockState":
        return FockState(c * self.amplitudes, self.n_max, self.modes, self.tail_mass)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    n_max: int
    modes: int = 1

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.complex128)
        d = (self.n_max + 1) ** self.modes
        if mat.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalize(self) -> "DensityOperator":
        tr = self.trace()
        if tr <= 0.0:
            raise ValueError("cannot normalize an operator with non-positive trace")
        return DensityOperator(self.matrix / tr, self.n_max, self.modes)

    def validate(self, trace_tol: float | None = None) -> "DensityOperator":
        """Check Hermiticity and positivity (and the trace, if ``trace_tol`` is given)."""
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm > TOL_HERM:
            raise ValueError(f"operator is not Hermitian (max deviation {herm:.3e})")
        lowest = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lowest < -PSD_SLACK:
            raise ValueError(f"operator is not positive semidefinite (eigenvalue {lowest:.3e})")
        if trace_tol is not None and abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace():.15f} differs from 1 by more than {trace_tol}")
        return self

    def __add__(self, other: "DensityOperator") -> "DensityOperator":
        _check_compatible(self, other)
        return DensityOperator(self.matrix + other.matrix, self.n_max, self.modes)

    def __mul__(self, c: float) -> "DensityOperator":
        return DensityOperator(c * self.matrix, self.n_max, self.modes)

    __rmul__ = __mul__


FockObject = Union[FockState, DensityOperator]


def _check_compatible(a: FockObject, b: FockObject) -> None:
    if a.n_max != b.n_max or a.modes != b.modes:
        raise ValueError(
            f"dimension mismatch: (n_max={a.n_max}, modes={a.modes}) vs "
            f"(n_max={b.n_max}, modes={b.modes})"
        )


def _check_mode(obj: FockObject, mode: int) -> int:
    mode = int(mode)
    if not 0 <= mode < obj.modes:
        raise IndexError(f"mode {mode} out of range for a {obj.modes}-mode object")
    return mode


def default_n_max(alpha_eff: float) -> int:
    """Truncation rule ``ceil(a^2 + 8a + 10)`` for the largest amplitude ``a`` in play."""
    a = abs(alpha_eff)
    return int(math.ceil(a * a + 8.0 * a + 10.0))


def poisson_tail(alpha: complex, n_max: int) -> float:
    """Weight of a coherent state above photon number ``n_max``."""
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    return float(gammainc(n_max + 1, lam))


def basis_state(occupations: Sequence[int] | int, n_max: int) -> FockState:
    """Number state ``|n_0, n_1, ...>``."""
    occ = (occupations,) if isinstance(occupations, (int, np.integer)) else tuple(occupations)
    if any(n < 0 or n > n_max for n in occ):
        raise ValueError(f"occupations {occ} outside 0..{n_max}")
    amps = np.zeros((n_max + 1,) * len(occ), dtype=np.complex128)
    amps[occ] = 1.0
    return FockState(amps.reshape(-1), n_max, len(occ))


def vacuum(n_max: int, modes: int = 1) -> FockState:
    return basis_state((0,) * modes, n_max)


def coherent_state(alpha: complex, n_max: int, max_tail: float | None = None) -> FockState:
    """Truncated coherent state ``|alpha>``.

    Amplitudes are not renormalized after truncation; the discarded weight is
    kept in ``tail_mass``. If ``max_tail`` is given and exceeded, a
    :class:`TruncationError` is raised.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max}")
    tail = poisson_tail(alpha, n_max)
    if max_tail is not None and tail > max_tail:
        raise TruncationError(
            f"coherent state alpha={alpha} loses {tail:.3e} beyond n_max={n_max} "
            f"(budget {max_tail:.1e})",
            tail,
        )
    amps = np.empty(n_max + 1, dtype=np.complex128)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_max + 1):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return FockState(amps, n_max, 1, tail)


def tensor(a: FockObject, b: FockObject) -> FockObject:
    if a.n_max != b.n_max:
        raise ValueError(f"n_max mismatch: {a.n_max} vs {b.n_max}")
    if isinstance(a, FockState) and isinstance(b, FockState):
        return FockState(np.kron(a.amplitudes, b.amplitudes), a.n_max, a.modes + b.modes)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.n_max, a.modes + b.modes)
    raise TypeError("tensor needs two states or two density operators")


def tensor_all(objs: Iterable[FockObject]) -> FockObject:
    objs = list(objs)
    out = objs[0]
    for o in objs[1:]:
        out = tensor(out, o)
    return out


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    keep = sorted({_check_mode(rho, k) for k in keep})
    if not keep:
        raise ValueError("keep must name at least one mode")
    m, n = rho.modes, rho.n_max + 1
    t = rho.matrix.reshape((n,) * (2 * m))
    ket = list(range(m))
    bra = [m + i if i in keep else i for i in range(m)]
    out = keep + [m + i for i in keep]
    reduced = np.einsum(t, ket + bra, out)
    d = n ** len(keep)
    return DensityOperator(reduced.reshape(d, d), rho.n_max, len(keep))


@lru_cache(maxsize=None)
def _annihilation(n_max: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(np.complex128)
    a.setflags(write=False)
    return a


def annihilation(n_max: int) -> np.ndarray:
    if n_max < 1:
        raise ValueError("annihilation operator needs n_max >= 1")
    return _annihilation(n_max).copy()


def creation(n_max: int) -> np.ndarray:
    return annihilation(n_max).conj().T


def number_op(n_max: int) -> np.ndarray:
    if n_max < 1:
        raise ValueError("number operator needs n_max >= 1")
    return np.diag(np.arange(n_max + 1, dtype=float)).astype(np.complex128)


def apply_mode_operator(obj: FockObject, op: np.ndarray, modes: Sequence[int]) -> FockObject:
    """Apply ``op`` (acting on ``modes`` jointly, in the given order) to a state or operator.

    Operators are conjugated, ``rho -> op rho op^dagger``.
    """
    modes = [_check_mode(obj, k) for k in modes]
    if len(set(modes)) != len(modes):
        raise ValueError(f"modes must be distinct, got {modes}")
    n, m, k = obj.n_max + 1, obj.modes, len(modes)
    op_t = np.asarray(op).reshape((n,) * (2 * k))
    op_axes = list(range(k, 2 * k))
    if isinstance(obj, FockState):
        t = obj.amplitudes.reshape((n,) * m)
        t = np.moveaxis(np.tensordot(op_t, t, axes=(op_axes, modes)), list(range(k)), modes)
        return FockState(t.reshape(-1), obj.n_max, m)
    t = obj.matrix.reshape((n,) * (2 * m))
    t = np.moveaxis(np.tensordot(op_t, t, axes=(op_axes, modes)), list(range(k)), modes)
    bra = [m + i for i in modes]
    t = np.moveaxis(np.tensordot(op_t.conj(), t, axes=(op_axes, bra)), list(range(k)), bra)
    d = n**m
    return DensityOperator(t.reshape(d, d), obj.n_max, m)


def parity_op(n_max: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(n_max + 1)).astype(np.complex128)


def phase_shift_pi(obj: FockObject, mode: int) -> FockObject:
    """pi phase shift on one mode: ``|n> -> (-1)^n |n>``."""
    return apply_mode_operator(obj, parity_op(obj.n_max), [mode])


@lru_cache(maxsize=32)
def _beam_splitter_unitary(n_max: int) -> np.ndarray:
    # pi phase on the second input port, then a real 50:50 rotation
    n = n_max + 1
    a = _annihilation(n_max)
    eye = np.eye(n)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    gen = a1.conj().T @ a2 - a1 @ a2.conj().T
    rot = expm(-0.25 * np.pi * gen)
    u = rot @ np.kron(eye, parity_op(n_max))
    u.setflags(write=False)
    return u


def beam_splitter_unitary(n_max: int) -> np.ndarray:
    """Two-mode 50:50 beam splitter mapping creation operators as
    ``a^+ -> (a^+ + b^+)/sqrt2``, ``b^+ -> (a^+ - b^+)/sqrt2``.

    Exact on the subspace with at most ``n_max`` photons in total.
    """
    return _beam_splitter_unitary(n_max).copy()


def beam_splitter_50_50(obj: FockObject, modes: tuple[int, int]) -> FockObject:
    if len(modes) != 2 or modes[0] == modes[1]:
        raise ValueError(f"beam splitter needs two distinct modes, got {modes}")
    return apply_mode_operator(obj, _beam_splitter_unitary(obj.n_max), modes)


def fidelity_pure(psi: FockState, rho: DensityOperator) -> float:
    """``<psi|rho|psi>``; values within 1e-10 outside [0, 1] are clamped."""
    _check_compatible(psi, rho)
    v = psi.amplitudes
    f = float(np.real(np.vdot(v, rho.matrix @ v)))
    if -FIDELITY_SLACK <= f < 0.0:
        return 0.0
    if 1.0 < f <= 1.0 + FIDELITY_SLACK:
        return 1.0
    return f


def expectation(rho: DensityOperator, op: np.ndarray) -> complex:
    return complex(np.trace(rho.matrix @ op))
