"""Closed-form average fidelities and success probabilities.

Every fidelity is a function of the full-time amplitude decay factor ``t``
(see :mod:`qtx.channel`); teleportation curves already include the halved
per-arm travel time. All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .qubits import Encoding

T_SERIES = 1e-4  # 1 - t below which the VSP teleportation series is used
COH_T_SERIES = 1e-5  # same for coherent-state teleportation
SMALL_ATANH = 1e-2


def _as_t(t):
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)):
        raise ValueError("t must lie in [0, 1]")
    return t


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def f_direct_vsp(t):
    t = _as_t(t)
    return _ret((3.0 + t * (2.0 + t)) / 6.0)


def _teleport_vsp_series(u):
    # F = sum_k c_k u^k with u = 1 - t, from F = [1 - (1-u)^2 atanh(u)/u] / (2u)
    out = np.zeros_like(u)
    for k in range(12):
        n = k + 1
        coef = _s(n) - 2.0 * _s(n - 1) + _s(n - 2)
        out = out - 0.5 * coef * u**k
    return out


def _s(j: int) -> float:
    return 1.0 / (j + 1) if j >= 0 and j % 2 == 0 else 0.0


def f_teleport_vsp(t):
    """Average teleportation fidelity of VSP qubits over the successful events."""
    t = _as_t(t)
    u = 1.0 - t
    with np.errstate(divide="ignore", invalid="ignore"):
        # log(t / (2 - t)) = -2 atanh(1 - t), exact in relative terms near t = 1
        direct = 1.0 / (2.0 * u) - t * t / (2.0 * u * u) * np.arctanh(u)
    out = np.where(u < T_SERIES, _teleport_vsp_series(u), direct)
    return _ret(np.where(t == 0.0, 0.5, out))


def f_direct_psp(t):
    t = _as_t(t)
    return _ret(t * t)


def f_teleport_psp(t):
    t = _as_t(t)
    return _ret(t.copy() if t.ndim else t)


def _one_minus_exp(x):
    return -np.expm1(-x)


def f_direct_coh(t, alpha):
    """Average direct-transmission fidelity of coherent-state qubits in the damped basis.

    Rearranged so every term is non-negative, which keeps it accurate from
    ``alpha -> 0`` (where it reduces to :func:`f_direct_vsp`) to large ``alpha``.
    """
    t = _as_t(t)
    a = float(alpha) ** 2
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if a == 0.0:
        return f_direct_vsp(t)
    r2 = (1.0 - t) * (1.0 + t)
    e_full = _one_minus_exp(4.0 * a)
    e_t = _one_minus_exp(4.0 * a * t * t)
    damp = np.exp(-2.0 * a * r2)
    num = 3.0 * e_full + damp * e_t + (1.0 + damp) * np.sqrt(e_full * e_t)
    return _ret(num / (6.0 * e_full))


def _atanh_minus_x(x):
    """``atanh(x) - x`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = np.zeros_like(x)
    term = x * x2
    for k in range(1, 10):
        series = series + term / (2 * k + 1)
        term = term * x2
    with np.errstate(divide="ignore"):
        direct = np.arctanh(x) - x
    return np.where(np.abs(x) < SMALL_ATANH, series, direct)


def f_teleport_coh(t, alpha):
    """Average teleportation fidelity of coherent-state qubits over the successful events.

    With ``s = 2|alpha|^2`` and ``A = s (t - 1)`` the transcribed expression is
    ``1/2 csch A {csch A sinh^2(s+A) cosh(A-s) atanh(sinh A / sinh s) - sinh s cosh(s+A)}``.
    Splitting ``atanh x = x + (atanh x - x)`` cancels the leading exponentials
    analytically; the remainder is evaluated as differences of coshes written
    as products of sinhs. Near ``t = 1`` a third-order expansion in ``A`` is used.
    """
    t = _as_t(t)
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    s = 2.0 * float(alpha) ** 2
    if s == 0.0:
        return f_teleport_vsp(t)
    u = 1.0 - t
    a = -s * u
    coth = 1.0 / np.tanh(s)
    c3 = (4.0 / 9.0) * coth + (4.0 / 15.0) * coth / np.sinh(s) ** 2
    series = 1.0 + a * ((2.0 / 3.0) * coth + a * ((1.0 + coth * coth) / 3.0 + a * c3))
    with np.errstate(divide="ignore", invalid="ignore"):
        sinh_a, sinh_s = np.sinh(a), np.sinh(s)
        # sinh^2(s+A) cosh(s-A) - sinh^2(s) cosh(s+A)
        p_minus_q = (
            0.5 * np.sinh(s + 1.5 * a) * np.sinh(1.5 * a)
            + 1.5 * np.sinh(s - 0.5 * a) * np.sinh(0.5 * a)
            + np.sinh(s + 0.5 * a) * np.sinh(0.5 * a)
        )
        p = np.sinh(s + a) ** 2 * np.cosh(s - a)
        first = p_minus_q / (2.0 * sinh_a * sinh_s)
        second = p * _atanh_minus_x(sinh_a / sinh_s) / (2.0 * sinh_a * sinh_a)
        direct = first + second
    out = np.where(u < COH_T_SERIES, series, direct)
    return _ret(np.where(t == 0.0, 0.5, out))


def p_success(encoding: Encoding | str, t):
    """Bloch-averaged success probability of linear-optics teleportation."""
    t = _as_t(t)
    enc = Encoding(encoding)
    if enc is Encoding.PSP:
        return _ret(0.5 * t)
    return _ret(np.full_like(t, 0.5))


def mean_photon_coh(alpha):
    """Bloch-averaged mean photon number ``|alpha|^2 / tanh(2|alpha|^2)`` of a fresh coherent qubit."""
    a = np.asarray(alpha, dtype=float) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a / np.tanh(2.0 * a)
    # a / tanh(2a) = 1/2 + 2a^2/3 + O(a^4)
    return _ret(np.where(a < 1e-6, 0.5 + (2.0 / 3.0) * a * a, out))


def fidelity(protocol: str, encoding: Encoding | str, t, alpha: float | None = None):
    """Dispatch to the closed form for ``(protocol, encoding)``."""
    enc = Encoding(encoding)
    table = {
        ("direct", Encoding.VSP): f_direct_vsp,
        ("teleport", Encoding.VSP): f_teleport_vsp,
        ("direct", Encoding.PSP): f_direct_psp,
        ("teleport", Encoding.PSP): f_teleport_psp,
    }
    protocol = str(getattr(protocol, "value", protocol))
    if enc is Encoding.COH:
        if alpha is None:
            raise ValueError("coherent-state fidelities need alpha")
        fn = f_direct_coh if protocol == "direct" else f_teleport_coh
        if protocol not in ("direct", "teleport"):
            raise ValueError(f"unknown protocol {protocol!r}")
        return fn(t, alpha)
    try:
        return table[protocol, enc](t)
    except KeyError:
        raise ValueError(f"unknown protocol {protocol!r}") from None
