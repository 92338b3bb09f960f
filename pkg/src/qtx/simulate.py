"""Brute-force transfer simulation in truncated Fock space.

Nothing here uses a closed-form fidelity. Direct transmission applies the
loss channel to the input; teleportation builds the lossy resource, performs
the Bell measurement on (input, sender arm), corrects the receiver and
compares against the target.

Both protocols are linear in the input density operator, so Bloch averages
are computed from "process blocks": the channel is run once on every
``|e_i><e_j|`` of the two-dimensional input code space, and each quadrature
node combines those blocks with its qubit coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import fock, qubits
from .channel import LossPoint, apply_loss, protocol_transmissions
from .fock import DensityOperator, FockState, TruncationError
from .qubits import BellOutcome, BlochAngles, Encoding, QubitSpec

DEFAULT_MAX_TAIL = 1e-10
ZERO_PROBABILITY = 1e-14

SUCCESS = {
    Encoding.VSP: (BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS),
    Encoding.PSP: (BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS),
    Encoding.COH: (BellOutcome.PSI_MINUS, BellOutcome.PHI_MINUS),
}


class Protocol(str, Enum):
    DIRECT = "direct"
    TELEPORT = "teleport"


class InputAmplitude(str, Enum):
    """Amplitude at which a coherent qubit enters the teleportation Bell measurement."""

    ARM = "arm"  # cat basis matched to the damped resource arms, sqrt(t) * alpha
    FRESH = "fresh"  # undamped cat basis at alpha


@dataclass(frozen=True)
class TransferOutcome:
    outcome: BellOutcome
    probability: float
    output: DensityOperator | None = None
    conditional_fidelity: float | None = None


@dataclass(frozen=True)
class QuadratureSpec:
    """Product rule over the sphere: Gauss-Legendre in cos(theta), uniform in phi."""

    n_theta: int = 32
    n_phi: int = 32

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("quadrature node counts must be positive")

    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened ``(theta, phi, weight)`` with weights summing to one."""
        x, wx = np.polynomial.legendre.leggauss(self.n_theta)
        theta = np.arccos(x)
        phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        th, ph = np.meshgrid(theta, phi, indexing="ij")
        w = np.outer(0.5 * wx, np.full(self.n_phi, 1.0 / self.n_phi))
        return th.ravel(), ph.ravel(), w.ravel()


@dataclass(frozen=True)
class BlochAverage:
    avg_fidelity: float
    avg_success: float
    pooled_fidelity: float
    n_max: int
    tail_mass: float = 0.0
    min_success: float = field(default=0.0, compare=False)


# --- truncation ---------------------------------------------------------------


def resolve_n_max(encoding: Encoding, protocol: Protocol, alpha: float | None, n_max: int | None) -> int:
    if n_max is not None:
        if n_max < 1:
            raise ValueError(f"n_max must be at least 1, got {n_max}")
        return int(n_max)
    if encoding is not Encoding.COH:
        return 1
    return fock.default_n_max(_largest_amplitude(protocol, alpha))


def _largest_amplitude(protocol: Protocol, alpha: float) -> float:
    # the beam splitter folds two arms of amplitude <= alpha into one mode
    return math.sqrt(2.0) * alpha if protocol is Protocol.TELEPORT else alpha


def check_truncation(encoding: Encoding, protocol: Protocol, alpha: float | None, n_max: int, max_tail: float | None) -> float:
    if encoding is not Encoding.COH:
        return 0.0
    tail = fock.poisson_tail(_largest_amplitude(protocol, alpha), n_max)
    if max_tail is not None and tail > max_tail:
        raise TruncationError(
            f"n_max={n_max} drops {tail:.3e} of the photon-number distribution for "
            f"alpha={alpha} ({protocol.value}); budget is {max_tail:.1e}",
            tail,
        )
    return tail


# --- code spaces ------------------------------------------------------------------


def _code_basis(spec_encoding: Encoding, alpha: float | None, scale: float, n_max: int) -> tuple[FockState, FockState]:
    if spec_encoding is Encoding.VSP:
        return fock.basis_state(0, n_max), fock.basis_state(1, n_max)
    if spec_encoding is Encoding.PSP:
        return qubits.psp_basis(n_max)
    return qubits.dynamic_basis(alpha, scale, n_max)


def _target_scale(protocol: Protocol, p: LossPoint) -> float:
    return p.t if protocol is Protocol.DIRECT else math.sqrt(p.t)


def _input_scale(protocol: Protocol, p: LossPoint, amplitude: InputAmplitude) -> float:
    if protocol is Protocol.TELEPORT and amplitude is InputAmplitude.ARM:
        return math.sqrt(p.t)
    return 1.0


def _input_basis(
    encoding: Encoding, protocol: Protocol, p: LossPoint, alpha: float | None, n_max: int, amplitude: InputAmplitude
) -> tuple[FockState, FockState]:
    return _code_basis(encoding, alpha, _input_scale(protocol, p, amplitude), n_max)


def _state(basis: Sequence[FockState], coeffs: np.ndarray) -> FockState:
    return FockState(coeffs[0] * basis[0].amplitudes + coeffs[1] * basis[1].amplitudes, basis[0].n_max, basis[0].modes)


# --- Bell measurement ---------------------------------------------------------------


@lru_cache(maxsize=16)
def _cat_measurement_vectors(n_max: int) -> dict[BellOutcome, np.ndarray]:
    """Rows ``U^dagger |n1, n2>`` of the beam-splitter + number-resolving measurement, grouped by label."""
    n = n_max + 1
    u = fock._beam_splitter_unitary(n_max)
    groups: dict[BellOutcome, list[np.ndarray]] = {label: [] for label in qubits.BELL_LABELS}
    for k in range(1, n):
        label_second = BellOutcome.PSI_MINUS if k % 2 else BellOutcome.PSI_PLUS
        label_first = BellOutcome.PHI_MINUS if k % 2 else BellOutcome.PHI_PLUS
        groups[label_second].append(u[0 * n + k].conj())
        groups[label_first].append(u[k * n + 0].conj())
    out = {label: np.array(rows) for label, rows in groups.items()}
    for arr in out.values():
        arr.setflags(write=False)
    return out


def measurement_vectors(encoding: Encoding, n_max: int) -> dict[BellOutcome, np.ndarray]:
    """Per label, the stack of joint states ``|w>`` whose projectors make up that outcome.

    VSP and PSP use the ideal Bell projectors; coherent qubits use a 50:50
    beam splitter followed by photon counting, classified as
    ``(0, odd) -> PsiMinus``, ``(odd, 0) -> PhiMinus``, ``(0, even > 0) -> PsiPlus``,
    ``(even > 0, 0) -> PhiPlus``. Everything else is inconclusive.
    """
    if encoding is Encoding.COH:
        return _cat_measurement_vectors(n_max)
    states = qubits.bell_states(encoding, n_max)
    return {label: states[label].amplitudes[None, :] for label in qubits.BELL_LABELS}


def _permute_modes(rho: DensityOperator, order: Sequence[int]) -> np.ndarray:
    n, m = rho.n_max + 1, rho.modes
    t = rho.matrix.reshape((n,) * (2 * m))
    t = np.transpose(t, list(order) + [m + i for i in order])
    return t.reshape(n**m, n**m)


def bell_measure(
    joint: DensityOperator, encoding: Encoding | str, measured: Sequence[int] | None = None
) -> list[tuple[BellOutcome, float, DensityOperator | None]]:
    """Bell measurement on ``measured`` modes of a joint operator.

    Returns ``(label, probability, conditional state of the unmeasured modes)``
    for each of the four Bell labels plus ``Inconclusive`` for the rest.
    Conditional states are ``None`` when nothing is left unmeasured or the
    outcome has zero probability.
    """
    enc = Encoding(encoding)
    q = enc.qubit_modes
    if measured is None:
        measured = list(range(2 * q))
    measured = list(measured)
    if len(measured) != 2 * q:
        raise ValueError(f"{enc.value} Bell measurement acts on {2 * q} modes, got {measured}")
    rest = [i for i in range(joint.modes) if i not in measured]
    n = joint.n_max + 1
    d_meas, d_rest = n ** len(measured), n ** len(rest)
    big = _permute_modes(joint, measured + rest).reshape(d_meas, d_rest, d_meas, d_rest)
    vectors = measurement_vectors(enc, joint.n_max)

    def conditional(block: np.ndarray, prob: float) -> DensityOperator | None:
        if not rest or prob <= ZERO_PROBABILITY:
            return None
        return DensityOperator(block / prob, joint.n_max, len(rest))

    results = []
    accounted = np.zeros((d_rest, d_rest), dtype=np.complex128)
    for label in qubits.BELL_LABELS:
        w = vectors[label]
        block = np.einsum("kx,xbyc,ky->bc", w.conj(), big, w, optimize=True)
        accounted += block
        prob = float(np.trace(block).real)
        results.append((label, prob, conditional(block, prob)))
    remainder = np.einsum("xbxc->bc", big) - accounted
    prob = float(np.trace(remainder).real)
    results.append((BellOutcome.INCONCLUSIVE, prob, conditional(remainder, prob)))
    return results


def _receiver_blocks(
    inputs: Sequence[FockState], resource: DensityOperator, vectors: np.ndarray, q: int
) -> np.ndarray:
    """``M[i, j] = sum_k <w_k| (|e_i><e_j| (x) resource) |w_k>`` on the receiver modes.

    ``resource`` lives on (sender, receiver) with ``q`` modes each; ``vectors``
    are joint (input, sender) states of shape ``(K, d_in * d_s)``.
    """
    n = resource.n_max + 1
    d = n**q
    r = resource.matrix.reshape(d, d, d, d)
    e = np.array([s.amplitudes for s in inputs])
    w = vectors.reshape(-1, d, d)
    # L[i, k, a] = sum_c conj(w[k, c, a]) e[i, c]
    lam = np.einsum("kca,ic->ika", w.conj(), e, optimize=True)
    y = np.einsum("ika,abcd->ikbcd", lam, r, optimize=True)
    return np.einsum("ikbcd,jkc->ijbd", y, lam.conj(), optimize=True)


def _correction(encoding: Encoding, label: BellOutcome, n_max: int) -> np.ndarray | None:
    if encoding is Encoding.VSP and label is BellOutcome.PSI_PLUS:
        return fock.parity_op(n_max)
    if encoding is Encoding.PSP and label is BellOutcome.PSI_PLUS:
        # sigma_z on the dual-rail qubit: pi phase on the V mode
        return np.kron(np.eye(n_max + 1), fock.parity_op(n_max))
    if encoding is Encoding.COH and label is BellOutcome.PHI_MINUS:
        return fock.parity_op(n_max)
    return None


# --- per-input runs ---------------------------------------------------------------


def _resolve(spec: QubitSpec, protocol: Protocol, n_max: int | None, max_tail: float | None) -> int:
    n = resolve_n_max(spec.encoding, protocol, spec.alpha, n_max)
    check_truncation(spec.encoding, protocol, spec.alpha, n, max_tail)
    return n


def _coefficients(bloch: BlochAngles) -> np.ndarray:
    return np.array([bloch.mu, bloch.nu])


def run_direct(spec: QubitSpec, p: LossPoint, n_max: int | None = None, max_tail: float | None = DEFAULT_MAX_TAIL) -> TransferOutcome:
    """Send the qubit through loss with transmission ``t^2`` on every mode.

    For coherent qubits the sender prepares the Bloch vector in the undamped
    cat basis ``|+-(alpha)>`` and the receiver's target is the same Bloch
    vector in the damped basis ``|+-(t alpha)>``.
    """
    n = _resolve(spec, Protocol.DIRECT, n_max, max_tail)
    c = _coefficients(spec.bloch)
    enc = spec.encoding
    psi_in = _state(_input_basis(enc, Protocol.DIRECT, p, spec.alpha, n, InputAmplitude.FRESH), c)
    target = _state(_code_basis(enc, spec.alpha, p.t, n), c)
    out = apply_loss(psi_in.dm(), protocol_transmissions(p).direct, range(psi_in.modes))
    prob = out.trace()
    out = out.normalize()
    return TransferOutcome(BellOutcome.IDENTITY, prob, out, fock.fidelity_pure(target, out))


def run_teleport(
    spec: QubitSpec,
    p: LossPoint,
    n_max: int | None = None,
    max_tail: float | None = DEFAULT_MAX_TAIL,
    amplitude: InputAmplitude | str = InputAmplitude.ARM,
) -> list[TransferOutcome]:
    """Teleport one input state; one entry per successful label plus a merged ``Inconclusive``."""
    enc = spec.encoding
    amplitude = InputAmplitude(amplitude)
    n = _resolve(spec, Protocol.TELEPORT, n_max, max_tail)
    q = enc.qubit_modes
    c = _coefficients(spec.bloch)
    psi_in = _state(_input_basis(enc, Protocol.TELEPORT, p, spec.alpha, n, amplitude), c)
    target = _state(_code_basis(enc, spec.alpha, math.sqrt(p.t), n), c)
    resource = qubits.channel_state(enc, p, spec.alpha, n)
    vectors = measurement_vectors(enc, n)
    outcomes = []
    total = 0.0
    for label in SUCCESS[enc]:
        block = _receiver_blocks([psi_in], resource, vectors[label], q)[0, 0]
        fix = _correction(enc, label, n)
        if fix is not None:
            block = fix @ block @ fix.conj().T
        prob = float(np.trace(block).real)
        total += prob
        if prob <= ZERO_PROBABILITY:
            outcomes.append(TransferOutcome(label, prob))
            continue
        out = DensityOperator(block / prob, n, q)
        outcomes.append(TransferOutcome(label, prob, out, fock.fidelity_pure(target, out)))
    norm = psi_in.norm() ** 2 * resource.trace()
    outcomes.append(TransferOutcome(BellOutcome.INCONCLUSIVE, norm - total))
    return outcomes


def success_conditioned_fidelity(outcomes: Sequence[TransferOutcome]) -> float:
    """Probability-weighted fidelity over the successful outcomes of one input."""
    num = sum(o.probability * o.conditional_fidelity for o in outcomes if o.conditional_fidelity is not None)
    den = sum(o.probability for o in outcomes if o.conditional_fidelity is not None)
    return num / den


# --- Bloch averages ---------------------------------------------------------------


@dataclass(frozen=True)
class ProcessBlocks:
    """A transfer protocol reduced to its action on the two-dimensional input code space.

    ``fidelity[i, j, a, b] = <r_a| M_ij |r_b>`` and ``probability[i, j] = tr M_ij``,
    summed over successful outcomes, where ``M_ij`` is the corrected receiver
    operator produced by input ``|e_i><e_j|`` and ``r`` is the target basis.
    ``gram`` is the Gram matrix of the (possibly unnormalized) input basis.
    ``fallback[a, b]`` is ``<r_a| rho_rx |r_b>`` for the unconditioned receiver
    state, used only when no successful outcome can occur.
    """

    fidelity: np.ndarray
    probability: np.ndarray
    gram: np.ndarray
    fallback: np.ndarray
    n_max: int
    tail_mass: float

    def evaluate(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-node success probability and success-conditioned fidelity for coefficient rows ``(N, 2)``."""
        c = np.asarray(coeffs, dtype=np.complex128)
        cc = c.conj()
        norm = np.einsum("ni,ij,nj->n", cc, self.gram, c).real
        prob = np.einsum("ni,nj,ij->n", c, cc, self.probability).real / norm
        fp = np.einsum("ni,nj,na,nb,ijab->n", c, cc, cc, c, self.fidelity, optimize=True).real / norm
        fb = np.einsum("na,nb,ab->n", cc, c, self.fallback).real
        safe = prob > ZERO_PROBABILITY
        fid = np.where(safe, fp / np.where(safe, prob, 1.0), fb)
        return prob, fid

    def pooled(self, coeffs: np.ndarray, weights: np.ndarray) -> float:
        c = np.asarray(coeffs, dtype=np.complex128)
        cc = c.conj()
        norm = np.einsum("ni,ij,nj->n", cc, self.gram, c).real
        prob = np.einsum("ni,nj,ij->n", c, cc, self.probability).real / norm
        fp = np.einsum("ni,nj,na,nb,ijab->n", c, cc, cc, c, self.fidelity, optimize=True).real / norm
        den = float(np.dot(weights, prob))
        return float(np.dot(weights, fp)) / den if den > ZERO_PROBABILITY else float("nan")


def _gram(basis: Sequence[FockState]) -> np.ndarray:
    e = np.array([s.amplitudes for s in basis])
    return e.conj() @ e.T


def _project(target: Sequence[FockState], ops: np.ndarray) -> np.ndarray:
    """``<r_a| ops[...] |r_b>`` over trailing operator axes."""
    r = np.array([s.amplitudes for s in target])
    return np.einsum("ax,...xy,by->...ab", r.conj(), ops, r, optimize=True)


def process_blocks(
    protocol: Protocol | str,
    encoding: Encoding | str,
    p: LossPoint,
    alpha: float | None = None,
    n_max: int | None = None,
    max_tail: float | None = DEFAULT_MAX_TAIL,
    amplitude: InputAmplitude | str = InputAmplitude.ARM,
) -> ProcessBlocks:
    protocol, enc, amplitude = Protocol(protocol), Encoding(encoding), InputAmplitude(amplitude)
    if enc is Encoding.COH and alpha is None:
        raise ValueError("coherent-state qubits need alpha")
    if enc is not Encoding.COH and alpha is not None:
        raise ValueError(f"alpha is only meaningful for coherent-state qubits, not {enc.value}")
    n = resolve_n_max(enc, protocol, alpha, n_max)
    tail = check_truncation(enc, protocol, alpha, n, max_tail)
    q = enc.qubit_modes
    inputs = _input_basis(enc, protocol, p, alpha, n, amplitude)
    target = _code_basis(enc, alpha, _target_scale(protocol, p), n)
    gram = _gram(inputs)
    d = n + 1
    if protocol is Protocol.DIRECT:
        eta = protocol_transmissions(p).direct
        e = [s.amplitudes for s in inputs]
        ops = np.empty((2, 2, d**q, d**q), dtype=np.complex128)
        for i in range(2):
            for j in range(2):
                ops[i, j] = apply_loss(DensityOperator(np.outer(e[i], e[j].conj()), n, q), eta, range(q)).matrix
        probability = np.einsum("ijxx->ij", ops)
        return ProcessBlocks(_project(target, ops), probability, gram, np.zeros((2, 2)), n, tail)
    resource = qubits.channel_state(enc, p, alpha, n)
    vectors = measurement_vectors(enc, n)
    ops = np.zeros((2, 2, d**q, d**q), dtype=np.complex128)
    for label in SUCCESS[enc]:
        block = _receiver_blocks(inputs, resource, vectors[label], q)
        fix = _correction(enc, label, n)
        if fix is not None:
            block = np.einsum("xy,ijyz,wz->ijxw", fix, block, fix.conj())
        ops += block
    probability = np.einsum("ijxx->ij", ops)
    receiver = fock.partial_trace(resource, range(q, 2 * q)).matrix
    return ProcessBlocks(_project(target, ops), probability, gram, _project(target, receiver), n, tail)


def average_over_bloch(
    protocol: Protocol | str,
    encoding: Encoding | str,
    p: LossPoint,
    alpha: float | None = None,
    quad: QuadratureSpec = QuadratureSpec(),
    n_max: int | None = None,
    max_tail: float | None = DEFAULT_MAX_TAIL,
    amplitude: InputAmplitude | str = InputAmplitude.ARM,
) -> BlochAverage:
    """Average fidelity and success probability over the uniform Bloch sphere.

    ``avg_fidelity`` averages each input's success-conditioned fidelity;
    ``pooled_fidelity`` is the alternative ratio of averages,
    ``E[sum p F] / E[sum p]``, reported for comparison.
    """
    blocks = process_blocks(protocol, encoding, p, alpha, n_max, max_tail, amplitude)
    theta, phi, w = quad.nodes()
    coeffs = np.stack([np.cos(0.5 * theta), np.exp(1j * phi) * np.sin(0.5 * theta)], axis=1)
    prob, fid = blocks.evaluate(coeffs)
    return BlochAverage(
        avg_fidelity=float(np.dot(w, fid)),
        avg_success=float(np.dot(w, prob)),
        pooled_fidelity=blocks.pooled(coeffs, w),
        n_max=blocks.n_max,
        tail_mass=blocks.tail_mass,
        min_success=float(prob.min()),
    )
