"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary)
before asserting, so a failing criterion still reports what it measured.
"""

import math

import numpy as np

from qtx import analysis, analytic, channel, cli, qubits, simulate
from qtx.analysis import ComparisonRegion, NoCrossing
from qtx.channel import LossPoint
from qtx.qubits import BlochAngles, Encoding, QubitSpec
from qtx.simulate import InputAmplitude, Protocol, QuadratureSpec

R21 = np.linspace(0.0, 1.0, 21)
R11 = np.linspace(0.0, 1.0, 11)
COH_ALPHAS = (0.3, 0.979, 1.5)
QUAD = QuadratureSpec(32, 32)


def worst(pairs):
    return max(abs(a - b) for a, b in pairs)


def test_a1_classical_crossings(verdict):
    got = {rep.name: rep.value for rep in analysis.classical_crossings()}
    want = {
        "vsp_direct": (0.91018, 1e-4),
        "vsp_teleport": (0.928, 1e-3),
        "psp_direct": (0.57735, 1e-6),
        "psp_teleport": (0.74536, 1e-6),
    }
    # the psp targets are rounded; compare against the exact roots at the stated tolerance
    exact = {"psp_direct": 1 / math.sqrt(3), "psp_teleport": math.sqrt(5) / 3}
    ok = all(abs(got[k] - exact.get(k, v)) <= tol for k, (v, tol) in want.items())
    detail = ", ".join(f"{k}={got[k]:.7f}" for k in want)
    assert verdict("A1", ok, detail)


def test_a2_equal_mean_photon(verdict):
    rep = analysis.alpha_equal_mean_photon()
    assert verdict("A2", abs(rep.value - 0.979) <= 1e-3, f"alpha={rep.value:.7f}")


def test_a3_dominance_and_boundary(verdict):
    dom = analysis.alpha_teleport_dominance()
    try:
        analysis.rc_boundary(0.6)
        small_none = False
    except NoCrossing:
        small_none = True
    rc = analysis.rc_boundary(1.5)
    below = analysis.t_of_r(np.linspace(0.0, rc.value, 50)[1:-1])
    direct_wins = bool(np.all(analytic.f_direct_coh(below, 1.5) > analytic.f_teleport_coh(below, 1.5)))
    ok = abs(dom.value - 0.636) <= 0.02 and small_none and 0 < rc.value < 1 and direct_wins
    detail = f"dominance={dom.value:.7f}, rc(0.6)={'none' if small_none else 'found'}, rc(1.5)={rc.value:.7f}, direct superior below: {direct_wins}"
    assert verdict("A3", ok, detail)


def test_a4_coherent_vs_psp(verdict):
    want = {"direct": 1.222, "teleport": 0.802}
    matching = {}
    values = {}
    for region in ComparisonRegion:
        reps = {p: analysis.alpha_vs_psp(p, region) for p in want}
        values[region.name] = {p: r.value for p, r in reps.items()}
        matching[region.name] = all(abs(reps[p].value - want[p]) <= 0.05 for p in want)
    ok = any(matching.values())
    semantics = [name for name, m in matching.items() if m]
    detail = "; ".join(f"{name}: direct={v['direct']:.7f} teleport={v['teleport']:.7f}" for name, v in values.items())
    assert verdict("A4", ok, f"{detail}; matching semantics: {', '.join(semantics) or 'none'}")


def test_a5_exact_encodings(verdict):
    fid_pairs, succ_pairs = [], []
    for r in R21:
        p = LossPoint.from_r(r)
        for enc in (Encoding.VSP, Encoding.PSP):
            for protocol in Protocol:
                avg = simulate.average_over_bloch(protocol, enc, p, quad=QUAD, n_max=4)
                fid_pairs.append((avg.avg_fidelity, analytic.fidelity(protocol.value, enc.value, p.t)))
                if protocol is Protocol.TELEPORT:
                    succ_pairs.append((avg.avg_success, 0.5 if enc is Encoding.VSP else p.t / 2))
    # per-outcome receiver blocks against the closed-form mixture
    mix_err = 0.0
    for r in R21[:-1]:
        eta = LossPoint.from_r(r).t
        for b in (BlochAngles(0.0), BlochAngles(1.0, 0.3), BlochAngles(2.2, 4.1), BlochAngles(math.pi)):
            psi = qubits.make_vsp(b)
            want = eta / 4 * psi.dm().matrix + (1 - eta) * abs(b.nu) ** 2 / 2 * np.diag([1.0, 0.0])
            for o in simulate.run_teleport(QubitSpec(Encoding.VSP, b), LossPoint.from_r(r)):
                if o.output is not None:
                    mix_err = max(mix_err, float(np.max(np.abs(o.probability * o.output.matrix - want))))
    f_err, s_err = worst(fid_pairs), worst(succ_pairs)
    ok = f_err <= 1e-9 and s_err <= 1e-9 and mix_err <= 1e-12
    assert verdict("A5", ok, f"max |fidelity diff|={f_err:.2e}, max |success diff|={s_err:.2e}, mixture entrywise={mix_err:.2e}")


def _coherent_errors(amplitude):
    f_err, s_err = 0.0, 0.0
    for alpha in COH_ALPHAS:
        for r in R11:
            p = LossPoint.from_r(r)
            for protocol in Protocol:
                if protocol is Protocol.DIRECT and amplitude is InputAmplitude.FRESH:
                    continue  # direct transmission has no arm amplitude to choose
                avg = simulate.average_over_bloch(protocol, Encoding.COH, p, alpha, QUAD, max_tail=1e-10, amplitude=amplitude)
                f_err = max(f_err, abs(avg.avg_fidelity - analytic.fidelity(protocol.value, "coh", p.t, alpha)))
                if protocol is Protocol.TELEPORT:
                    s_err = max(s_err, abs(avg.avg_success - 0.5))
    return f_err, s_err


def test_a6_coherent_encoding(verdict):
    f_err, s_err = _coherent_errors(InputAmplitude.ARM)
    ok = f_err <= 1e-4 and s_err <= 1e-4
    detail = f"arm-matched input: max |fidelity diff|={f_err:.2e}, max |success - 1/2|={s_err:.2e}"
    if not ok:
        fresh_f, fresh_s = _coherent_errors(InputAmplitude.FRESH)
        ok = fresh_f <= 1e-4 and fresh_s <= 1e-4
        detail += f"; fresh-amplitude input: {fresh_f:.2e}, {fresh_s:.2e}"
    assert verdict("A6", ok, detail)


def test_a6_fresh_amplitude_alternative_rejected():
    """The fresh-amplitude teleport input disagrees with the closed form, which is why it is not the default."""
    p = LossPoint.from_r(0.6)
    avg = simulate.average_over_bloch("teleport", "coh", p, 0.979, QUAD, max_tail=1e-10, amplitude="fresh")
    assert abs(avg.avg_fidelity - analytic.f_teleport_coh(p.t, 0.979)) > 1e-4


def test_a7_small_amplitude_limit(verdict):
    t = analysis.t_of_r(R11)
    gaps = {
        protocol: float(np.max(np.abs(analytic.fidelity(protocol, "coh", t, 0.05) - analytic.fidelity(protocol, "vsp", t))))
        for protocol in ("direct", "teleport")
    }
    ok = all(g <= 1e-3 for g in gaps.values())
    assert verdict("A7", ok, f"direct gap={gaps['direct']:.2e}, teleport gap={gaps['teleport']:.2e}")


def _curves_ok(t, lower):
    results = {}
    for enc, alpha in (("vsp", None), ("psp", None), ("coh", 0.979)):
        for protocol in ("direct", "teleport"):
            f = np.asarray(analytic.fidelity(protocol, enc, t, alpha))
            # t decreases along the r grid, so non-increasing in r means non-decreasing in t
            monotone = bool(np.all(np.diff(f) >= -1e-14))
            bounded = bool(np.all(f >= lower - 1e-12) and np.all(f <= 1.0 + 1e-12))
            results[f"{protocol}_{enc}"] = (monotone, bounded, float(f.min()))
    return results


def test_a8_properties(verdict, tmp_path):
    failures = []
    n = 25
    completeness = sum(k.conj().T @ k for k in channel.kraus_ops(0.37, n))
    if np.max(np.abs(completeness - np.eye(n + 1))) > 1e-14:
        failures.append("kraus completeness")
    rho = qubits.channel_state(Encoding.COH, LossPoint.from_t(1.0), 1.0, n)
    two = channel.apply_loss(channel.apply_loss(rho, 0.6, [0, 1]), 0.7, [0, 1])
    if np.max(np.abs(two.matrix - channel.apply_loss(rho, 0.42, [0, 1]).matrix)) > 1e-12:
        failures.append("semigroup")

    t = analysis.t_of_r(np.linspace(1.0, 0.0, 2001))
    for name, (monotone, bounded, lowest) in _curves_ok(t, 0.5).items():
        if not monotone:
            failures.append(f"{name} not monotone")
        if not bounded:
            failures.append(f"{name} leaves [1/2, 1] (min {lowest:.3g})")
    for enc in ("vsp", "psp"):
        if np.any(analytic.fidelity("teleport", enc, t) < analytic.fidelity("direct", enc, t)):
            failures.append(f"{enc} teleport below direct")
    if np.any(analytic.p_success("psp", t) > analytic.p_success("vsp", t)):
        failures.append("psp success above vsp")

    outputs = set()
    for threads in (1, 2, 4):
        path = tmp_path / f"coh_{threads}.csv"
        code = cli.main(["curves", "--encoding", "coh", "--alpha", "1.2", "--steps", "201", "--threads", str(threads), "-o", str(path)])
        outputs.add((code, path.read_bytes()))
    if len(outputs) != 1:
        failures.append("csv differs across thread counts")

    detail = "all properties hold" if not failures else "; ".join(failures)
    assert verdict("A8", not failures, detail)
