"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import time

import numpy as np
import pytest

from telegate.experiment import (
    ExperimentConfig,
    PAPER_SWAP_TARGETS,
    PAPER_TELEPORT_TARGETS,
    calibrate,
    run_experiment,
    simulate_counts,
    swap_summary,
    teleport_summary,
)
from telegate.gate import (
    coincidence_distribution,
    fock_input,
    gate_channel,
    propagate_gate,
)
from telegate.metrics import (
    CHSH_SIGN_FOR_BELL,
    CHSH_VARIANT_FOR_BELL,
    ChshSpec,
    TSIRELSON,
    chsh,
    chsh_best,
    fidelity_pure,
    log_negativity,
)
from telegate.protocols import (
    PRODUCT_FOR_BELL,
    TELEPORT_PAIR_TARGET,
    TILDE_LABELS,
    bsa,
    swap,
    teleport,
    tilde_bell,
)
from telegate.sources import InputSpec, PairSpec, make_input, make_pair, single_qubit_state
from telegate.states import DensityMatrix
from telegate.tomography import mle_fit, linear_inversion, settings_2q
from conftest import ginibre_dm, random_pure

# operating point from the calibration criterion (see test_criterion_7)
CAL_OVERLAP, CAL_PAIR, CAL_INPUT = 0.93, 0.01, 0.14


def report(criterion: str, detail: str):
    print(f"\n[PASS] {criterion}: {detail}")


def test_criterion_1_gate_truth_table():
    start = time.perf_counter()
    channel = gate_channel(1.0)
    assert len(channel.kraus) == 1
    k = channel.kraus[0]
    signs = (1.0, 1.0, 1.0, -1.0)
    for i, sign in enumerate(signs):
        basis = np.zeros(4)
        basis[i] = 1.0
        out = k @ basis
        expected = sign / 3.0 * basis
        assert np.max(np.abs(out - expected)) < 1e-12
        success = float(np.real(out.conj() @ out))
        assert abs(success - 1.0 / 9.0) < 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report("criterion 1", f"truth table exact, success 1/9, {elapsed * 1e3:.0f} ms")


def test_criterion_2_bell_product_mapping():
    for label in TILDE_LABELS:
        rho = tilde_bell(label, ("b", "c")).density()
        outcomes = {o.bell_label: o for o in bsa(rho, ("b", "c"), 1.0)}
        assert abs(outcomes[label].probability - 1.0 / 9.0) < 1e-12
        assert outcomes[label].product_result == PRODUCT_FOR_BELL[label]
        for other in TILDE_LABELS:
            if other != label:
                assert outcomes[other].probability < 1e-12
    report("criterion 2", "all four analyzer Bell states map to their products at 1/9")


def test_criterion_3_distinguishable_enhancement():
    vv = np.zeros((4, 4))
    vv[3, 3] = 1.0
    p0 = gate_channel(0.0).success_probability(vv)
    p1 = gate_channel(1.0).success_probability(vv)
    assert abs(p0 - 5.0 / 9.0) < 1e-12
    assert abs(p0 / p1 - 5.0) < 1e-12
    report("criterion 3", f"VV coincidence probability {p0:.12f} = 5/9, ratio 5")


def test_criterion_4_ideal_teleportation():
    pair = make_pair(PairSpec(TELEPORT_PAIR_TARGET, 0.0), ("a", "b"))
    for name in ("H", "V", "+", "R"):
        res = teleport(make_input(InputSpec(name)), pair, 1.0, correct=True)
        chi = single_qubit_state(name)
        for o in res.outcomes:
            assert fidelity_pure(o.state, chi) > 1.0 - 1e-10
    summary = teleport_summary(1.0)
    ideal = np.zeros((4, 4))
    ideal[0, 0] = 1.0
    assert np.max(np.abs(summary["process_matrix"].entries - ideal)) < 1e-9
    assert abs(summary["F_p"] - 1.0) < 1e-9
    report("criterion 4", "unit fidelity on every outcome for H, V, +, R; F_p = 1")


def test_criterion_5_ideal_swapping():
    pair = make_pair(PairSpec("phi+", 0.0))
    res = swap(pair, pair, 1.0)
    for o in res.outcomes:
        target = tilde_bell(o.bell_label, ("a", "d"))
        assert fidelity_pure(o.state, target) > 1.0 - 1e-10
        assert abs(log_negativity(o.state) - 1.0) < 1e-10
        variant = CHSH_VARIANT_FOR_BELL[o.bell_label]
        s = chsh(o.state, ChshSpec(variant=variant))
        assert abs(abs(s) - TSIRELSON) < 1e-9
        assert np.sign(s) == CHSH_SIGN_FOR_BELL[o.bell_label]
    s_phi_plus = chsh(res.outcome("phi+").state, ChshSpec(variant="+"))
    assert s_phi_plus < 0  # the S+ value for the phi+ outcome is negative
    report("criterion 5", "conditional states exact, N = 1, |S| = 2*sqrt(2) with derived signs")


def test_criterion_6_statistical_pipeline():
    start = time.perf_counter()

    tele = run_experiment(ExperimentConfig(
        protocol="teleport", overlap=1.0, counts_per_setting=100_000, seed=601))
    for name, blk in tele.results["inputs"].items():
        assert blk["fidelity"] > 0.99, name
    assert abs(tele.results["process_fidelity"] - 1.0) < 0.01

    swap_rep = run_experiment(ExperimentConfig(
        protocol="swap", overlap=1.0, counts_per_setting=100_000, seed=602))
    for label, o in swap_rep.results["outcomes"].items():
        assert abs(o["fidelity"] - 1.0) < 0.01, label
        assert abs(o["log_negativity"] - 1.0) < 0.01, label
        assert abs(o["chsh_abs"] - TSIRELSON) < 0.01, label

    # Error bars at the experiment's scale: roughly 500 post-selected events
    # per analyzer outcome, spread over the 9 tomography settings (= 56 per
    # setting), at the calibrated noise level.
    noisy = run_experiment(ExperimentConfig(
        protocol="swap", overlap=CAL_OVERLAP, pair_mixedness=CAL_PAIR,
        counts_per_setting=56, seed=603, bootstrap_resamples=200))
    stderrs = {label: o["fidelity_err"] for label, o in noisy.results["outcomes"].items()}
    for label, err in stderrs.items():
        assert 0.02 <= err <= 0.05, (label, err)

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    report("criterion 6",
           f"N=1e5 reproduces ideal figures within 0.01; fidelity stderr at ~500 events "
           f"per outcome in [0.02, 0.05] ({min(stderrs.values()):.3f}-{max(stderrs.values()):.3f}); "
           f"{elapsed:.0f} s")


def test_criterion_7_calibration():
    targets = dict(PAPER_TELEPORT_TARGETS)
    targets.update(PAPER_SWAP_TARGETS)
    res = calibrate(
        targets,
        overlap_grid=np.linspace(0.86, 1.00, 15),
        pair_grid=np.linspace(0.00, 0.20, 21),
        input_grid=np.linspace(0.00, 0.20, 11),
    )
    pred = teleport_summary(res.overlap, res.pair_mixedness, res.input_mixedness)
    fids = {k: pred[k] for k in ("F_H", "F_V", "F_+", "F_R")}
    assert max(fids, key=fids.get) == "F_H"
    assert min(fids, key=fids.get) == "F_V"
    assert abs(pred["F_p"] - 0.75) <= 0.03
    sw = swap_summary(res.overlap, res.pair_mixedness)
    assert abs(sw["F_avg"] - 0.773) <= 0.05
    assert abs(sw["S_abs_avg"] - 2.14) <= 0.15
    # the frozen operating point used elsewhere tracks this fit
    assert abs(res.overlap - CAL_OVERLAP) < 0.02
    assert abs(res.pair_mixedness - CAL_PAIR) < 0.03
    assert abs(res.input_mixedness - CAL_INPUT) < 0.03
    report("criterion 7",
           f"fit (v={res.overlap:.3f}, pair={res.pair_mixedness:.2f}, "
           f"input={res.input_mixedness:.2f}): F_H highest, F_V lowest, "
           f"F_p={pred['F_p']:.3f}, swap F={sw['F_avg']:.3f}, |S|={sw['S_abs_avg']:.3f}")


class TestCriterion8Properties:
    def test_fock_oracle_vs_kraus(self, rng):
        for v in (0.0, 0.3, 0.7, 1.0):
            channel = gate_channel(v)
            inputs = [np.eye(4)[i] for i in range(4)]
            inputs += [random_pure(2, rng).amplitudes for _ in range(5)]
            for amps in inputs:
                fock = coincidence_distribution(propagate_gate(fock_input(amps, v)))
                kraus = sum(np.abs(k @ amps) ** 2 for k in channel.kraus)
                assert np.max(np.abs(fock - kraus)) < 1e-10
        report("criterion 8a", "Fock propagation equals the Kraus channel on a v grid")

    def test_tsirelson_bound(self, rng):
        worst = 0.0
        for _ in range(1000):
            rho = ginibre_dm(2, rng)
            _, s = chsh_best(rho)
            worst = max(worst, abs(s))
            assert abs(s) <= TSIRELSON + 1e-9
        report("criterion 8b", f"CHSH bounded by 2*sqrt(2) on 1000 random states (max {worst:.3f})")

    def test_werner_chsh_threshold(self):
        # oracle: S is linear in the Bell weight, so |S| = p 2 sqrt 2 and the
        # classical bound falls exactly at p = 1/sqrt 2
        crossings = []
        for p in np.linspace(0.5, 0.9, 41):
            rho = DensityMatrix(
                p * tilde_bell("phi+").density().entries + (1 - p) * np.eye(4) / 4)
            _, s = chsh_best(rho)
            assert abs(abs(s) - p * TSIRELSON) < 1e-9
            crossings.append((p, abs(s) > 2.0))
        threshold = min(p for p, violated in crossings if violated)
        assert threshold > 1 / np.sqrt(2) - 1e-9
        assert min(p for p, _ in crossings if p > 1 / np.sqrt(2)) == pytest.approx(threshold)
        report("criterion 8c", "Werner states violate CHSH exactly above p = 1/sqrt(2)")

    def test_tomography_roundtrip_exact(self, rng):
        from test_tomography import exact_table

        for _ in range(50):
            target = ginibre_dm(2, rng)
            rho = linear_inversion(exact_table(target, ("a", "d")))
            assert np.max(np.abs(rho.entries - target.entries)) < 1e-10
        report("criterion 8d", "linear inversion reproduces exact probabilities to 1e-10")

    def test_statistical_recovery(self):
        target = tilde_bell("phi-", ("a", "d"))
        probs = {s.id: s.probabilities(target.density()) for s in settings_2q()}
        table = simulate_counts(probs, 1_000_000, {}, seed=86, modes=("a", "d"))
        fid = fidelity_pure(mle_fit(table), target)
        assert fid >= 0.999
        report("criterion 8e", f"MLE recovery fidelity {fid:.5f} at one million events per setting")

    def test_classical_teleportation_bound(self):
        pair = make_pair(PairSpec(TELEPORT_PAIR_TARGET, 1.0), ("a", "b"))
        fids = []
        for name in ("H", "V", "+", "R"):
            res = teleport(make_input(InputSpec(name)), pair, 1.0, correct=True)
            fids.append(sum(o.probability * fidelity_pure(o.state, single_qubit_state(name))
                            for o in res.outcomes) / res.success_probability)
        average = float(np.mean(fids))
        assert average <= 2 / 3 + 0.01
        report("criterion 8f", f"separable pair caps average fidelity at {average:.3f} <= 2/3")
