"""Acceptance suite: one group per criterion, summarized as PASS/FAIL lines at the end of the run."""
import time

import numpy as np
import pytest
import yaml

from istbench.bmv import HYPOTHESES, BmvParams, entanglement_witness, evolve_bmv, sample_witness, witness_sweep
from istbench.cli import main
from istbench.harness import ExperimentConfig, run_experiment
from istbench.ist import IstParams, max_entangled_qubits, min_N_for_qubits, survival_probability
from istbench.optics import (W4_SIGN_PATTERNS, build_w_network, certification_network,
                             certification_transform, detector_distribution, phase_permutation_state,
                             return_probability, run_network, walsh_pattern)
from istbench.quantum import density_from_pure, fidelity_with_pure, maximally_mixed, w_state
from istbench.spdc import combine_apertures, correlation_score, make_double_w

from oracles import (brute_correlator, naive_run, naive_tree_elements,
                     sylvester_hadamard)


def criterion(n, text):
    return pytest.mark.criterion(n, text)


@criterion(1, "W-state fidelity >= 1 - 1e-10 for I = 1..12 in under 10 s")
def test_c1_w_state_generation():
    start = time.perf_counter()
    fids = [fidelity_with_pure(run_network(build_w_network(i)), w_state(2 ** i)) for i in range(1, 13)]
    elapsed = time.perf_counter() - start
    assert min(fids) >= 1 - 1e-10
    assert elapsed < 10.0


@criterion(2, "survival law 0.990045 / 0.980189 and exact sweep")
def test_c2_survival_values():
    assert survival_probability(0.001, 1024, False) == pytest.approx(0.990045, abs=1e-6)
    assert survival_probability(0.001, 1024, True) == pytest.approx(0.980189, abs=1e-6)


@criterion(2, "survival law 0.990045 / 0.980189 and exact sweep")
def test_c2_sweep_exact():
    t = run_experiment(ExperimentConfig.from_dict({"experiment": "sweep",
                                                   "sweep": {"loss_per_element": 0.001}}))
    assert [r["M"] for r in t.rows] == [2 ** k for k in range(1, 11)]
    for r in t.rows:
        assert r["survival"] == (1 - 0.001) ** np.log2(r["M"])


@criterion(2, "survival law 0.990045 / 0.980189 and exact sweep")
def test_c2_simulated_loss_agrees():
    # the network itself loses photons at the same rate
    rho = run_network(build_w_network(10, 0.001))
    assert rho.photon_trace() == pytest.approx(survival_probability(0.001, 1024), abs=1e-12)


@criterion(3, "return probability: identity 1, full dephase 2^-I, partial between and monotone")
@pytest.mark.parametrize("I", range(0, 13))
def test_c3_dichotomy(I):
    net = build_w_network(I)
    assert return_probability(net, 0, "identity") == pytest.approx(1.0, abs=1e-10)
    assert return_probability(net, 0, "full-dephase") == pytest.approx(2.0 ** -I, abs=1e-10)


@criterion(3, "return probability: identity 1, full dephase 2^-I, partial between and monotone")
@pytest.mark.parametrize("I", [2, 3, 6])
def test_c3_partial_between_and_monotone(I):
    net = build_w_network(I)
    gammas = np.linspace(0.05, 0.95, 10)
    vals = [return_probability(net, 0, IstParams(1.0, "partial", g)) for g in gammas]
    assert all(2.0 ** -I < v < 1.0 for v in vals)
    assert all(a < b for a, b in zip(vals, vals[1:]))


@criterion(4, "certification: distinct detectors, mixed input uniform, Walsh check M = 8, 16")
def test_c4_four_state_basis():
    u = certification_transform(4)
    hits = []
    for pattern in W4_SIGN_PATTERNS.values():
        p = detector_distribution(density_from_pure(phase_permutation_state(pattern)), u)
        k = int(np.argmax(p))
        assert p[k] == pytest.approx(1.0, abs=1e-10)
        hits.append(k)
    assert len(set(hits)) == 4


@criterion(4, "certification: distinct detectors, mixed input uniform, Walsh check M = 8, 16")
def test_c4_maximally_mixed():
    p = detector_distribution(maximally_mixed(4), certification_network(4))
    np.testing.assert_allclose(p[:4], 0.25, atol=1e-10)


@criterion(4, "certification: distinct detectors, mixed input uniform, Walsh check M = 8, 16")
@pytest.mark.parametrize("M", [4, 8, 16])
def test_c4_walsh_brute_force(M):
    net = certification_network(M)
    h = sylvester_hadamard(M)
    # rows are mutually orthogonal, so each pattern lights exactly one detector
    np.testing.assert_allclose(h @ h.T, np.eye(M), atol=1e-12)
    for r in range(M):
        np.testing.assert_allclose(walsh_pattern(r, M), h[r] * np.sqrt(M), atol=1e-12)
        p = detector_distribution(density_from_pure(phase_permutation_state(r, M)), net)
        assert p[r] == pytest.approx(1.0, abs=1e-10)


@criterion(5, "IST cutoff at N = 2^8: I = 4 gives 1/16, I = 3 gives 1; qubit round trip")
def test_c5_cutoff():
    ist = IstParams(8.0)
    assert return_probability(build_w_network(4), 0, ist) == pytest.approx(1 / 16, abs=1e-10)
    assert return_probability(build_w_network(3), 0, ist) == pytest.approx(1.0, abs=1e-10)


@criterion(5, "IST cutoff at N = 2^8: I = 4 gives 1/16, I = 3 gives 1; qubit round trip")
def test_c5_round_trip():
    for M in range(1, 4097):
        assert max_entangled_qubits(IstParams(min_N_for_qubits(M))) == M


@criterion(6, "SPDC: shared phase scores 1 for 100 seeds; independent control within 3 sigma of 1/M")
@pytest.mark.parametrize("M", [4, 8])
def test_c6_shared(M):
    rounds = M.bit_length() - 1
    for seed in range(100):
        _, joint = combine_apertures(make_double_w(M, seed, "shared"), rounds)
        assert correlation_score(joint) == pytest.approx(1.0, abs=1e-10)


@criterion(6, "SPDC: shared phase scores 1 for 100 seeds; independent control within 3 sigma of 1/M")
@pytest.mark.parametrize("M", [4, 8])
def test_c6_independent_control(M):
    rng = np.random.default_rng(M)
    rounds = M.bit_length() - 1
    s = np.array([correlation_score(combine_apertures(make_double_w(M, None, "independent", rng), rounds)[1])
                  for _ in range(10_000)])
    se = s.std(ddof=1) / np.sqrt(s.size)
    assert abs(s.mean() - 1 / M) < 3 * se


@criterion(7, "BMV: decoherent witness 0, coherent sweep > 1 (brute-force checked), sampling within 3 se")
@pytest.mark.parametrize("h", [h for h in HYPOTHESES if h != "coherent-gravity"])
def test_c7_decoherent_zero(h):
    for tau in np.linspace(0, 10, 21):
        assert entanglement_witness(evolve_bmv(BmvParams(tau_s=float(tau)), h)) == pytest.approx(0.0, abs=1e-12)


@criterion(7, "BMV: decoherent witness 0, coherent sweep > 1 (brute-force checked), sampling within 3 se")
def test_c7_coherent_sweep():
    taus = np.linspace(0, 10, 1001)
    w = witness_sweep(BmvParams(), taus)
    k = int(np.argmax(w))
    assert w[k] > 1
    rho = evolve_bmv(BmvParams(tau_s=float(taus[k])), "coherent-gravity").matrix
    brute = abs(brute_correlator(rho, "x", "z") - brute_correlator(rho, "y", "z"))
    assert w[k] == pytest.approx(brute, abs=1e-12)


@criterion(7, "BMV: decoherent witness 0, coherent sweep > 1 (brute-force checked), sampling within 3 se")
def test_c7_sampled():
    rho = evolve_bmv(BmvParams(), "coherent-gravity")
    est, se = sample_witness(rho, 10 ** 6, seed=2024)
    assert abs(est - entanglement_witness(rho)) < 3 * se


def butterfly_elements(M):
    return [(j, j | 1 << k) for k in range(M.bit_length() - 1) for j in range(M) if not j >> k & 1]


@criterion(8, "fast network path equals naive matrix product within 1e-12 for I <= 3")
@pytest.mark.parametrize("I", range(0, 4))
@pytest.mark.parametrize("p", [0.0, 0.01, 0.3])
@pytest.mark.parametrize("conv", ["real-hadamard", "symmetric-phase"])
def test_c8_generation(I, p, conv):
    expected = naive_run(naive_tree_elements(I), 2 ** I, p, symmetric=conv == "symmetric-phase")
    got = run_network(build_w_network(I, p, conv)).matrix
    assert np.abs(got - expected).max() < 1e-12


@criterion(8, "fast network path equals naive matrix product within 1e-12 for I <= 3")
@pytest.mark.parametrize("I", range(1, 4))
def test_c8_certification(I):
    M = 2 ** I
    rho = run_network(build_w_network(I, 0.05))
    expected = naive_run(butterfly_elements(M), M, 0.05, rho=rho.matrix.copy())
    got = detector_distribution(rho, certification_network(M, 0.05))
    np.testing.assert_allclose(got, np.real(np.diag(expected)), atol=1e-12)


@criterion(9, "re-runs with identical config and seed are byte-identical")
@pytest.mark.parametrize("experiment, block", [
    ("wstate", {"iterations": [1, 2, 3], "ist": {"log2_N": 4}}),
    ("certify", {"iterations": 2, "ist": {"log2_N": 2}}),
    ("return-prob", {"iterations": [1, 2, 3], "channel": "full-dephase"}),
    ("spdc", {"sectors": [4, 8]}),
    ("bmv", {"tau_points": 11}),
    ("sweep", {"kind": "survival"})])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_c9_reproducible(tmp_path, experiment, block, fmt):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"experiment": experiment, "seed": 99, "runs": 300,
                                   "format": fmt, experiment: block}))
    outs = []
    for k in range(2):
        out = tmp_path / f"{k}.{fmt}"
        assert main([experiment, "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
