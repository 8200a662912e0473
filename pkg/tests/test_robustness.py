import numpy as np
import pytest

from spinctrl.model import SpinSystem, make_topology
from spinctrl.objective import gate_target
from spinctrl.propagation import ControlField, grid_for
from spinctrl.robustness import (EnsembleSpec, evaluate_ensemble, sample_system,
                                 write_histogram_csv)

W2_X214 = 1.0 / (np.pi - 2.14)


def nominal_system(gamma=0.02):
    return SpinSystem(m=1, n=1, frequencies=[1.0, W2_X214],
                      couplings=make_topology("star", 1, 1, gamma).coupling)


def small_field(t_f=5.0, dt=0.05):
    grid = grid_for(t_f, dt)
    return ControlField(grid, np.sin(np.pi * grid.times / t_f) ** 2)


def test_zero_sigma_returns_nominal():
    nominal = nominal_system()
    spec = EnsembleSpec(target="couplings", size=1, coupling_divisor=np.inf)
    sampled = sample_system(nominal, spec, np.random.default_rng(0))
    np.testing.assert_array_equal(sampled.couplings, nominal.couplings)
    np.testing.assert_array_equal(sampled.frequencies, nominal.frequencies)


def test_coupling_mode_leaves_frequencies_untouched():
    nominal = nominal_system()
    spec = EnsembleSpec(target="couplings", size=1, seed=1)
    sampled = sample_system(nominal, spec, np.random.default_rng(1))
    assert np.array_equal(sampled.frequencies, nominal.frequencies)
    assert not np.array_equal(sampled.couplings, nominal.couplings)
    np.testing.assert_array_equal(sampled.couplings, sampled.couplings.T)


def test_frequency_mode_leaves_couplings_untouched():
    nominal = nominal_system()
    spec = EnsembleSpec(target="frequencies", size=1, seed=2)
    sampled = sample_system(nominal, spec, np.random.default_rng(2))
    assert np.array_equal(sampled.couplings, nominal.couplings)
    assert not np.array_equal(sampled.frequencies, nominal.frequencies)


def test_sample_mean_obeys_law_of_large_numbers():
    nominal = nominal_system()
    spec = EnsembleSpec(target="couplings", size=1, seed=3)
    rng = np.random.default_rng(3)
    draws = np.array([sample_system(nominal, spec, rng).couplings[0, 1]
                      for _ in range(100_000)])
    gamma, sigma = 0.02, 0.02 / 8
    assert abs(draws.mean() - gamma) < 4 * sigma / np.sqrt(len(draws))
    assert draws.std() == pytest.approx(sigma, rel=0.02)
    assert np.all(draws >= 0.0)


def test_negative_draws_are_redrawn():
    # sigma comparable to the mean makes negative draws frequent
    nominal = nominal_system(gamma=0.001)
    spec = EnsembleSpec(target="couplings", size=64, coupling_divisor=0.5, seed=4)
    gate = gate_target("hadamard")
    report = evaluate_ensemble(nominal, small_field(), gate, spec)
    assert report.redraws > 0


def test_single_member_zero_sigma_equals_nominal_evaluation():
    nominal = nominal_system()
    gate = gate_target("hadamard")
    spec = EnsembleSpec(target="couplings", size=1, coupling_divisor=np.inf, seed=5)
    report = evaluate_ensemble(nominal, small_field(), gate, spec)
    assert report.mean_fidelity == report.nominal_fidelity
    assert report.std_fidelity == 0.0
    assert report.mean_entropy == report.nominal_entropy


def test_ensemble_statistics_definitions():
    nominal = nominal_system()
    gate = gate_target("hadamard")
    spec = EnsembleSpec(target="frequencies", size=32, seed=6)
    report = evaluate_ensemble(nominal, small_field(), gate, spec)
    assert report.size == 32
    assert int(report.fidelity_counts.sum()) == 32
    assert int(report.entropy_counts.sum()) == 32
    assert report.std_fidelity >= 0.0
    assert 0.0 <= report.mean_fidelity <= 1.0


def test_ensemble_deterministic_and_thread_invariant():
    nominal = nominal_system()
    gate = gate_target("hadamard")
    spec = EnsembleSpec(target="couplings", size=24, seed=7)
    r1 = evaluate_ensemble(nominal, small_field(), gate, spec)
    r2 = evaluate_ensemble(nominal, small_field(), gate, spec)
    r3 = evaluate_ensemble(nominal, small_field(), gate, spec, threads=2)
    for other in (r2, r3):
        assert r1.mean_fidelity == other.mean_fidelity
        assert r1.std_fidelity == other.std_fidelity
        np.testing.assert_array_equal(r1.fidelity_counts, other.fidelity_counts)
        np.testing.assert_array_equal(r1.fidelity_edges, other.fidelity_edges)


def test_histogram_csv_round_trip(tmp_path):
    counts = np.array([3, 5, 2])
    edges = np.array([0.0, 0.1, 0.2, 0.3])
    path = tmp_path / "hist.csv"
    write_histogram_csv(path, counts, edges)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count"
    assert len(lines) == 4
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 2], counts)
    np.testing.assert_allclose(data[:, 0], edges[:-1])


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(target="dipoles")
    with pytest.raises(ValueError):
        EnsembleSpec(target="couplings", size=0)


def test_report_json_round_trip(tmp_path):
    nominal = nominal_system()
    gate = gate_target("hadamard")
    spec = EnsembleSpec(target="couplings", size=8, seed=8)
    report = evaluate_ensemble(nominal, small_field(), gate, spec)
    path = tmp_path / "ensemble.json"
    report.write_json(path)
    import json
    data = json.loads(path.read_text())
    assert data["size"] == 8
    assert data["target"] == "couplings"
    assert sum(data["fidelity_hist"]["counts"]) == 8
